use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LmError, TrainingConfig, Vocabulary};
use crate::artifact::{self, TensorSpec};
use crate::nn::{AdamState, Architecture, Network};

pub const KIND: &str = "language_model";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    FineTune,
}

/// Loss summary of one training epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub phase: Phase,
    pub epoch: usize,
    /// Mean training loss over the epoch, nats per symbol (with dropout).
    pub loss: f64,
    pub symbols: usize,
    pub updates: usize,
}

/// A trained language model with everything needed to sample from it or
/// continue training.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub vocabulary: Vocabulary,
    pub network: Network<f32>,
    pub config: TrainingConfig,
    pub history: Vec<EpochRecord>,
    pub optimizer: Option<AdamState<f32>>,
}

#[derive(Serialize, Deserialize)]
struct Body {
    vocabulary: Vocabulary,
    architecture: Architecture,
    dropout: f64,
    seed: u64,
    config: TrainingConfig,
    history: Vec<EpochRecord>,
    optimizer_step: Option<u64>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>, LmError> {
        let body = Body {
            vocabulary: self.vocabulary.clone(),
            architecture: self.network.architecture(),
            dropout: self.config.dropout,
            seed: self.config.seed,
            config: self.config.clone(),
            history: self.history.clone(),
            optimizer_step: self.optimizer.as_ref().map(|o| o.step),
        };
        let names = self.network.tensor_names();
        let shapes = self.network.tensor_shapes();
        let mut tensors: Vec<(TensorSpec, &[f32])> = Vec::new();
        for ((name, shape), data) in names.iter().zip(&shapes).zip(self.network.tensors()) {
            tensors.push((TensorSpec { name: name.clone(), shape: shape.clone() }, data));
        }
        if let Some(opt) = &self.optimizer {
            for (prefix, moments) in [("adam.m.", &opt.m), ("adam.v.", &opt.v)] {
                for ((name, shape), data) in names.iter().zip(&shapes).zip(moments.tensors()) {
                    tensors.push((
                        TensorSpec {
                            name: format!("{prefix}{name}"),
                            shape: shape.clone(),
                        },
                        data,
                    ));
                }
            }
        }
        Ok(artifact::encode(KIND, &body, &tensors)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LmError> {
        let artifact::Container { body, tensors, .. } = artifact::decode::<Body>(bytes, KIND)?;
        let find = |name: &str| tensors.iter().find(|(s, _)| s.name == name).map(|(_, d)| d.as_slice());
        if body.architecture.input_size != body.vocabulary.len() || body.architecture.output_size != body.vocabulary.len() {
            return Err(LmError::VocabularyMismatch(format!(
                "checkpoint vocabulary has {} symbols but the network expects {}",
                body.vocabulary.len(),
                body.architecture.input_size
            )));
        }
        let mut network = Network::<f32>::zeros(&body.architecture);
        let names = network.tensor_names();
        let fill = |net: &mut Network<f32>, prefix: &str| -> Result<(), LmError> {
            for (name, dst) in names.iter().zip(net.tensors_mut()) {
                let full = format!("{prefix}{name}");
                let src = find(&full)
                    .ok_or_else(|| artifact::ArtifactError::CorruptPayload(format!("missing tensor {full}")))?;
                if src.len() != dst.len() {
                    return Err(artifact::ArtifactError::CorruptPayload(format!("tensor {full} has the wrong size")).into());
                }
                dst.copy_from_slice(src);
            }
            Ok(())
        };
        fill(&mut network, "")?;
        let optimizer = match body.optimizer_step {
            Some(step) => {
                let mut state = AdamState::new(&network);
                state.step = step;
                fill(&mut state.m, "adam.m.")?;
                fill(&mut state.v, "adam.v.")?;
                Some(state)
            }
            None => None,
        };
        Ok(Checkpoint {
            vocabulary: body.vocabulary,
            network,
            config: body.config,
            history: body.history,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        Ok(artifact::write_file(path, &self.to_bytes()?)?)
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        Self::from_bytes(&artifact::read_file(path)?)
    }
}
