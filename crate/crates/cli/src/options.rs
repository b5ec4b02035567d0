//! Resolved options of every subcommand. Field names double as config-file
//! keys and, with dashes, as flag names.

use serde::{Deserialize, Serialize};

use chemlm::lm::{FineTuneConfig, SeedPolicy, TrainingConfig};
use chemlm::metrics::{DEFAULT_RADIUS, DEFAULT_WIDTH};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanonOptions {
    pub input: String,
    pub out: String,
    pub dedup: bool,
    pub skip_invalid: bool,
}

impl Default for CanonOptions {
    fn default() -> Self {
        CanonOptions {
            input: "-".into(),
            out: "canonical.smi".into(),
            dedup: false,
            skip_invalid: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabOptions {
    pub input: String,
    pub out: String,
}

impl Default for VocabOptions {
    fn default() -> Self {
        VocabOptions {
            input: "-".into(),
            out: "vocab.json".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    pub corpus: String,
    pub out: String,
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub batch: usize,
    pub unroll: usize,
    pub clip: f64,
    pub lr: f64,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        let d = TrainingConfig::default();
        TrainOptions {
            corpus: String::new(),
            out: "model.clm".into(),
            layers: d.layers,
            hidden: d.hidden,
            dropout: d.dropout,
            batch: d.batch_size,
            unroll: d.unroll,
            clip: d.clip_norm,
            lr: d.learning_rate,
            epochs: d.epochs,
            patience: d.patience,
            seed: d.seed,
        }
    }
}

impl TrainOptions {
    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            layers: self.layers,
            hidden: self.hidden,
            dropout: self.dropout,
            batch_size: self.batch,
            unroll: self.unroll,
            clip_norm: self.clip,
            learning_rate: self.lr,
            epochs: self.epochs,
            seed: self.seed,
            patience: self.patience,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneOptions {
    pub base: String,
    pub corpus: String,
    pub out: String,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub unroll: usize,
    pub clip: f64,
    pub dropout: Option<f64>,
    pub seed: u64,
}

impl Default for FinetuneOptions {
    fn default() -> Self {
        let d = FineTuneConfig::default();
        FinetuneOptions {
            base: String::new(),
            corpus: String::new(),
            out: "finetuned.clm".into(),
            epochs: d.epochs,
            lr: d.learning_rate,
            batch: d.batch_size,
            unroll: d.unroll,
            clip: d.clip_norm,
            dropout: d.dropout,
            seed: d.seed,
        }
    }
}

/// Fine-tuning knobs shared by `finetune`, `cycle` and `sweep`.
pub fn fine_tune_config(epochs: usize, lr: f64, batch: usize, unroll: usize, clip: f64, dropout: Option<f64>, seed: u64) -> FineTuneConfig {
    FineTuneConfig {
        epochs,
        learning_rate: lr,
        batch_size: batch,
        unroll,
        clip_norm: clip,
        dropout,
        seed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleOptions {
    pub model: String,
    pub out: String,
    /// Stop after this many symbols (EOL included).
    pub symbols: Option<usize>,
    /// Stop after this many lines.
    pub molecules: Option<usize>,
    pub temperature: f64,
    pub seed: u64,
    pub seed_policy: SeedPolicy,
    pub max_line_symbols: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            model: String::new(),
            out: "samples.smi".into(),
            symbols: None,
            molecules: None,
            temperature: 1.0,
            seed: 0,
            seed_policy: SeedPolicy::Eol,
            max_line_symbols: 400,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FpKind {
    Ecfp,
    Descriptors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpOptions {
    pub input: String,
    pub out: String,
    pub kind: FpKind,
    pub radius: usize,
    pub width: usize,
}

impl Default for FpOptions {
    fn default() -> Self {
        FpOptions {
            input: "-".into(),
            out: "fingerprints.csv".into(),
            kind: FpKind::Ecfp,
            radius: DEFAULT_RADIUS,
            width: DEFAULT_WIDTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TpmFitOptions {
    pub activities: String,
    pub out: String,
    /// p-scale of the threshold: pIC50 (IC50 records are converted) or pMIC.
    pub measure: String,
    pub cutoff: f64,
    pub l2: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub radius: usize,
    pub width: usize,
    pub cv_folds: Option<usize>,
    pub seed: u64,
}

impl Default for TpmFitOptions {
    fn default() -> Self {
        let d = chemlm::tpm::FitConfig::default();
        TpmFitOptions {
            activities: String::new(),
            out: "tpm.clm".into(),
            measure: "pIC50".into(),
            cutoff: 7.0,
            l2: d.l2,
            max_iterations: d.max_iterations,
            tolerance: d.tolerance,
            radius: DEFAULT_RADIUS,
            width: DEFAULT_WIDTH,
            cv_folds: None,
            seed: d.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TpmPredictOptions {
    pub model: String,
    pub input: String,
    pub out: String,
}

impl Default for TpmPredictOptions {
    fn default() -> Self {
        TpmPredictOptions {
            model: String::new(),
            input: "-".into(),
            out: "predictions.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitOptions {
    pub input: String,
    pub train_out: String,
    pub test_out: String,
    pub train_fraction: Option<f64>,
    pub train_count: Option<usize>,
    pub test_count: Option<usize>,
    pub dedup: bool,
    pub seed: u64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            input: "-".into(),
            train_out: "train.smi".into(),
            test_out: "test.smi".into(),
            train_fraction: None,
            train_count: None,
            test_count: None,
            dedup: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub generated: String,
    /// Training corpus: novelty filter, similarity reference and edit
    /// distance target.
    pub training: Option<String>,
    pub test: Option<String>,
    /// Library sampled from the unbiased model, for enrichment over random.
    pub random: Option<String>,
    /// Similarity reference when it differs from the training corpus.
    pub reference: Option<String>,
    pub bin_width: f64,
    pub radius: usize,
    pub width: usize,
    pub out: String,
    pub similarity_csv: String,
    pub edit_distance_csv: String,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            generated: String::new(),
            training: None,
            test: None,
            random: None,
            reference: None,
            bin_width: 0.05,
            radius: DEFAULT_RADIUS,
            width: DEFAULT_WIDTH,
            out: "eval.txt".into(),
            similarity_csv: "similarity_histogram.csv".into(),
            edit_distance_csv: "edit_distance_histogram.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleOptions {
    pub base: String,
    pub tpm: String,
    pub state_dir: String,
    pub out: String,
    pub pool_out: String,
    pub iterations: usize,
    pub sample_symbols: usize,
    pub temperature: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub unroll: usize,
    pub clip: f64,
    pub dropout: Option<f64>,
    pub seed: u64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        let d = chemlm::pipeline::CycleConfig::default();
        CycleOptions {
            base: String::new(),
            tpm: String::new(),
            state_dir: "cycle_state".into(),
            out: "cycle.csv".into(),
            pool_out: "pool.smi".into(),
            iterations: d.iterations,
            sample_symbols: d.sample_symbols,
            temperature: d.temperature,
            epochs: d.fine_tune.epochs,
            lr: d.fine_tune.learning_rate,
            batch: d.fine_tune.batch_size,
            unroll: d.fine_tune.unroll,
            clip: d.fine_tune.clip_norm,
            dropout: d.fine_tune.dropout,
            seed: d.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub base: String,
    pub actives: String,
    pub tpm: Option<String>,
    pub training: Option<String>,
    pub dir: String,
    pub out: String,
    pub sample_symbols: usize,
    pub temperature: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub unroll: usize,
    pub clip: f64,
    pub dropout: Option<f64>,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        let d = FineTuneConfig::default();
        SweepOptions {
            base: String::new(),
            actives: String::new(),
            tpm: None,
            training: None,
            dir: "sweep".into(),
            out: "sweep.csv".into(),
            sample_symbols: 10_000,
            temperature: 1.0,
            epochs: d.epochs,
            lr: d.learning_rate,
            batch: d.batch_size,
            unroll: d.unroll,
            clip: d.clip_norm,
            dropout: d.dropout,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthOptions {
    pub out: String,
    pub molecules: usize,
    pub motif_rate: f64,
    /// Also write IC50 records for the planted-motif target to this file.
    pub activities: Option<String>,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        let d = chemlm::pipeline::synth::SynthConfig::default();
        SynthOptions {
            out: "corpus.smi".into(),
            molecules: d.molecules,
            motif_rate: d.motif_rate,
            activities: None,
            seed: d.seed,
        }
    }
}
