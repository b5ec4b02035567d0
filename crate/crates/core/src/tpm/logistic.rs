use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActivityClassifier, FingerprintConfig, LabeledSet, ThresholdRule, TpmError};
use crate::artifact::{self, ArtifactError, TensorSpec};
use crate::metrics::{Fingerprint, MetricsError};
use crate::nn::sigmoid;

pub const KIND: &str = "tpm";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// L2 penalty `lambda / 2 * |w|^2` added to the mean log loss.
    pub l2: f64,
    pub max_iterations: usize,
    /// Stop when the gradient norm falls below this value.
    pub tolerance: f64,
    /// Recorded for provenance; full-batch fitting uses no randomness.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            l2: 1e-3,
            max_iterations: 2000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// L2-regularised logistic regression on fingerprint bits.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: FitConfig,
    pub rule: Option<ThresholdRule>,
    pub fingerprint: FingerprintConfig,
    pub iterations: usize,
    pub training_accuracy: f64,
}

#[derive(Serialize, Deserialize)]
struct Body {
    config: FitConfig,
    rule: Option<ThresholdRule>,
    fingerprint: FingerprintConfig,
    iterations: usize,
    training_accuracy: f64,
}

struct Objective {
    features: Vec<Vec<usize>>,
    labels: Vec<f64>,
    width: usize,
    l2: f64,
}

impl Objective {
    fn score(&self, w: &[f64], b: f64, x: &[usize]) -> f64 {
        b + x.iter().map(|&i| w[i]).sum::<f64>()
    }

    /// Regularised mean log loss and its gradient.
    fn evaluate(&self, w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
        let n = self.labels.len() as f64;
        let mut loss = 0.0;
        let mut gw = vec![0.0; self.width];
        let mut gb = 0.0;
        for (x, &y) in self.features.iter().zip(&self.labels) {
            let z = self.score(w, b, x);
            // log(1 + e^z) - y z, evaluated stably.
            loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z;
            let r = (sigmoid(z) - y) / n;
            gb += r;
            for &i in x {
                gw[i] += r;
            }
        }
        loss /= n;
        for (g, &wi) in gw.iter_mut().zip(w) {
            *g += self.l2 * wi;
        }
        loss += 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        (loss, gw, gb)
    }
}

impl LogisticRegression {
    /// Zero weights: probability 0.5 for every input.
    pub fn zeros(width: usize) -> Self {
        LogisticRegression {
            weights: vec![0.0; width],
            bias: 0.0,
            config: FitConfig::default(),
            rule: None,
            fingerprint: FingerprintConfig {
                width,
                ..FingerprintConfig::default()
            },
            iterations: 0,
            training_accuracy: 0.0,
        }
    }

    /// Full-batch gradient descent with backtracking line search. Final
    /// parameters are rounded to `f32` so a saved and reloaded model predicts
    /// exactly like the fitted one.
    pub fn fit(set: &LabeledSet, config: &FitConfig) -> Result<Self, TpmError> {
        if set.is_empty() {
            return Err(TpmError::EmptyTrainingSet);
        }
        let actives = set.actives();
        if actives == 0 {
            return Err(TpmError::SingleClassTrainingSet("inactive"));
        }
        if actives == set.len() {
            return Err(TpmError::SingleClassTrainingSet("active"));
        }
        if !(config.l2 >= 0.0 && config.tolerance > 0.0) {
            return Err(TpmError::InvalidConfig("l2 must be >= 0 and tolerance > 0".into()));
        }
        let width = set.fingerprint.width;
        let obj = Objective {
            features: set.entries.iter().map(|e| e.fingerprint.set_bits()).collect(),
            labels: set.entries.iter().map(|e| if e.active { 1.0 } else { 0.0 }).collect(),
            width,
            l2: config.l2,
        };
        let mut w = vec![0.0; width];
        let mut b = 0.0;
        let (mut loss, mut gw, mut gb) = obj.evaluate(&w, b);
        let mut step = 1.0;
        let mut iterations = 0;
        while iterations < config.max_iterations {
            let g2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
            if g2.sqrt() < config.tolerance {
                break;
            }
            iterations += 1;
            let mut accepted = false;
            while step > 1e-12 {
                let w_new: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
                let b_new = b - step * gb;
                let (l_new, gw_new, gb_new) = obj.evaluate(&w_new, b_new);
                if l_new <= loss - 0.5 * step * g2 {
                    w = w_new;
                    b = b_new;
                    loss = l_new;
                    gw = gw_new;
                    gb = gb_new;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            step = (step * 2.0).min(64.0);
        }
        let mut model = LogisticRegression {
            weights: w.iter().map(|&v| v as f32 as f64).collect(),
            bias: b as f32 as f64,
            config: config.clone(),
            rule: Some(set.rule),
            fingerprint: set.fingerprint,
            iterations,
            training_accuracy: 0.0,
        };
        model.training_accuracy = model.accuracy(set)?;
        log::info!(
            "logistic regression: {iterations} iterations, loss {loss:.5}, training accuracy {:.3}",
            model.training_accuracy
        );
        Ok(model)
    }

    pub fn accuracy(&self, set: &LabeledSet) -> Result<f64, TpmError> {
        if set.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0;
        for e in &set.entries {
            if self.predict(&e.fingerprint)?.1 == e.active {
                correct += 1;
            }
        }
        Ok(correct as f64 / set.len() as f64)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, TpmError> {
        let body = Body {
            config: self.config.clone(),
            rule: self.rule,
            fingerprint: self.fingerprint,
            iterations: self.iterations,
            training_accuracy: self.training_accuracy,
        };
        let weights: Vec<f32> = self.weights.iter().map(|&v| v as f32).collect();
        let bias = [self.bias as f32];
        Ok(artifact::encode(
            KIND,
            &body,
            &[
                (
                    TensorSpec {
                        name: "weights".into(),
                        shape: vec![weights.len()],
                    },
                    &weights,
                ),
                (
                    TensorSpec {
                        name: "bias".into(),
                        shape: vec![1],
                    },
                    &bias,
                ),
            ],
        )?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TpmError> {
        let c = artifact::decode::<Body>(bytes, KIND)?;
        let missing = |n: &str| ArtifactError::CorruptPayload(format!("missing tensor {n}"));
        let weights: Vec<f64> = c.tensor("weights").ok_or_else(|| missing("weights"))?.iter().map(|&v| v as f64).collect();
        let bias = *c.tensor("bias").ok_or_else(|| missing("bias"))?.first().ok_or_else(|| missing("bias"))? as f64;
        if weights.len() != c.body.fingerprint.width {
            return Err(ArtifactError::CorruptPayload("weight vector length differs from fingerprint width".into()).into());
        }
        Ok(LogisticRegression {
            weights,
            bias,
            config: c.body.config,
            rule: c.body.rule,
            fingerprint: c.body.fingerprint,
            iterations: c.body.iterations,
            training_accuracy: c.body.training_accuracy,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TpmError> {
        Ok(artifact::write_file(path, &self.to_bytes()?)?)
    }

    pub fn load(path: &Path) -> Result<Self, TpmError> {
        Self::from_bytes(&artifact::read_file(path)?)
    }
}

impl ActivityClassifier for LogisticRegression {
    fn width(&self) -> usize {
        self.weights.len()
    }

    fn probability(&self, fp: &Fingerprint) -> Result<f64, TpmError> {
        if fp.width() != self.weights.len() {
            return Err(MetricsError::WidthMismatch {
                left: self.weights.len(),
                right: fp.width(),
            }
            .into());
        }
        let z = self.bias + fp.set_bits().iter().map(|&i| self.weights[i]).sum::<f64>();
        Ok(sigmoid(z))
    }
}

/// Mean held-out accuracy over `folds` contiguous folds of `set`.
pub fn cross_validate(set: &LabeledSet, folds: usize, config: &FitConfig) -> Result<f64, TpmError> {
    if folds < 2 || folds > set.len() {
        return Err(TpmError::InvalidConfig(format!(
            "cannot split {} entries into {folds} folds",
            set.len()
        )));
    }
    let n = set.len();
    let mut total = 0.0;
    for k in 0..folds {
        let (lo, hi) = (k * n / folds, (k + 1) * n / folds);
        let mut train = set.clone();
        train.entries = set.entries[..lo].iter().chain(&set.entries[hi..]).cloned().collect();
        let mut test = set.clone();
        test.entries = set.entries[lo..hi].to_vec();
        let model = LogisticRegression::fit(&train, config)?;
        total += model.accuracy(&test)?;
    }
    Ok(total / folds as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tpm::{LabeledEntry, Measure};

    fn set_from(rows: &[(&[usize], bool)], width: usize) -> LabeledSet {
        LabeledSet {
            entries: rows
                .iter()
                .enumerate()
                .map(|(i, (bits, active))| LabeledEntry {
                    smiles: format!("m{i}"),
                    fingerprint: Fingerprint::from_bits(width, bits),
                    value: if *active { 8.0 } else { 5.0 },
                    active: *active,
                })
                .collect(),
            rule: ThresholdRule::new(Measure::PIc50, 7.0),
            fingerprint: FingerprintConfig { radius: 2, width },
            invalid_records: vec![],
        }
    }

    #[test]
    fn zero_model_predicts_half() {
        let m = LogisticRegression::zeros(16);
        assert_eq!(m.predict(&Fingerprint::from_bits(16, &[1, 2])).unwrap(), (0.5, false));
        assert!(m.probability(&Fingerprint::from_bits(8, &[1])).is_err());
    }

    #[test]
    fn separable_toy_set() {
        let set = set_from(
            &[
                (&[7, 1], true),
                (&[7, 2], true),
                (&[7, 3, 4], true),
                (&[1, 2], false),
                (&[3], false),
                (&[2, 4, 5], false),
            ],
            16,
        );
        let m = LogisticRegression::fit(&set, &FitConfig::default()).unwrap();
        assert_eq!(m.training_accuracy, 1.0);
        assert!(m.weights[7] > 0.0);
    }

    #[test]
    fn single_class_rejected() {
        let set = set_from(&[(&[1], true), (&[2], true)], 8);
        assert!(matches!(
            LogisticRegression::fit(&set, &FitConfig::default()),
            Err(TpmError::SingleClassTrainingSet("active"))
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let set = set_from(&[(&[7, 1], true), (&[1, 2], false), (&[7], true), (&[3], false)], 16);
        let m = LogisticRegression::fit(&set, &FitConfig::default()).unwrap();
        let bytes = m.to_bytes().unwrap();
        let back = LogisticRegression::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }
}
