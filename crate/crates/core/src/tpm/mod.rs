//! Target prediction model: labels molecules active or inactive from
//! measured activities and learns a fingerprint classifier from them.

mod logistic;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use logistic::{cross_validate, FitConfig, LogisticRegression, KIND as CHECKPOINT_KIND};

use crate::artifact::ArtifactError;
use crate::metrics::{ecfp, Fingerprint, MetricsError};
use crate::smiles::{canonical_smiles, parse_valid};

#[derive(Debug, Error)]
pub enum TpmError {
    #[error("unknown activity measure {0:?} (expected IC50, pIC50 or pMIC)")]
    UnknownMeasure(String),
    #[error("record {index}: measure {measure} cannot be compared with a {rule} threshold")]
    MeasureMismatch { index: usize, measure: Measure, rule: Measure },
    #[error("record {index}: activity value {value} is not usable")]
    BadValue { index: usize, value: f64 },
    #[error("the training set contains only {0} examples")]
    SingleClassTrainingSet(&'static str),
    #[error("the training set is empty")]
    EmptyTrainingSet,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Activity measure of a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    /// Half-maximal inhibitory concentration in nM.
    #[serde(rename = "IC50")]
    Ic50,
    #[serde(rename = "pIC50")]
    PIc50,
    #[serde(rename = "pMIC")]
    PMic,
}

impl Measure {
    /// The negative-log scale this measure is compared on.
    pub fn p_scale(self) -> Measure {
        match self {
            Measure::Ic50 | Measure::PIc50 => Measure::PIc50,
            Measure::PMic => Measure::PMic,
        }
    }

    /// Converts a value of this measure to its p-scale. IC50 in nM becomes
    /// `-log10(IC50 * 1e-9) = 9 - log10(IC50)`.
    pub fn to_p_scale(self, value: f64) -> Option<f64> {
        if !value.is_finite() {
            return None;
        }
        match self {
            Measure::Ic50 => (value > 0.0).then(|| 9.0 - value.log10()),
            Measure::PIc50 | Measure::PMic => Some(value),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Ic50 => "IC50",
            Measure::PIc50 => "pIC50",
            Measure::PMic => "pMIC",
        })
    }
}

impl FromStr for Measure {
    type Err = TpmError;

    fn from_str(s: &str) -> Result<Self, TpmError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ic50" | "ic50_nm" => Ok(Measure::Ic50),
            "pic50" => Ok(Measure::PIc50),
            "pmic" => Ok(Measure::PMic),
            _ => Err(TpmError::UnknownMeasure(s.to_string())),
        }
    }
}

/// "Active iff the p-scale value is strictly greater than `cutoff`".
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub measure: Measure,
    pub cutoff: f64,
}

impl ThresholdRule {
    pub fn new(measure: Measure, cutoff: f64) -> Self {
        ThresholdRule {
            measure: measure.p_scale(),
            cutoff,
        }
    }

    pub fn is_active(&self, p_value: f64) -> bool {
        p_value > self.cutoff
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintConfig {
    pub radius: usize,
    pub width: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        FingerprintConfig {
            radius: crate::metrics::DEFAULT_RADIUS,
            width: crate::metrics::DEFAULT_WIDTH,
        }
    }
}

impl FingerprintConfig {
    /// Fingerprint of a SMILES string, or `None` when it does not parse as
    /// a valid molecule.
    pub fn fingerprint(&self, smiles: &str) -> Option<Fingerprint> {
        parse_valid(smiles).ok().map(|g| ecfp(&g, self.radius, self.width))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub smiles: String,
    pub measure: Measure,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledEntry {
    pub smiles: String,
    pub fingerprint: Fingerprint,
    /// Activity on the rule's p-scale (mean over duplicate records).
    pub value: f64,
    pub active: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub entries: Vec<LabeledEntry>,
    pub rule: ThresholdRule,
    pub fingerprint: FingerprintConfig,
    /// Indices of records whose SMILES did not parse as a valid molecule.
    pub invalid_records: Vec<usize>,
}

impl LabeledSet {
    pub fn actives(&self) -> usize {
        self.entries.iter().filter(|e| e.active).count()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Canonicalises the records, averages duplicates on the p-scale and labels
/// each molecule with the threshold rule. Entries come out sorted by
/// canonical SMILES.
pub fn label_by_threshold(
    records: &[ActivityRecord],
    rule: ThresholdRule,
    fingerprint: FingerprintConfig,
) -> Result<LabeledSet, TpmError> {
    let mut groups: BTreeMap<String, (Fingerprint, f64, usize)> = BTreeMap::new();
    let mut invalid = Vec::new();
    for (index, r) in records.iter().enumerate() {
        if r.measure.p_scale() != rule.measure {
            return Err(TpmError::MeasureMismatch {
                index,
                measure: r.measure,
                rule: rule.measure,
            });
        }
        let p = r
            .measure
            .to_p_scale(r.value)
            .ok_or(TpmError::BadValue { index, value: r.value })?;
        let Ok(graph) = parse_valid(&r.smiles) else {
            invalid.push(index);
            continue;
        };
        let canonical = canonical_smiles(&graph).expect("valid graphs can be written");
        let entry = groups
            .entry(canonical)
            .or_insert_with(|| (ecfp(&graph, fingerprint.radius, fingerprint.width), 0.0, 0));
        entry.1 += p;
        entry.2 += 1;
    }
    let entries = groups
        .into_iter()
        .map(|(smiles, (fp, sum, n))| {
            let value = sum / n as f64;
            LabeledEntry {
                smiles,
                fingerprint: fp,
                value,
                active: rule.is_active(value),
            }
        })
        .collect();
    Ok(LabeledSet {
        entries,
        rule,
        fingerprint,
        invalid_records: invalid,
    })
}

/// Reads `smiles,measure,value` CSV text (header row optional).
pub fn parse_activity_csv(text: &str) -> Result<Vec<ActivityRecord>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && fields.first().is_some_and(|f| f.eq_ignore_ascii_case("smiles")) {
            continue;
        }
        if fields.len() != 3 {
            return Err((i + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let measure = fields[1].parse::<Measure>().map_err(|e| (i + 1, e.to_string()))?;
        let value = fields[2]
            .parse::<f64>()
            .map_err(|e| (i + 1, format!("bad value {:?}: {e}", fields[2])))?;
        out.push(ActivityRecord {
            smiles: fields[0].to_string(),
            measure,
            value,
        });
    }
    Ok(out)
}

/// A binary activity classifier over fingerprints.
pub trait ActivityClassifier: Send + Sync {
    fn width(&self) -> usize;

    /// Probability that the molecule is active.
    fn probability(&self, fp: &Fingerprint) -> Result<f64, TpmError>;

    /// Probability and label (active iff probability > 0.5).
    fn predict(&self, fp: &Fingerprint) -> Result<(f64, bool), TpmError> {
        let p = self.probability(fp)?;
        Ok((p, p > 0.5))
    }
}
