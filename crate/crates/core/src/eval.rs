//! Library-level evaluation of generated molecules: validity, novelty and
//! uniqueness accounting, reproduction of held-out actives, enrichment over
//! random and similarity / edit-distance histograms.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{levenshtein, nearest_neighbor_similarity, Fingerprint, MetricsError};
use crate::smiles::canonicalize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("the test set is empty")]
    EmptyTestSet,
    #[error("the reference set is empty")]
    EmptyReference,
    #[error("the training set is empty")]
    EmptyTraining,
    #[error("set size {0} must be positive")]
    ZeroDenominator(&'static str),
    #[error("bin width {0} must lie in (0, 1]")]
    InvalidBinWidth(f64),
    #[error(transparent)]
    Metrics(MetricsError),
}

impl From<MetricsError> for EvalError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::EmptyReference => EvalError::EmptyReference,
            other => EvalError::Metrics(other),
        }
    }
}

/// Counts at each stage of validate, canonicalise, drop training members,
/// deduplicate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub lines: usize,
    pub valid: usize,
    /// Valid lines whose canonical form is not in the training set
    /// (duplicates still counted).
    pub novel: usize,
    /// Distinct canonical forms among the novel lines.
    pub unique: usize,
    /// Distinct canonical forms among all valid lines.
    pub valid_set: BTreeSet<String>,
    /// The final library: distinct novel canonical forms.
    pub novel_set: BTreeSet<String>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl GenerationStats {
    pub fn valid_ratio(&self) -> f64 {
        ratio(self.valid, self.lines)
    }

    pub fn novel_ratio(&self) -> f64 {
        ratio(self.novel, self.lines)
    }

    pub fn unique_ratio(&self) -> f64 {
        ratio(self.unique, self.lines)
    }

    pub fn write_report(&self, report: &mut Report) {
        report.push("lines", self.lines);
        report.push("valid", self.valid);
        report.push("valid_ratio", format!("{:.6}", self.valid_ratio()));
        report.push("novel", self.novel);
        report.push("novel_ratio", format!("{:.6}", self.novel_ratio()));
        report.push("unique", self.unique);
        report.push("unique_ratio", format!("{:.6}", self.unique_ratio()));
    }
}

pub fn generation_stats<S: AsRef<str> + Sync>(samples: &[S], training: &BTreeSet<String>) -> GenerationStats {
    let canonical: Vec<Option<String>> = samples.par_iter().map(|s| canonicalize(s.as_ref()).ok()).collect();
    let mut stats = GenerationStats {
        lines: samples.len(),
        ..GenerationStats::default()
    };
    for c in canonical.into_iter().flatten() {
        stats.valid += 1;
        if !training.contains(&c) {
            stats.novel += 1;
            stats.novel_set.insert(c.clone());
        }
        stats.valid_set.insert(c);
    }
    stats.unique = stats.novel_set.len();
    stats
}

/// Canonical forms of the valid lines of a corpus, as a set.
pub fn canonical_set<S: AsRef<str> + Sync>(lines: &[S]) -> BTreeSet<String> {
    lines.par_iter().filter_map(|s| canonicalize(s.as_ref()).ok()).collect::<Vec<_>>().into_iter().collect()
}

/// `|G ∩ T| / |T|` over canonical sets.
pub fn reproduction_ratio(generated: &BTreeSet<String>, test: &BTreeSet<String>) -> Result<f64, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    Ok(generated.intersection(test).count() as f64 / test.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Eor {
    Finite(f64),
    /// The random library reproduced nothing (`m = 0`) while the focused
    /// library reproduced `n > 0` molecules.
    Infinite { n: usize },
}

impl fmt::Display for Eor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eor::Finite(v) => write!(f, "{v:.6}"),
            Eor::Infinite { .. } => f.write_str("inf"),
        }
    }
}

/// `(n / |G|) / (m / |R|)`. With `n = m = 0` both libraries reproduce
/// nothing and the result is 0.
pub fn enrichment_over_random(n: usize, size_g: usize, m: usize, size_r: usize) -> Result<Eor, EvalError> {
    if size_g == 0 {
        return Err(EvalError::ZeroDenominator("|G|"));
    }
    if size_r == 0 {
        return Err(EvalError::ZeroDenominator("|R|"));
    }
    if n == 0 {
        return Ok(Eor::Finite(0.0));
    }
    if m == 0 {
        return Ok(Eor::Infinite { n });
    }
    Ok(Eor::Finite((n as f64 / size_g as f64) / (m as f64 / size_r as f64)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub n: usize,
    pub size_g: usize,
    pub m: usize,
    pub size_r: usize,
    pub test_size: usize,
    pub reproduction_ratio: f64,
    pub random_reproduction_ratio: f64,
    pub eor: Eor,
}

impl EnrichmentReport {
    /// Compares a focused library `generated` with an unbiased library
    /// `random` by how many members of `test` each reproduces. All inputs
    /// are canonical sets, so libraries are deduplicated before counting.
    pub fn compute(
        generated: &BTreeSet<String>,
        random: &BTreeSet<String>,
        test: &BTreeSet<String>,
    ) -> Result<Self, EvalError> {
        let n = generated.intersection(test).count();
        let m = random.intersection(test).count();
        Ok(EnrichmentReport {
            n,
            size_g: generated.len(),
            m,
            size_r: random.len(),
            test_size: test.len(),
            reproduction_ratio: reproduction_ratio(generated, test)?,
            random_reproduction_ratio: reproduction_ratio(random, test)?,
            eor: enrichment_over_random(n, generated.len(), m, random.len())?,
        })
    }

    pub fn write_report(&self, report: &mut Report) {
        report.push("test_size", self.test_size);
        report.push("generated_size", self.size_g);
        report.push("generated_reproduced", self.n);
        report.push("reproduction_ratio", format!("{:.6}", self.reproduction_ratio));
        report.push("random_size", self.size_r);
        report.push("random_reproduced", self.m);
        report.push("random_reproduction_ratio", format!("{:.6}", self.random_reproduction_ratio));
        report.push("eor", self.eor);
    }
}

/// Histogram over [0, 1] with right-closed bins `(lo, hi]`; the first bin
/// also takes 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn unit_interval(bin_width: f64) -> Result<Self, EvalError> {
        if !(bin_width > 0.0 && bin_width <= 1.0) {
            return Err(EvalError::InvalidBinWidth(bin_width));
        }
        let bins = (1.0 / bin_width - 1e-9).ceil() as usize;
        let mut edges: Vec<f64> = (0..=bins).map(|k| k as f64 * bin_width).collect();
        edges[bins] = 1.0;
        Ok(Histogram {
            edges,
            counts: vec![0; bins],
        })
    }

    pub fn bin_of(&self, value: f64) -> usize {
        let upper = &self.edges[1..];
        upper.partition_point(|&hi| value > hi).min(self.counts.len() - 1)
    }

    pub fn add(&mut self, value: f64) {
        let b = self.bin_of(value);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{:.4},{:.4},{}", self.edges[k], self.edges[k + 1], c);
        }
        out
    }
}

/// Histogram of each generated molecule's nearest-neighbour Tanimoto
/// similarity to the reference set.
pub fn similarity_histogram(
    generated: &[Fingerprint],
    reference: &[Fingerprint],
    bin_width: f64,
) -> Result<Histogram, EvalError> {
    let mut h = Histogram::unit_interval(bin_width)?;
    for s in nearest_neighbor_similarity(generated, reference)? {
        h.add(s);
    }
    Ok(h)
}

/// Several histograms with identical edges side by side, one count column
/// per label (e.g. one per fine-tuning epoch).
pub fn overlay_csv(series: &[(String, Histogram)]) -> String {
    let mut out = String::from("bin_lo,bin_hi");
    for (label, _) in series {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    let Some((_, first)) = series.first() else {
        return out;
    };
    for k in 0..first.counts.len() {
        let _ = write!(out, "{:.4},{:.4}", first.edges[k], first.edges[k + 1]);
        for (_, h) in series {
            let _ = write!(out, ",{}", h.counts.get(k).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

/// Counts of integer distances; `counts[d]` molecules sit at distance `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub counts: Vec<usize>,
}

impl DistanceHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (d, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{d},{d},{c}");
        }
        out
    }
}

/// Minimum Levenshtein distance of each string to the training strings.
pub fn nearest_edit_distances<S: AsRef<str> + Sync>(queries: &[S], training: &[S]) -> Result<Vec<usize>, EvalError> {
    if training.is_empty() {
        return Err(EvalError::EmptyTraining);
    }
    Ok(queries
        .par_iter()
        .map(|q| {
            training
                .iter()
                .map(|t| levenshtein(q.as_ref(), t.as_ref()))
                .min()
                .expect("training is nonempty")
        })
        .collect())
}

pub fn edit_distance_histogram<S: AsRef<str> + Sync>(
    reproduced: &[S],
    training: &[S],
) -> Result<DistanceHistogram, EvalError> {
    let distances = nearest_edit_distances(reproduced, training)?;
    let max = distances.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0; max + 1];
    for d in distances {
        counts[d] += 1;
    }
    Ok(DistanceHistogram { counts })
}

/// Plain `key: value` lines with stable keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Parses text produced by `Display`.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Report { entries }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn stats_examples() {
        let training = set(&["CCO", "c1ccccc1"]);
        let s = generation_stats(&["OCC", "c1ccccc1"], &training);
        assert_eq!((s.lines, s.valid, s.novel, s.unique), (2, 2, 0, 0));

        let s = generation_stats(&["C(", "xyz", ""], &training);
        assert_eq!((s.valid, s.valid_ratio(), s.novel_ratio(), s.unique_ratio()), (0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_audited_fixture() {
        // 10 lines: 2 invalid ("C1CC", "CC(C)(C)(C)(C)C"), "CCN"/"NCC"/"C(N)C" are
        // one molecule written three ways, "CCO" is a training member.
        let lines = [
            "CCN", "NCC", "C1CC", "CCO", "c1ccncc1", "C(N)C", "CC(C)(C)(C)(C)C", "CC(=O)O", "OC(C)=O", "CCCl",
        ];
        let s = generation_stats(&lines, &set(&["CCO"]));
        assert_eq!(s.lines, 10);
        assert_eq!(s.valid, 8);
        assert_eq!(s.novel, 7);
        // CCN, c1ccncc1, CC(=O)O, CCCl
        assert_eq!(s.unique, 4);
        assert_eq!(s.valid_set.len(), 5);
        assert!(s.unique <= s.novel && s.novel <= s.valid && s.valid <= s.lines);
    }

    #[test]
    fn stats_are_a_fixed_point_on_canonical_input() {
        let s = generation_stats(&["OCC", "c1ccncc1", "NCC"], &BTreeSet::new());
        let again: Vec<&str> = s.novel_set.iter().map(String::as_str).collect();
        assert_eq!(generation_stats(&again, &BTreeSet::new()).novel_set, s.novel_set);
    }

    #[test]
    fn reproduction_examples() {
        let t = set(&["a", "b", "c", "d"]);
        assert_eq!(reproduction_ratio(&t, &t).unwrap(), 1.0);
        assert_eq!(reproduction_ratio(&set(&["x"]), &t).unwrap(), 0.0);
        assert_eq!(reproduction_ratio(&set(&["a", "c", "x"]), &t).unwrap(), 0.5);
        assert_eq!(reproduction_ratio(&t, &BTreeSet::new()), Err(EvalError::EmptyTestSet));
    }

    #[test]
    fn eor_examples() {
        assert_eq!(enrichment_over_random(3, 30, 5, 50).unwrap(), Eor::Finite(1.0));
        assert_eq!(enrichment_over_random(5, 100, 1, 100).unwrap(), Eor::Finite(5.0));
        assert_eq!(enrichment_over_random(0, 100, 4, 100).unwrap(), Eor::Finite(0.0));
        assert_eq!(enrichment_over_random(2, 100, 0, 100).unwrap(), Eor::Infinite { n: 2 });
        assert_eq!(enrichment_over_random(1, 0, 1, 1), Err(EvalError::ZeroDenominator("|G|")));
        let g = set(&["a", "b", "x"]);
        let r = EnrichmentReport::compute(&g, &g, &set(&["a", "q"])).unwrap();
        assert_eq!(r.eor, Eor::Finite(1.0));
    }

    #[test]
    fn histogram_bins_are_right_closed() {
        let mut h = Histogram::unit_interval(0.25).unwrap();
        for v in [0.0, 0.25, 0.26, 0.5, 1.0, 0.99] {
            h.add(v);
        }
        assert_eq!(h.counts, vec![2, 2, 0, 2]);
        assert_eq!(Histogram::unit_interval(0.1).unwrap().counts.len(), 10);
        assert_eq!(Histogram::unit_interval(0.3).unwrap().edges.last(), Some(&1.0));
        assert!(Histogram::unit_interval(0.0).is_err());
        assert_eq!(h.to_csv().lines().nth(1), Some("0.0000,0.2500,2"));
    }

    #[test]
    fn similarity_histogram_of_reference_itself_is_top_heavy() {
        let fps: Vec<Fingerprint> = (0..6).map(|i| Fingerprint::from_bits(64, &[i, i + 10, 40])).collect();
        let h = similarity_histogram(&fps, &fps, 0.1).unwrap();
        assert_eq!(h.counts[9], 6);
        assert_eq!(h.total(), 6);
        assert_eq!(similarity_histogram(&fps, &[], 0.1), Err(EvalError::EmptyReference));
    }

    #[test]
    fn edit_distance_examples() {
        let h = edit_distance_histogram(&["c1ccncc1"], &["c1ccccc1"]).unwrap();
        assert_eq!(h.counts, vec![0, 1]);
        let h = edit_distance_histogram(&["CCO", "CC"], &["CC", "CCO", "N"]).unwrap();
        assert_eq!(h.counts, vec![2]);
        assert!(edit_distance_histogram::<&str>(&["C"], &[]).is_err());
    }

    #[test]
    fn report_round_trip() {
        let mut r = Report::new();
        r.push("lines", 10);
        r.push("eor", Eor::Infinite { n: 3 });
        let text = r.to_string();
        assert_eq!(text, "lines: 10\neor: inf\n");
        assert_eq!(Report::parse(&text), r);
    }
}
