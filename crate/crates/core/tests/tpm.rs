use chemlm::metrics::Fingerprint;
use chemlm::tpm::{
    cross_validate, ActivityClassifier, FingerprintConfig, FitConfig, LabeledEntry, LabeledSet, LogisticRegression,
    Measure, ThresholdRule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labeled(rows: Vec<(Fingerprint, bool)>) -> LabeledSet {
    let width = rows[0].0.width();
    LabeledSet {
        entries: rows
            .into_iter()
            .enumerate()
            .map(|(i, (fingerprint, active))| LabeledEntry {
                smiles: format!("m{i:04}"),
                fingerprint,
                value: if active { 8.0 } else { 6.0 },
                active,
            })
            .collect(),
        rule: ThresholdRule::new(Measure::PIc50, 7.0),
        fingerprint: FingerprintConfig { radius: 2, width },
        invalid_records: vec![],
    }
}

/// 200 samples over 3 bits, labels drawn from a fixed noisy logistic model.
fn three_bit_set(seed: u64) -> LabeledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let true_w = [2.0, -1.5, 0.7];
    let true_b = -0.3;
    let rows = (0..200)
        .map(|_| {
            let bits: Vec<usize> = (0..3).filter(|_| rng.gen_bool(0.5)).collect();
            let z = true_b + bits.iter().map(|&i| true_w[i]).sum::<f64>();
            let p = 1.0 / (1.0 + (-z).exp());
            (Fingerprint::from_bits(3, &bits), rng.gen_bool(p))
        })
        .collect();
    labeled(rows)
}

/// Exhaustive grid search over (w0, w1, w2, b) minimising the same
/// regularised mean log loss, written with plain scalar arithmetic.
fn grid_search_accuracy(set: &LabeledSet, l2: f64) -> f64 {
    // Sufficient statistics: counts of (pattern, label).
    let mut counts = [[0usize; 2]; 8];
    for e in &set.entries {
        let bits = e.fingerprint.set_bits();
        let pattern = bits.iter().fold(0usize, |acc, &i| acc | (1 << i));
        counts[pattern][usize::from(e.active)] += 1;
    }
    let n = set.len() as f64;
    let grid: Vec<f64> = (0..=32).map(|k| -4.0 + 0.25 * k as f64).collect();
    let mut best = (f64::INFINITY, [0.0; 4]);
    for &w0 in &grid {
        for &w1 in &grid {
            for &w2 in &grid {
                for &b in &grid {
                    let w = [w0, w1, w2];
                    let mut loss = 0.0;
                    for (pattern, c) in counts.iter().enumerate() {
                        let z = b + (0..3).filter(|i| pattern >> i & 1 == 1).map(|i| w[i]).sum::<f64>();
                        let p = 1.0 / (1.0 + (-z).exp());
                        loss -= c[1] as f64 * p.ln() + c[0] as f64 * (1.0 - p).ln();
                    }
                    loss = loss / n + 0.5 * l2 * (w0 * w0 + w1 * w1 + w2 * w2);
                    if loss < best.0 {
                        best = (loss, [w0, w1, w2, b]);
                    }
                }
            }
        }
    }
    let [w0, w1, w2, b] = best.1;
    let w = [w0, w1, w2];
    let correct = set
        .entries
        .iter()
        .filter(|e| {
            let z = b + e.fingerprint.set_bits().iter().map(|&i| w[i]).sum::<f64>();
            (z > 0.0) == e.active
        })
        .count();
    correct as f64 / n
}

#[test]
fn fitted_accuracy_matches_grid_search_oracle() {
    let config = FitConfig::default();
    for seed in 0..3 {
        let set = three_bit_set(seed);
        let model = LogisticRegression::fit(&set, &config).unwrap();
        let oracle = grid_search_accuracy(&set, config.l2);
        assert!(
            (model.training_accuracy - oracle).abs() <= 0.02,
            "seed {seed}: fitted {} vs grid {oracle}",
            model.training_accuracy
        );
    }
}

#[test]
fn fit_is_deterministic() {
    let set = three_bit_set(7);
    let a = LogisticRegression::fit(&set, &FitConfig::default()).unwrap();
    let b = LogisticRegression::fit(&set, &FitConfig::default()).unwrap();
    assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
}

#[test]
fn random_labels_cross_validate_near_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows = (0..200)
        .map(|i| {
            let bits: Vec<usize> = (0..40).map(|_| rng.gen_range(0..2048)).collect();
            (Fingerprint::from_bits(2048, &bits), i % 2 == 0)
        })
        .collect();
    let acc = cross_validate(&labeled(rows), 5, &FitConfig::default()).unwrap();
    assert!((acc - 0.5).abs() <= 0.1, "cross-validated accuracy {acc}");
}

fn toy_model() -> LogisticRegression {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows = (0..60)
        .map(|_| {
            let bits: Vec<usize> = (0..5).map(|_| rng.gen_range(0..32)).collect();
            let active = bits.iter().any(|&b| b < 8);
            (Fingerprint::from_bits(32, &bits), active)
        })
        .collect();
    LogisticRegression::fit(&labeled(rows), &FitConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn positive_weight_bit_never_lowers_probability(bits in proptest::collection::vec(0usize..32, 0..10)) {
        let model = toy_model();
        let base = model.probability(&Fingerprint::from_bits(32, &bits)).unwrap();
        prop_assert!(base > 0.0 && base < 1.0);
        for extra in 0..32 {
            if model.weights[extra] > 0.0 {
                let mut more = bits.clone();
                more.push(extra);
                let (p, label) = model.predict(&Fingerprint::from_bits(32, &more)).unwrap();
                prop_assert!(p >= base);
                prop_assert_eq!(label, p > 0.5);
            }
        }
    }
}
