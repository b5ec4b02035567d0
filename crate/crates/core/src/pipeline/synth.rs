//! Synthetic drug-like corpora with a planted substructure family, used as
//! a desk-scale stand-in for a real screening corpus and a real target.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::smiles::{canonicalize, has_substructure, parse_smiles, parse_valid, MolGraph};
use crate::tpm::{ActivityRecord, Measure};

/// The planted motif: an NH-indole core.
pub const MOTIF: &str = "c1ccc2[nH]ccc2c1";

/// Ring units written so the chain continues from their last atom. `{s}`
/// marks an optional substituent branch.
const RINGS: &[&str] = &[
    "c1c{s}cc(cc1)",
    "c1cc{s}cc(c1)",
    "c1cc{s}ccc1",
    "c1ccc(nc1)",
    "c1ccncc1",
    "c1cnc(nc1)",
    "c1ccc(s1)",
    "c1ccc(o1)",
    "c1cc(n[nH]1)",
    "C1CC{s}C(CC1)",
    "C1CCN(CC1)",
    "N1CCC(CC1)",
    "N1CCN(CC1)",
    "C1CC1",
    "c1ccc2ccccc2c1",
    "c1ccc2occc2c1",
];

const MOTIF_UNITS: &[&str] = &["c1ccc2[nH]ccc2c1", "c1cc{s}c2[nH]ccc2c1", "c1ccc2[nH]cc{s}c2c1"];

const LINKERS: &[&str] = &[
    "", "", "C", "CC", "O", "OC", "N", "NC", "C(=O)N", "NC(=O)", "C(=O)", "S(=O)(=O)N", "C(=O)NC", "OCC",
];

const HEADS: &[&str] = &[
    "", "C", "CC", "O", "N", "CC(C)", "FC(F)(F)", "CN(C)", "O=C(O)", "NC(=O)", "CC(=O)N", "Cl", "F", "N#C", "COC",
];

const TAILS: &[&str] = &[
    "", "C", "CC", "O", "OC", "N", "F", "Cl", "Br", "C(F)(F)F", "C#N", "C(=O)O", "C(N)=O", "N(C)C", "C(C)C",
];

const SUBSTITUENTS: &[&str] = &["(F)", "(Cl)", "(C)", "(O)", "(OC)", "(N)"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub molecules: usize,
    /// Probability that a molecule carries the motif.
    pub motif_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            molecules: 10_000,
            motif_rate: 0.05,
            seed: 0,
        }
    }
}

fn fill(unit: &str, rng: &mut ChaCha8Rng) -> String {
    let s = if rng.gen_bool(0.3) {
        *SUBSTITUENTS.choose(rng).expect("nonempty")
    } else {
        ""
    };
    unit.replace("{s}", s)
}

fn molecule(rng: &mut ChaCha8Rng, with_motif: bool) -> String {
    let units = *[1usize, 1, 2, 2, 2, 3].choose(rng).expect("nonempty");
    let motif_slot = with_motif.then(|| rng.gen_range(0..units));
    let mut out = String::from(*HEADS.choose(rng).expect("nonempty"));
    for u in 0..units {
        if u > 0 {
            out.push_str(LINKERS.choose(rng).expect("nonempty"));
        }
        let pool = if Some(u) == motif_slot { MOTIF_UNITS } else { RINGS };
        out.push_str(&fill(pool.choose(rng).expect("nonempty"), rng));
    }
    out.push_str(TAILS.choose(rng).expect("nonempty"));
    out
}

/// Distinct canonical SMILES, `config.molecules` of them, each valid.
/// Molecules drawn to carry the motif always do and the others never do.
pub fn generate(config: &SynthConfig) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(config.molecules);
    let mut attempts = 0usize;
    while out.len() < config.molecules && attempts < config.molecules * 50 + 1000 {
        attempts += 1;
        let with_motif = rng.gen_bool(config.motif_rate.clamp(0.0, 1.0));
        let Ok(c) = canonicalize(&molecule(&mut rng, with_motif)) else {
            continue;
        };
        if seen.insert(c.clone()) {
            out.push(c);
        }
    }
    out
}

fn motif_graph() -> &'static MolGraph {
    static PATTERN: OnceLock<MolGraph> = OnceLock::new();
    PATTERN.get_or_init(|| parse_smiles(MOTIF).expect("motif parses"))
}

pub fn has_motif(graph: &MolGraph) -> bool {
    has_substructure(graph, motif_graph())
}

/// `None` for lines that are not valid molecules.
pub fn smiles_has_motif(smiles: &str) -> Option<bool> {
    parse_valid(smiles).ok().map(|g| has_motif(&g))
}

/// IC50 (nM) records for a synthetic target: motif carriers get potencies
/// around 10 nM, everything else around 10 uM, with log-normal scatter
/// that never crosses the 100 nM cutoff.
pub fn activity_records(smiles: &[String], seed: u64) -> Vec<ActivityRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    smiles
        .iter()
        .filter_map(|s| {
            let active = smiles_has_motif(s)?;
            let p = if active {
                rng.gen_range(7.3..9.0)
            } else {
                rng.gen_range(4.0..6.7)
            };
            Some(ActivityRecord {
                smiles: s.clone(),
                measure: Measure::Ic50,
                value: 10f64.powf(9.0 - p),
            })
        })
        .collect()
}

/// CSV text (`smiles,measure,value`) for activity records.
pub fn activity_csv(records: &[ActivityRecord]) -> String {
    let mut out = String::from("smiles,measure,value\n");
    for r in records {
        out.push_str(&format!("{},{},{}\n", r.smiles, r.measure, r.value));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_molecules_are_valid_canonical_and_distinct() {
        let mols = generate(&SynthConfig {
            molecules: 300,
            motif_rate: 0.2,
            seed: 1,
        });
        assert_eq!(mols.len(), 300);
        let distinct: BTreeSet<&String> = mols.iter().collect();
        assert_eq!(distinct.len(), 300);
        for m in &mols {
            assert_eq!(&canonicalize(m).unwrap(), m);
        }
        let carriers = mols.iter().filter(|m| smiles_has_motif(m) == Some(true)).count();
        assert!((30..=100).contains(&carriers), "{carriers} motif carriers");
    }

    #[test]
    fn motif_rate_extremes() {
        let none = generate(&SynthConfig {
            molecules: 100,
            motif_rate: 0.0,
            seed: 2,
        });
        assert!(none.iter().all(|m| smiles_has_motif(m) == Some(false)));
        let all = generate(&SynthConfig {
            molecules: 100,
            motif_rate: 1.0,
            seed: 2,
        });
        assert!(all.iter().all(|m| smiles_has_motif(m) == Some(true)));
    }

    #[test]
    fn same_seed_same_corpus() {
        let c = SynthConfig {
            molecules: 50,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&c), generate(&c));
    }

    #[test]
    fn activity_labels_follow_the_motif() {
        let mols = generate(&SynthConfig {
            molecules: 60,
            motif_rate: 0.5,
            seed: 3,
        });
        for r in activity_records(&mols, 0) {
            let p = 9.0 - r.value.log10();
            assert_eq!(p > 7.0, smiles_has_motif(&r.smiles).unwrap());
        }
    }
}
