//! Random valid molecules for property tests, drawn from a small fragment
//! grammar.

use std::collections::BTreeMap;

use chemlm::smiles::{parse_valid, MolGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ATOMS: [&str; 9] = ["C", "C", "C", "N", "O", "S", "F", "Cl", "Br"];
const RINGS: [&[&str]; 7] = [
    &["c", "c", "c", "c", "c", "c"],
    &["c", "c", "n", "c", "c", "c"],
    &["c", "c", "s", "c", "c"],
    &["c", "c", "[nH]", "c", "c"],
    &["C", "C", "C", "C", "C", "C"],
    &["C", "C", "C"],
    &["C", "C", "N", "C", "C", "O"],
];
const GROUPS: [&str; 5] = ["C(=O)O", "C(=O)[O-]", "[N+](=O)[O-]", "C#N", "S(=O)(=O)N"];

fn ring_label(n: usize) -> String {
    if n < 10 {
        n.to_string()
    } else {
        format!("%{n}")
    }
}

/// Random SMILES from a small fragment grammar: chains of atoms, rings and
/// functional groups with branches, occasional double bonds and dots.
/// Ring labels are unique per string and go past 9 to exercise `%NN`.
pub fn random_smiles(rng: &mut ChaCha8Rng) -> String {
    fn chain(rng: &mut ChaCha8Rng, depth: usize, next_label: &mut usize, out: &mut String) {
        let parts = rng.gen_range(1..=4);
        for i in 0..parts {
            if i > 0 && rng.gen_bool(0.15) {
                out.push('=');
            }
            match rng.gen_range(0..10) {
                0..=5 => out.push_str(ATOMS.choose(rng).unwrap()),
                6..=8 => {
                    let ring = RINGS.choose(rng).unwrap();
                    let label = ring_label(*next_label);
                    *next_label += rng.gen_range(1..4);
                    for (k, atom) in ring.iter().enumerate() {
                        out.push_str(atom);
                        if k == 0 || k + 1 == ring.len() {
                            out.push_str(&label);
                        }
                    }
                }
                _ => out.push_str(GROUPS.choose(rng).unwrap()),
            }
            if depth < 3 && rng.gen_bool(0.3) {
                out.push('(');
                chain(rng, depth + 1, next_label, out);
                out.push(')');
            }
        }
    }
    let mut out = String::new();
    let mut next_label = 1;
    chain(rng, 0, &mut next_label, &mut out);
    if rng.gen_bool(0.05) {
        out.push_str(".[Na+]");
    }
    out
}

/// A valid molecule drawn deterministically from `seed`.
pub fn valid_molecule(seed: u64) -> (String, MolGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let s = random_smiles(&mut rng);
        if let Ok(g) = parse_valid(&s) {
            return (s, g);
        }
    }
}

/// Multiset summary independent of the canonicaliser: element/aromatic/
/// charge/H counts per atom and bond orders keyed by endpoint elements.
pub fn graph_summary(g: &MolGraph) -> (BTreeMap<String, usize>, BTreeMap<String, usize>) {
    let mut atoms = BTreeMap::new();
    for (i, a) in g.atoms().iter().enumerate() {
        let key = format!("{}{}{}h{}", a.element.symbol(), a.aromatic, a.charge, g.hydrogens(i));
        *atoms.entry(key).or_insert(0) += 1;
    }
    let mut bonds = BTreeMap::new();
    for b in g.bonds() {
        let mut ends = [g.atom(b.a).element.symbol(), g.atom(b.b).element.symbol()];
        ends.sort();
        *bonds.entry(format!("{}{:?}{}", ends[0], b.order, ends[1])).or_insert(0) += 1;
    }
    (atoms, bonds)
}

pub fn random_priority(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
