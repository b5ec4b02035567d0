use std::collections::BTreeSet;

use crate::smiles::{canonical_smiles, MolGraph, SmilesError};

/// Ring systems plus linkers of a molecule.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaffold {
    pub graph: MolGraph,
    /// Canonical SMILES; empty for an acyclic molecule.
    pub smiles: String,
}

impl Scaffold {
    /// True when the molecule had no ring, so nothing survived pruning.
    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }
}

/// Removes non-ring atoms of degree at most one until none remain. Atoms
/// that lose neighbours keep their valence by gaining hydrogens, so
/// `Cn1cccc1` gives `c1cc[nH]c1` and cyclohexanone gives cyclohexane.
pub fn murcko_scaffold(graph: &MolGraph) -> Result<Scaffold, SmilesError> {
    let n = graph.atom_count();
    let in_ring = graph.ring_atom_flags();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|i| graph.degree(i)).collect();
    let mut queue: Vec<usize> = (0..n).filter(|&i| !in_ring[i] && degree[i] <= 1).collect();
    while let Some(i) = queue.pop() {
        if !alive[i] {
            continue;
        }
        alive[i] = false;
        for &(j, _) in graph.neighbors(i) {
            if alive[j] {
                degree[j] -= 1;
                if !in_ring[j] && degree[j] <= 1 {
                    queue.push(j);
                }
            }
        }
    }
    let (mut sub, old_of_new) = graph.induced_subgraph(&alive);
    for (new, &old) in old_of_new.iter().enumerate() {
        let lost: u32 = graph
            .neighbors(old)
            .iter()
            .filter(|(j, _)| !alive[*j])
            .map(|&(_, b)| graph.bonds()[b].order.integral().unwrap_or(1))
            .sum();
        let h = graph.hydrogens(old) + lost;
        sub.atom_mut(new).explicit_hydrogens = Some(h.min(u8::MAX as u32) as u8);
    }
    let smiles = if sub.is_empty() {
        String::new()
    } else {
        canonical_smiles(&sub)?
    };
    Ok(Scaffold { graph: sub, smiles })
}

/// `|A ∩ B| / |A ∪ B|` over scaffold strings; 0 when both sets are empty.
pub fn scaffold_jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::{canonicalize, parse_valid};

    fn scaffold_of(s: &str) -> String {
        murcko_scaffold(&parse_valid(s).unwrap()).unwrap().smiles
    }

    #[test]
    fn examples() {
        let benzene = canonicalize("c1ccccc1").unwrap();
        assert_eq!(scaffold_of("Cc1ccccc1"), benzene);
        assert_eq!(scaffold_of("c1ccccc1"), benzene);
        assert_eq!(scaffold_of("c1ccccc1CCc1ccccc1"), canonicalize("c1ccccc1CCc1ccccc1").unwrap());
        assert_eq!(scaffold_of("CCc1ccc(CC)cc1CCO"), benzene);
        assert_eq!(scaffold_of("O=C1CCCCC1"), canonicalize("C1CCCCC1").unwrap());
        assert_eq!(scaffold_of("Cn1cccc1"), canonicalize("c1cc[nH]c1").unwrap());
    }

    #[test]
    fn acyclic_gives_empty_scaffold() {
        let s = murcko_scaffold(&parse_valid("CCCCO").unwrap()).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.smiles, "");
    }

    #[test]
    fn fixed_point() {
        for smi in ["CC(=O)Nc1ccc(O)cc1", "c1ccc2ccccc2c1CC1CC1N", "O=C(O)C1CCN(Cc2ccccc2)CC1"] {
            let once = scaffold_of(smi);
            assert_eq!(scaffold_of(&once), once, "{smi}");
        }
    }

    #[test]
    fn jaccard() {
        let set = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(scaffold_jaccard(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(scaffold_jaccard(&set(&["a"]), &set(&["b"])), 0.0);
        assert!((scaffold_jaccard(&set(&["x", "y"]), &set(&["y", "z"])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(scaffold_jaccard(&set(&[]), &set(&[])), 0.0);
    }
}
