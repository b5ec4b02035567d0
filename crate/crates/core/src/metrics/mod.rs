//! Similarity and diversity measures over molecules and SMILES strings.

mod descriptors;
mod fingerprint;
mod scaffold;

use std::fmt::Write as _;

use thiserror::Error;

pub use descriptors::{descriptors, DescriptorVector};
pub use fingerprint::{ecfp, nearest_neighbor_similarity, tanimoto, Fingerprint, DEFAULT_RADIUS, DEFAULT_WIDTH};
pub use scaffold::{murcko_scaffold, scaffold_jaccard, Scaffold};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("fingerprint widths differ: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("the reference set is empty")]
    EmptyReference,
}

/// Edit distance over Unicode scalar values with unit insert, delete and
/// substitute costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// CSV with one row per molecule: canonical SMILES then the descriptors.
pub fn descriptor_csv(rows: &[(String, DescriptorVector)]) -> String {
    let mut out = String::from("smiles,molecular_weight,donors,acceptors,rotatable_bonds,rings\n");
    for (smiles, d) in rows {
        let _ = writeln!(
            out,
            "{},{:.3},{},{},{},{}",
            smiles, d.molecular_weight, d.donors, d.acceptors, d.rotatable_bonds, d.rings
        );
    }
    out
}

/// CSV with one row per molecule: canonical SMILES, fingerprint width and
/// the set bit indices separated by spaces.
pub fn fingerprint_csv(rows: &[(String, Fingerprint)]) -> String {
    let mut out = String::from("smiles,width,bits\n");
    for (smiles, fp) in rows {
        let bits: Vec<String> = fp.set_bits().iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "{},{},{}", smiles, fp.width(), bits.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("c1ccccc1", "c1ccncc1"), 1);
        assert_eq!(levenshtein("CCO", "CCO"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn csv_layout() {
        let d = DescriptorVector {
            molecular_weight: 16.043,
            donors: 0,
            acceptors: 0,
            rotatable_bonds: 0,
            rings: 0,
        };
        let csv = descriptor_csv(&[("C".into(), d)]);
        assert_eq!(csv.lines().nth(1), Some("C,16.043,0,0,0,0"));
        let csv = fingerprint_csv(&[("C".into(), Fingerprint::from_bits(8, &[1, 5]))]);
        assert_eq!(csv.lines().nth(1), Some("C,8,1 5"));
    }
}
