use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::seed::mix64;
use crate::smiles::MolGraph;

pub const DEFAULT_WIDTH: usize = 2048;
pub const DEFAULT_RADIUS: usize = 2;

/// Folded circular fingerprint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    width: usize,
    words: Vec<u64>,
    raw_ids: Vec<u64>,
}

impl Fingerprint {
    /// Fingerprint whose raw identifiers are `ids`, folded to `width` bits.
    pub fn from_raw_ids(width: usize, ids: Vec<u64>) -> Self {
        assert!(width > 0, "fingerprint width must be positive");
        let mut words = vec![0u64; width.div_ceil(64)];
        for &id in &ids {
            let bit = (id % width as u64) as usize;
            words[bit / 64] |= 1 << (bit % 64);
        }
        Fingerprint { width, words, raw_ids: ids }
    }

    /// Fingerprint with exactly the given bits set (raw identifiers are the
    /// bit indices themselves).
    pub fn from_bits(width: usize, bits: &[usize]) -> Self {
        assert!(bits.iter().all(|&b| b < width), "bit index beyond width");
        Self::from_raw_ids(width, bits.iter().map(|&b| b as u64).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn raw_ids(&self) -> &[u64] {
        &self.raw_ids
    }

    /// Set bit indices, ascending.
    pub fn set_bits(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &word) in self.words.iter().enumerate() {
            let mut rest = word;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                out.push(w * 64 + b);
                rest &= rest - 1;
            }
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243F_6A88_85A3_08D3u64, |h, &w| mix64(h.rotate_left(17) ^ w))
}

/// Extended-connectivity fingerprint.
///
/// Round 0 identifiers hash (atomic number, heavy degree, hydrogen count,
/// charge, aromatic flag, ring-membership flag). Round `r` hashes the round,
/// the atom's previous identifier and its neighbours' sorted
/// (bond code, previous identifier) pairs. A round-`r` environment whose bond
/// set equals one already emitted (earlier round, or same round with a
/// smaller identifier) is dropped; round-0 identifiers are always kept, one
/// per atom. Identifiers are folded modulo `width`.
pub fn ecfp(graph: &MolGraph, radius: usize, width: usize) -> Fingerprint {
    let n = graph.atom_count();
    let in_ring = graph.ring_atom_flags();
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = graph.atom(i);
            hash_words(&[
                a.element.atomic_number() as u64,
                graph.degree(i) as u64,
                graph.hydrogens(i) as u64,
                a.charge as i64 as u64,
                a.aromatic as u64,
                in_ring[i] as u64,
            ])
        })
        .collect();
    let mut raw = ids.clone();
    let bond_words = graph.bond_count().div_ceil(64).max(1);
    let mut envs: Vec<Vec<u64>> = vec![vec![0; bond_words]; n];
    let mut seen: Vec<Vec<u64>> = vec![vec![0; bond_words]];
    for round in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_envs = Vec::with_capacity(n);
        for i in 0..n {
            let mut pairs: Vec<(u64, u64)> = graph
                .neighbors(i)
                .iter()
                .map(|&(j, b)| (graph.bonds()[b].order.code() as u64, ids[j]))
                .collect();
            pairs.sort_unstable();
            let mut words = vec![round as u64, ids[i]];
            for (code, id) in pairs {
                words.push(code);
                words.push(id);
            }
            next_ids.push(hash_words(&words));
            let mut env = envs[i].clone();
            for &(j, b) in graph.neighbors(i) {
                env[b / 64] |= 1 << (b % 64);
                for (e, o) in env.iter_mut().zip(&envs[j]) {
                    *e |= o;
                }
            }
            next_envs.push(env);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| next_ids[i]);
        for i in order {
            if !seen.contains(&next_envs[i]) {
                seen.push(next_envs[i].clone());
                raw.push(next_ids[i]);
            }
        }
        ids = next_ids;
        envs = next_envs;
    }
    Fingerprint::from_raw_ids(width, raw)
}

/// `|a & b| / |a | b|`; two empty fingerprints count as identical.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, MetricsError> {
    if a.width != b.width {
        return Err(MetricsError::WidthMismatch {
            left: a.width,
            right: b.width,
        });
    }
    let mut inter = 0u32;
    let mut union = 0u32;
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        log::debug!("tanimoto of two empty fingerprints taken as 1.0");
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// For each query, the highest Tanimoto similarity to any reference.
/// Output order follows the query order.
pub fn nearest_neighbor_similarity(queries: &[Fingerprint], references: &[Fingerprint]) -> Result<Vec<f64>, MetricsError> {
    if references.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    queries
        .par_iter()
        .map(|q| {
            references.iter().try_fold(0.0f64, |best, r| Ok(best.max(tanimoto(q, r)?)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_valid;

    #[test]
    fn tanimoto_examples() {
        let a = Fingerprint::from_bits(16, &[1, 2, 3]);
        let b = Fingerprint::from_bits(16, &[2, 3, 4]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let c = Fingerprint::from_bits(16, &[9]);
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.0);
        let empty = Fingerprint::from_bits(16, &[]);
        assert_eq!(tanimoto(&empty, &empty).unwrap(), 1.0);
        let wide = Fingerprint::from_bits(32, &[1]);
        assert_eq!(
            tanimoto(&a, &wide),
            Err(MetricsError::WidthMismatch { left: 16, right: 32 })
        );
    }

    #[test]
    fn methane_has_one_identifier() {
        let fp = ecfp(&parse_valid("C").unwrap(), 2, 2048);
        assert_eq!(fp.raw_ids().len(), 1);
        assert_eq!(fp.count_ones(), 1);
    }

    #[test]
    fn ethanol_identifier_count() {
        // Round 0: C, C, O (three different atoms). Round 1: bond sets
        // {C-C}, {C-C, C-O}, {C-O}, all new. Round 2: every atom already
        // covers both bonds, a set emitted in round 1.
        let fp = ecfp(&parse_valid("CCO").unwrap(), 2, 2048);
        assert_eq!(fp.raw_ids().len(), 6);
        let fp1 = ecfp(&parse_valid("CCO").unwrap(), 1, 2048);
        assert_eq!(fp1.raw_ids().len(), 6);
        let fp0 = ecfp(&parse_valid("CCO").unwrap(), 0, 2048);
        assert_eq!(fp0.raw_ids().len(), 3);
    }

    #[test]
    fn set_bits_are_fold_of_raw_ids() {
        let fp = ecfp(&parse_valid("c1ccccc1C(=O)NCC").unwrap(), 2, 64);
        let mut folded: Vec<usize> = fp.raw_ids().iter().map(|id| (id % 64) as usize).collect();
        folded.sort_unstable();
        folded.dedup();
        assert_eq!(fp.set_bits(), folded);
        assert!(fp.set_bits().iter().all(|&b| b < 64));
    }

    #[test]
    fn nearest_neighbor_cases() {
        let a = Fingerprint::from_bits(8, &[0, 1]);
        let b = Fingerprint::from_bits(8, &[5]);
        assert_eq!(nearest_neighbor_similarity(&[a.clone(), b.clone()], std::slice::from_ref(&a)).unwrap(), vec![1.0, 0.0]);
        assert_eq!(nearest_neighbor_similarity(&[a], &[]), Err(MetricsError::EmptyReference));
    }
}
