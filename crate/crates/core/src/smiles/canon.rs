use super::graph::MolGraph;
use super::valence::ValenceTable;

/// Dense ranks 0..k-1 for the given keys; equal keys share a rank.
fn densify<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            r += 1;
        }
        ranks[idx[w]] = r;
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

/// Canonical atom ranks, a permutation of `0..n`.
///
/// Atoms start ranked by (degree, atomic number, isotope, charge, aromatic
/// flag, hydrogen count). Ranks are refined with the sorted (bond order,
/// neighbour rank) pairs of each atom until the partition stops splitting;
/// remaining ties are broken by promoting the lowest-index atom of the
/// lowest tied class and refining again.
pub fn canonical_ranks(graph: &MolGraph) -> Vec<usize> {
    let n = graph.atom_count();
    if n == 0 {
        return Vec::new();
    }
    let table = ValenceTable::standard();
    let initial: Vec<(usize, u8, u16, i8, bool, u32)> = (0..n)
        .map(|i| {
            let a = graph.atom(i);
            (
                graph.degree(i),
                a.element.atomic_number(),
                a.isotope.unwrap_or(0),
                a.charge,
                a.aromatic,
                table.hydrogens(graph, i),
            )
        })
        .collect();
    let mut ranks = densify(&initial);
    loop {
        ranks = refine(graph, ranks);
        if class_count(&ranks) == n {
            return ranks;
        }
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n).find(|&r| counts[r] > 1).expect("a tied class exists");
        let chosen = (0..n).find(|&i| ranks[i] == tied).expect("class is nonempty");
        let keys: Vec<(usize, bool)> = (0..n).map(|i| (ranks[i], i != chosen)).collect();
        ranks = densify(&keys);
    }
}

fn refine(graph: &MolGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    let bonds = graph.bonds();
    let mut classes = class_count(&ranks);
    loop {
        let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..ranks.len())
            .map(|i| {
                let mut nb: Vec<(u8, usize)> = graph
                    .neighbors(i)
                    .iter()
                    .map(|&(v, b)| (bonds[b].order.code(), ranks[v]))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = densify(&keys);
        let next_classes = class_count(&next);
        if next_classes == classes {
            return ranks;
        }
        classes = next_classes;
        ranks = next;
    }
}
