use super::graph::MolGraph;

/// True when `pattern` maps injectively into `mol` with matching element,
/// aromatic flag and charge on atoms and matching order on every pattern
/// bond. Hydrogen counts are not compared and the match need not be
/// induced. Backtracking search; meant for small patterns.
pub fn has_substructure(mol: &MolGraph, pattern: &MolGraph) -> bool {
    if pattern.is_empty() {
        return true;
    }
    if pattern.atom_count() > mol.atom_count() || pattern.bond_count() > mol.bond_count() {
        return false;
    }
    // Visit pattern atoms so each one after the first of its component is
    // adjacent to an already placed atom.
    let mut order = Vec::with_capacity(pattern.atom_count());
    let mut seen = vec![false; pattern.atom_count()];
    for start in 0..pattern.atom_count() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in pattern.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    let mut mapping = vec![usize::MAX; pattern.atom_count()];
    let mut used = vec![false; mol.atom_count()];
    extend(mol, pattern, &order, 0, &mut mapping, &mut used)
}

fn compatible(mol: &MolGraph, pattern: &MolGraph, p: usize, m: usize) -> bool {
    let (a, b) = (pattern.atom(p), mol.atom(m));
    a.element == b.element && a.aromatic == b.aromatic && a.charge == b.charge && pattern.degree(p) <= mol.degree(m)
}

fn extend(
    mol: &MolGraph,
    pattern: &MolGraph,
    order: &[usize],
    depth: usize,
    mapping: &mut [usize],
    used: &mut [bool],
) -> bool {
    let Some(&p) = order.get(depth) else {
        return true;
    };
    for m in 0..mol.atom_count() {
        if used[m] || !compatible(mol, pattern, p, m) {
            continue;
        }
        let bonds_match = pattern.neighbors(p).iter().all(|&(q, pb)| {
            let mq = mapping[q];
            mq == usize::MAX
                || mol
                    .bond_between(m, mq)
                    .is_some_and(|mb| mol.bonds()[mb].order == pattern.bonds()[pb].order)
        });
        if !bonds_match {
            continue;
        }
        mapping[p] = m;
        used[m] = true;
        if extend(mol, pattern, order, depth + 1, mapping, used) {
            return true;
        }
        mapping[p] = usize::MAX;
        used[m] = false;
    }
    false
}
