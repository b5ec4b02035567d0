use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::graph::{Atom, BondOrder, MolGraph};
use super::valence::ValenceTable;
use super::SmilesError;

const MAX_OPEN_RINGS: usize = 99;

/// Writes a graph as SMILES, starting each component at atom 0 of that
/// component and visiting neighbours in index order.
pub fn write_smiles(graph: &MolGraph) -> Result<String, SmilesError> {
    let order: Vec<usize> = (0..graph.atom_count()).collect();
    write_with_priority(graph, &order)
}

/// Writes a graph with an explicit traversal priority: each component starts
/// at its lowest-priority atom, and neighbours are visited in ascending
/// priority. Distinct priorities give distinct (but equivalent) strings.
pub fn write_with_priority(graph: &MolGraph, priority: &[usize]) -> Result<String, SmilesError> {
    let n = graph.atom_count();
    assert_eq!(priority.len(), n, "one priority per atom");

    let mut sorted_neighbors: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|u| {
            let mut nb = graph.neighbors(u).to_vec();
            nb.sort_by_key(|&(v, _)| (priority[v], v));
            nb
        })
        .collect();

    // Pass 1: spanning forest, visit order and ring-closure bonds.
    let mut visited = vec![false; n];
    let mut bond_done = vec![false; graph.bond_count()];
    let mut parent_bond = vec![usize::MAX; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut preorder = vec![0usize; n];
    let mut roots = Vec::new();
    // (opener, closer, bond)
    let mut closures: Vec<(usize, usize, usize)> = Vec::new();

    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&a| (priority[a], a));
    let mut counter = 0;
    for &root in &starts {
        if visited[root] {
            continue;
        }
        roots.push(root);
        visited[root] = true;
        preorder[root] = counter;
        counter += 1;
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next >= sorted_neighbors[u].len() {
                stack.pop();
                continue;
            }
            let (v, b) = sorted_neighbors[u][*next];
            *next += 1;
            if bond_done[b] {
                continue;
            }
            bond_done[b] = true;
            if visited[v] {
                closures.push((v, u, b));
            } else {
                visited[v] = true;
                preorder[v] = counter;
                counter += 1;
                parent_bond[v] = b;
                children[u].push(v);
                stack.push((v, 0));
            }
        }
    }
    sorted_neighbors.clear();

    // Ring digits at each atom: closings first (ordered by opener visit),
    // then openings (ordered by closer visit).
    let mut ring_events: Vec<Vec<(bool, usize, usize)>> = vec![Vec::new(); n];
    for (idx, &(opener, closer, _)) in closures.iter().enumerate() {
        ring_events[opener].push((true, preorder[closer], idx));
        ring_events[closer].push((false, preorder[opener], idx));
    }
    for events in &mut ring_events {
        events.sort_by_key(|&(is_open, key, _)| (is_open, key));
    }

    // Pass 2: emit.
    enum Step<'a> {
        Atom(usize),
        Text(&'a str),
    }
    let table = ValenceTable::standard();
    let mut out = String::new();
    let mut free: BTreeSet<usize> = (1..=MAX_OPEN_RINGS).collect();
    let mut digit_of = vec![0usize; closures.len()];

    for (ri, &root) in roots.iter().enumerate() {
        if ri > 0 {
            out.push('.');
        }
        let mut stack = vec![Step::Atom(root)];
        while let Some(step) = stack.pop() {
            let u = match step {
                Step::Text(t) => {
                    out.push_str(t);
                    continue;
                }
                Step::Atom(u) => u,
            };
            if parent_bond[u] != usize::MAX {
                let bond = graph.bonds()[parent_bond[u]];
                out.push_str(bond_symbol(graph, bond.a, bond.b, bond.order));
            }
            write_atom(&mut out, graph, table, u);

            let mut released = Vec::new();
            for &(is_open, _, idx) in &ring_events[u] {
                let (opener, closer, b) = closures[idx];
                if is_open {
                    let digit = *free.iter().next().ok_or(SmilesError::GraphTooLarge)?;
                    free.remove(&digit);
                    digit_of[idx] = digit;
                    let order = graph.bonds()[b].order;
                    out.push_str(bond_symbol(graph, opener, closer, order));
                    write_ring_digit(&mut out, digit);
                } else {
                    let digit = digit_of[idx];
                    write_ring_digit(&mut out, digit);
                    released.push(digit);
                }
            }
            free.extend(released);

            let kids = &children[u];
            for (k, &child) in kids.iter().enumerate().rev() {
                if k + 1 == kids.len() {
                    stack.push(Step::Atom(child));
                } else {
                    stack.push(Step::Text(")"));
                    stack.push(Step::Atom(child));
                    stack.push(Step::Text("("));
                }
            }
        }
    }
    Ok(out)
}

fn write_ring_digit(out: &mut String, digit: usize) {
    if digit < 10 {
        let _ = write!(out, "{digit}");
    } else {
        let _ = write!(out, "%{digit:02}");
    }
}

fn bond_symbol(graph: &MolGraph, a: usize, b: usize, order: BondOrder) -> &'static str {
    let both_aromatic = graph.atom(a).aromatic && graph.atom(b).aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

/// Writes an atom without brackets whenever the bare symbol would imply the
/// same hydrogen count; otherwise as a bracket atom.
fn write_atom(out: &mut String, graph: &MolGraph, table: &ValenceTable, i: usize) {
    let atom = graph.atom(i);
    let hydrogens = table.hydrogens(graph, i);
    let can_be_bare = atom.element.in_organic_subset()
        && atom.charge == 0
        && atom.isotope.is_none()
        && (!atom.aromatic || atom.element.aromatic_unbracketed())
        && table.charge_adjusted(atom.element, 0).is_some()
        && table.implicit_hydrogens(graph, i) == hydrogens;
    if can_be_bare {
        push_symbol(out, atom);
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        let _ = write!(out, "{iso}");
    }
    push_symbol(out, atom);
    match hydrogens {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -c);
        }
    }
    out.push(']');
}

fn push_symbol(out: &mut String, atom: &Atom) {
    let symbol = atom.element.symbol();
    if atom.aromatic {
        out.push_str(&symbol.to_ascii_lowercase());
    } else {
        out.push_str(symbol);
    }
}
