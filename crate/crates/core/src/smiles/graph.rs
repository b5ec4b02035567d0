use super::elements::Element;
use super::valence::ValenceTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Small integer code used in hashing and canonical ranking.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    /// Integral bond order; aromatic bonds are handled separately by valence code.
    pub fn integral(self) -> Option<u32> {
        match self {
            BondOrder::Single => Some(1),
            BondOrder::Double => Some(2),
            BondOrder::Triple => Some(3),
            BondOrder::Aromatic => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub charge: i8,
    /// Hydrogen count written inside brackets. `None` for organic-subset
    /// atoms written without brackets, whose hydrogens are implicit.
    pub explicit_hydrogens: Option<u8>,
    pub isotope: Option<u16>,
}

impl Atom {
    pub fn organic(element: Element, aromatic: bool) -> Self {
        Atom {
            element,
            aromatic,
            charge: 0,
            explicit_hydrogens: None,
            isotope: None,
        }
    }

    pub fn bracketed(&self) -> bool {
        self.explicit_hydrogens.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("bond endpoint {0} is not an atom index")]
    BadIndex(usize),
    #[error("bond from atom {0} to itself")]
    SelfLoop(usize),
    #[error("atoms {0} and {1} are already bonded")]
    DuplicateBond(usize, usize),
}

/// A labelled molecular graph. Hydrogens are not nodes: bracket atoms carry
/// an explicit count and other atoms get implicit hydrogens from the
/// valence table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Bonds that were introduced by ring-closure digits when parsing.
    ring_closures: Vec<usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.adjacency.push(Vec::new());
        self.atoms.len() - 1
    }

    pub fn add_bond(&mut self, a: usize, b: usize, order: BondOrder) -> Result<usize, GraphError> {
        let n = self.atoms.len();
        if a >= n {
            return Err(GraphError::BadIndex(a));
        }
        if b >= n {
            return Err(GraphError::BadIndex(b));
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if self.bond_between(a, b).is_some() {
            return Err(GraphError::DuplicateBond(a, b));
        }
        self.bonds.push(Bond { a, b, order });
        let idx = self.bonds.len() - 1;
        self.adjacency[a].push((b, idx));
        self.adjacency[b].push((a, idx));
        Ok(idx)
    }

    pub(crate) fn mark_ring_closure(&mut self, bond: usize) {
        self.ring_closures.push(bond);
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atom_mut(&mut self, i: usize) -> &mut Atom {
        &mut self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn ring_closures(&self) -> &[usize] {
        &self.ring_closures
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbour, bond index)` pairs in insertion order.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|(n, _)| *n == b)
            .map(|&(_, bond)| bond)
    }

    /// Total hydrogen count under the standard valence table.
    pub fn hydrogens(&self, atom: usize) -> u32 {
        ValenceTable::standard().hydrogens(self, atom)
    }

    /// Sum of integral bond orders and the number of aromatic bonds at `atom`.
    pub fn bond_order_parts(&self, atom: usize) -> (u32, u32) {
        let mut integral = 0;
        let mut aromatic = 0;
        for &(_, b) in &self.adjacency[atom] {
            match self.bonds[b].order.integral() {
                Some(o) => integral += o,
                None => aromatic += 1,
            }
        }
        (integral, aromatic)
    }

    /// Per-bond flag: true when the bond lies on a cycle (is not a bridge).
    pub fn ring_bond_flags(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut in_ring = vec![true; self.bonds.len()];
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0usize;
        // Iterative Tarjan bridge finding: (atom, parent bond, next neighbour slot).
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, usize::MAX, 0));
            while let Some(&mut (u, parent_bond, ref mut next)) = stack.last_mut() {
                if *next < self.adjacency[u].len() {
                    let (v, b) = self.adjacency[u][*next];
                    *next += 1;
                    if b == parent_bond {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, b, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            in_ring[parent_bond] = false;
                        }
                    }
                }
            }
        }
        in_ring
    }

    /// Per-atom flag: true when the atom has at least one ring bond.
    pub fn ring_atom_flags(&self) -> Vec<bool> {
        let ring_bonds = self.ring_bond_flags();
        let mut flags = vec![false; self.atoms.len()];
        for (bond, _) in self.bonds.iter().zip(&ring_bonds).filter(|(_, r)| **r) {
            flags[bond.a] = true;
            flags[bond.b] = true;
        }
        flags
    }

    /// Connected-component label per atom, labels numbered from 0.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.atoms.len();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    /// Cyclomatic number: independent cycles in the graph.
    pub fn ring_count(&self) -> usize {
        let (components, _) = self.components();
        self.bonds.len() + components - self.atoms.len()
    }

    /// Subgraph induced by the atoms with `keep[i] == true`, plus the map
    /// from new to old indices.
    pub fn induced_subgraph(&self, keep: &[bool]) -> (MolGraph, Vec<usize>) {
        let mut map = vec![usize::MAX; self.atoms.len()];
        let mut old_of_new = Vec::new();
        let mut sub = MolGraph::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if keep[i] {
                map[i] = sub.add_atom(atom.clone());
                old_of_new.push(i);
            }
        }
        for bond in &self.bonds {
            if keep[bond.a] && keep[bond.b] {
                sub.add_bond(map[bond.a], map[bond.b], bond.order)
                    .expect("bonds of a valid graph stay valid in a subgraph");
            }
        }
        (sub, old_of_new)
    }

    /// Appends a disjoint copy of `other`; returns the index offset of its atoms.
    pub fn append(&mut self, other: &MolGraph) -> usize {
        let offset = self.atoms.len();
        for atom in &other.atoms {
            self.add_atom(atom.clone());
        }
        for bond in &other.bonds {
            self.add_bond(bond.a + offset, bond.b + offset, bond.order)
                .expect("copied bonds are valid");
        }
        offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, closed: bool) -> MolGraph {
        let mut g = MolGraph::new();
        for _ in 0..n {
            g.add_atom(Atom::organic(Element::C, false));
        }
        for i in 1..n {
            g.add_bond(i - 1, i, BondOrder::Single).unwrap();
        }
        if closed {
            g.add_bond(n - 1, 0, BondOrder::Single).unwrap();
        }
        g
    }

    #[test]
    fn rejects_bad_bonds() {
        let mut g = chain(2, false);
        assert_eq!(g.add_bond(0, 0, BondOrder::Single), Err(GraphError::SelfLoop(0)));
        assert_eq!(g.add_bond(0, 1, BondOrder::Double), Err(GraphError::DuplicateBond(0, 1)));
        assert_eq!(g.add_bond(0, 5, BondOrder::Single), Err(GraphError::BadIndex(5)));
    }

    #[test]
    fn ring_flags_on_ring_with_tail() {
        // cyclohexane with a methyl on atom 0
        let mut g = chain(6, true);
        let m = g.add_atom(Atom::organic(Element::C, false));
        g.add_bond(0, m, BondOrder::Single).unwrap();
        let flags = g.ring_bond_flags();
        assert_eq!(flags.iter().filter(|f| **f).count(), 6);
        assert!(!flags[6]);
        let atoms = g.ring_atom_flags();
        assert!(atoms[..6].iter().all(|f| *f));
        assert!(!atoms[6]);
        assert_eq!(g.ring_count(), 1);
    }

    #[test]
    fn components_and_ring_count() {
        let mut g = chain(3, false);
        g.append(&chain(3, true));
        let (count, labels) = g.components();
        assert_eq!(count, 2);
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(g.ring_count(), 1);
    }
}
