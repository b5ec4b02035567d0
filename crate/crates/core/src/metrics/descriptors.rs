use serde::{Deserialize, Serialize};

use crate::smiles::elements::HYDROGEN_WEIGHT;
use crate::smiles::{BondOrder, Element, MolGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorVector {
    /// Average molecular weight in g/mol, hydrogens included.
    pub molecular_weight: f64,
    pub donors: usize,
    pub acceptors: usize,
    pub rotatable_bonds: usize,
    pub rings: usize,
}

fn is_n_or_o(e: Element) -> bool {
    e == Element::N || e == Element::O
}

/// Simple physicochemical descriptors. Donors are N/O atoms carrying at
/// least one hydrogen, acceptors are all N/O atoms, rotatable bonds are
/// non-ring single bonds between atoms with at least two heavy neighbours.
pub fn descriptors(graph: &MolGraph) -> DescriptorVector {
    let mut weight = 0.0;
    let mut donors = 0;
    let mut acceptors = 0;
    for (i, atom) in graph.atoms().iter().enumerate() {
        let h = graph.hydrogens(i);
        weight += atom.element.atomic_weight() + h as f64 * HYDROGEN_WEIGHT;
        if is_n_or_o(atom.element) {
            acceptors += 1;
            if h > 0 {
                donors += 1;
            }
        }
    }
    let ring_bonds = graph.ring_bond_flags();
    let rotatable_bonds = graph
        .bonds()
        .iter()
        .zip(&ring_bonds)
        .filter(|(b, ring)| {
            b.order == BondOrder::Single && !**ring && graph.degree(b.a) >= 2 && graph.degree(b.b) >= 2
        })
        .count();
    DescriptorVector {
        molecular_weight: weight,
        donors,
        acceptors,
        rotatable_bonds,
        rings: graph.ring_count(),
    }
}
