use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use super::elements::Element;
use super::graph::MolGraph;

/// Why a parsed graph was rejected as a molecule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    EmptyMolecule,
    /// Bond-order sum plus hydrogens matches no allowed valence.
    Valence { bond_sum: String, hydrogens: u32 },
    AromaticOutsideRing,
    /// Element missing from the valence table and written without brackets.
    UnknownElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub atom: Option<usize>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.rule, self.atom) {
            (Rule::EmptyMolecule, _) => write!(f, "empty molecule"),
            (Rule::Valence { bond_sum, hydrogens }, Some(a)) => write!(
                f,
                "valence violation at atom {a} (bond order sum {bond_sum}, {hydrogens} H)"
            ),
            (Rule::AromaticOutsideRing, Some(a)) => write!(f, "aromatic atom {a} is not in a ring"),
            (Rule::UnknownElement, Some(a)) => write!(f, "atom {a} has no valence table entry"),
            (rule, None) => write!(f, "{rule:?}"),
        }
    }
}

impl std::error::Error for Violation {}

/// Allowed valences per element plus the charge adjustment rule.
///
/// Charges shift the allowed valences the way isoelectronic species do:
/// group 13 atoms lose valence with positive charge (B- behaves like C),
/// group 14 atoms lose one valence per unit of charge of either sign, and
/// groups 15 to 17 gain valence with positive charge (N+ behaves like C).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValenceTable {
    allowed: BTreeMap<Element, Vec<u32>>,
}

impl Default for ValenceTable {
    fn default() -> Self {
        let entries: [(Element, &[u32]); 10] = [
            (Element::B, &[3]),
            (Element::C, &[4]),
            (Element::N, &[3, 5]),
            (Element::O, &[2]),
            (Element::P, &[3, 5]),
            (Element::S, &[2, 4, 6]),
            (Element::F, &[1]),
            (Element::CL, &[1]),
            (Element::BR, &[1]),
            (Element::I, &[1]),
        ];
        ValenceTable {
            allowed: entries.iter().map(|(e, v)| (*e, v.to_vec())).collect(),
        }
    }
}

impl ValenceTable {
    pub fn standard() -> &'static ValenceTable {
        static TABLE: OnceLock<ValenceTable> = OnceLock::new();
        TABLE.get_or_init(ValenceTable::default)
    }

    pub fn with_entry(mut self, element: Element, valences: &[u32]) -> Self {
        let mut v = valences.to_vec();
        v.sort_unstable();
        self.allowed.insert(element, v);
        self
    }

    pub fn allowed(&self, element: Element) -> Option<&[u32]> {
        self.allowed.get(&element).map(Vec::as_slice)
    }

    /// Allowed valences after applying the charge rule, ascending.
    pub fn charge_adjusted(&self, element: Element, charge: i8) -> Option<Vec<u32>> {
        let base = self.allowed(element)?;
        let q = charge as i64;
        let shift = |v: u32| -> i64 {
            let v = v as i64;
            match element.atomic_number() {
                5 | 13 => v - q,
                6 | 14 => v - q.abs(),
                _ => v + q,
            }
        };
        let mut out: Vec<u32> = base
            .iter()
            .map(|&v| shift(v))
            .filter(|&v| v >= 0)
            .map(|v| v as u32)
            .collect();
        out.sort_unstable();
        out.dedup();
        Some(out)
    }

    /// Candidate bond-order sums at an atom. Aromatic bonds count 1 each and
    /// an atom with aromatic bonds may carry one extra unit (the single
    /// double bond a Kekulé form would place on it).
    fn bond_sum_candidates(graph: &MolGraph, atom: usize) -> (u32, u32) {
        let (integral, aromatic) = graph.bond_order_parts(atom);
        let low = integral + aromatic;
        let high = if aromatic > 0 { low + 1 } else { low };
        (low, high)
    }

    /// Hydrogen count: explicit for bracket atoms, otherwise implicit.
    pub fn hydrogens(&self, graph: &MolGraph, atom: usize) -> u32 {
        match graph.atom(atom).explicit_hydrogens {
            Some(h) => h as u32,
            None => self.implicit_hydrogens(graph, atom),
        }
    }

    /// Smallest hydrogen count that reaches an allowed valence for the atom
    /// written without brackets (0 when none can be reached). Ignores any
    /// explicit count the atom carries.
    pub fn implicit_hydrogens(&self, graph: &MolGraph, atom: usize) -> u32 {
        let a = graph.atom(atom);
        let Some(allowed) = self.charge_adjusted(a.element, a.charge) else {
            return 0;
        };
        let (low, high) = Self::bond_sum_candidates(graph, atom);
        allowed
            .iter()
            .flat_map(|&v| [low, high].into_iter().filter(move |&s| v >= s).map(move |s| v - s))
            .min()
            .unwrap_or(0)
    }

    /// Accepts iff the graph is nonempty, every aromatic atom lies on a
    /// cycle, and every atom's bond sum plus hydrogens hits an allowed valence.
    pub fn validate(&self, graph: &MolGraph) -> Result<(), Violation> {
        if graph.is_empty() {
            return Err(Violation {
                atom: None,
                rule: Rule::EmptyMolecule,
            });
        }
        let in_ring = graph.ring_atom_flags();
        for (i, atom) in graph.atoms().iter().enumerate() {
            if atom.aromatic && !in_ring[i] {
                return Err(Violation {
                    atom: Some(i),
                    rule: Rule::AromaticOutsideRing,
                });
            }
            let Some(allowed) = self.charge_adjusted(atom.element, atom.charge) else {
                if atom.bracketed() {
                    continue;
                }
                return Err(Violation {
                    atom: Some(i),
                    rule: Rule::UnknownElement,
                });
            };
            let h = self.hydrogens(graph, i);
            let (low, high) = Self::bond_sum_candidates(graph, i);
            if !(allowed.contains(&(low + h)) || allowed.contains(&(high + h))) {
                let (integral, aromatic) = graph.bond_order_parts(i);
                let bond_sum = if aromatic == 0 {
                    integral.to_string()
                } else {
                    format!("{integral}+{aromatic} aromatic")
                };
                return Err(Violation {
                    atom: Some(i),
                    rule: Rule::Valence { bond_sum, hydrogens: h },
                });
            }
        }
        Ok(())
    }
}
