use std::collections::BTreeMap;

use super::elements::Element;
use super::graph::{Atom, BondOrder, GraphError, MolGraph};
use super::lexer::{Token, TokenKind};
use super::SmilesError;

/// Builds a molecular graph from a token list. Stereo marks are dropped.
pub fn parse(tokens: &[Token]) -> Result<MolGraph, SmilesError> {
    let mut graph = MolGraph::new();
    let mut prev: Option<usize> = None;
    // Bond symbol waiting for the next atom or ring digit, with its position.
    let mut pending: Option<(Option<BondOrder>, usize)> = None;
    // Open branches: (atom before the branch, position of '(', atoms seen in branch).
    let mut branches: Vec<(Option<usize>, usize, usize)> = Vec::new();
    let mut rings: BTreeMap<u8, (usize, Option<BondOrder>)> = BTreeMap::new();

    for (idx, token) in tokens.iter().enumerate() {
        match token.kind {
            TokenKind::Atom | TokenKind::BracketAtom => {
                let atom = if token.kind == TokenKind::Atom {
                    organic_atom(&token.text)
                } else {
                    bracket_atom(&token.text, token.position)?
                };
                let current = graph.add_atom(atom);
                if let Some(p) = prev {
                    let explicit = pending.take().and_then(|(o, _)| o);
                    let order = explicit.unwrap_or_else(|| implicit_order(&graph, p, current));
                    graph
                        .add_bond(p, current, order)
                        .map_err(|e| graph_error(e, token.position))?;
                } else if let Some((_, pos)) = pending {
                    return Err(SmilesError::DanglingBond { position: pos });
                }
                if let Some(b) = branches.last_mut() {
                    b.2 += 1;
                }
                prev = Some(current);
            }
            TokenKind::Bond => {
                if prev.is_none() || pending.is_some() {
                    return Err(SmilesError::DanglingBond { position: token.position });
                }
                pending = Some((bond_order(&token.text), token.position));
            }
            TokenKind::RingClosure(digit) => {
                let Some(current) = prev else {
                    return Err(SmilesError::UnmatchedRingClosure { digit });
                };
                let here = pending.take().and_then(|(o, _)| o);
                match rings.remove(&digit) {
                    None => {
                        rings.insert(digit, (current, here));
                    }
                    Some((opener, there)) => {
                        let order = match (here, there) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(SmilesError::ConflictingRingBond { digit })
                            }
                            (Some(a), _) | (None, Some(a)) => a,
                            (None, None) => implicit_order(&graph, opener, current),
                        };
                        let bond = graph
                            .add_bond(opener, current, order)
                            .map_err(|e| graph_error(e, token.position))?;
                        graph.mark_ring_closure(bond);
                    }
                }
            }
            TokenKind::BranchOpen => {
                if prev.is_none() || pending.is_some() {
                    return Err(SmilesError::UnbalancedBranch { position: token.position });
                }
                branches.push((prev, token.position, 0));
            }
            TokenKind::BranchClose => {
                if let Some((_, pos)) = pending {
                    return Err(SmilesError::DanglingBond { position: pos });
                }
                match branches.pop() {
                    Some((before, _, atoms)) if atoms > 0 => prev = before,
                    _ => return Err(SmilesError::UnbalancedBranch { position: token.position }),
                }
            }
            TokenKind::Dot => {
                if prev.is_none() || pending.is_some() {
                    return Err(SmilesError::DanglingBond { position: token.position });
                }
                prev = None;
            }
            TokenKind::Eol => {
                if idx + 1 != tokens.len() {
                    return Err(SmilesError::UnexpectedEol { position: token.position });
                }
            }
        }
    }
    if let Some((_, pos)) = pending {
        return Err(SmilesError::DanglingBond { position: pos });
    }
    if let Some(&(_, pos, _)) = branches.first() {
        return Err(SmilesError::UnbalancedBranch { position: pos });
    }
    if let Some((&digit, _)) = rings.iter().next() {
        return Err(SmilesError::UnmatchedRingClosure { digit });
    }
    Ok(graph)
}

fn graph_error(err: GraphError, position: usize) -> SmilesError {
    match err {
        GraphError::SelfLoop(_) => SmilesError::SelfBond { position },
        GraphError::DuplicateBond(..) => SmilesError::DuplicateBond { position },
        GraphError::BadIndex(_) => unreachable!("parser only bonds existing atoms"),
    }
}

fn implicit_order(graph: &MolGraph, a: usize, b: usize) -> BondOrder {
    if graph.atom(a).aromatic && graph.atom(b).aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

/// `None` for the directional single bonds, which count as unspecified.
fn bond_order(text: &str) -> Option<BondOrder> {
    match text {
        "-" => Some(BondOrder::Single),
        "=" => Some(BondOrder::Double),
        "#" => Some(BondOrder::Triple),
        ":" => Some(BondOrder::Aromatic),
        _ => None,
    }
}

fn organic_atom(text: &str) -> Atom {
    let aromatic = text.starts_with(|c: char| c.is_ascii_lowercase());
    let symbol = if aromatic {
        text.to_ascii_uppercase()
    } else {
        text.to_string()
    };
    let element = Element::from_symbol(&symbol).expect("lexer emits organic-subset symbols only");
    Atom::organic(element, aromatic)
}

fn bracket_atom(text: &str, position: usize) -> Result<Atom, SmilesError> {
    let invalid = || SmilesError::InvalidBracketAtom {
        position,
        text: text.to_string(),
    };
    let body = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(invalid)?;
    let b = body.as_bytes();
    let mut i = 0;

    let digits = |i: &mut usize| -> Option<u32> {
        let start = *i;
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        (start < *i).then(|| body[start..*i].parse().ok()).flatten()
    };

    let isotope = match digits(&mut i) {
        Some(v) => Some(u16::try_from(v).map_err(|_| invalid())?),
        None => None,
    };

    let (element, aromatic) = if i < b.len() && b[i].is_ascii_lowercase() {
        let two = body.get(i..i + 2).filter(|s| matches!(*s, "se" | "as" | "te"));
        let sym = two.unwrap_or(&body[i..i + 1]);
        let mut capitalised = sym.to_string();
        capitalised[..1].make_ascii_uppercase();
        let e = Element::from_symbol(&capitalised)
            .filter(|e| e.aromatic_in_brackets())
            .ok_or_else(invalid)?;
        i += sym.len();
        (e, true)
    } else if i < b.len() && b[i].is_ascii_uppercase() {
        let two = body
            .get(i..i + 2)
            .filter(|s| s.as_bytes()[1].is_ascii_lowercase())
            .and_then(Element::from_symbol);
        match two {
            Some(e) => {
                i += 2;
                (e, false)
            }
            None => {
                let e = Element::from_symbol(&body[i..i + 1]).ok_or_else(invalid)?;
                i += 1;
                (e, false)
            }
        }
    } else {
        return Err(invalid());
    };

    // Chirality is accepted and discarded.
    if i < b.len() && b[i] == b'@' {
        i += 1;
        if i < b.len() && b[i] == b'@' {
            i += 1;
        } else if body[i..].starts_with(['T', 'A', 'S', 'O']) {
            let class = body.get(i..i + 2).ok_or_else(invalid)?;
            if !matches!(class, "TH" | "AL" | "SP" | "TB" | "OH") {
                return Err(invalid());
            }
            i += 2;
            digits(&mut i).ok_or_else(invalid)?;
        }
    }

    let mut hydrogens = 0u8;
    if i < b.len() && b[i] == b'H' {
        i += 1;
        hydrogens = match digits(&mut i) {
            Some(n) => u8::try_from(n).map_err(|_| invalid())?,
            None => 1,
        };
    }

    let mut charge: i32 = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        let sign = if b[i] == b'+' { 1 } else { -1 };
        i += 1;
        if let Some(n) = digits(&mut i) {
            charge = sign * n as i32;
        } else {
            charge = sign;
            while i < b.len() && b[i] == b[i - 1] {
                charge += sign;
                i += 1;
            }
        }
    }
    let charge = i8::try_from(charge)
        .ok()
        .filter(|c| c.abs() <= 15)
        .ok_or_else(invalid)?;

    if i < b.len() && b[i] == b':' {
        i += 1;
        digits(&mut i).ok_or_else(invalid)?;
    }
    if i != b.len() {
        return Err(invalid());
    }
    Ok(Atom {
        element,
        aromatic,
        charge,
        explicit_hydrogens: Some(hydrogens),
        isotope,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{parse_smiles, SmilesError};
    use super::*;

    #[test]
    fn benzene_is_a_six_cycle() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert!(g.atoms().iter().all(|a| a.aromatic && a.element == Element::C));
        assert_eq!(g.bond_count(), 6);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert!(g.ring_atom_flags().iter().all(|f| *f));
        assert_eq!(g.ring_closures().len(), 1);
        assert!((0..6).all(|i| g.degree(i) == 2));
    }

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond_count(), 2);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
        assert_eq!(g.atom(2).element, Element::O);
        assert_eq!(g.hydrogens(0), 3);
        assert_eq!(g.hydrogens(1), 2);
        assert_eq!(g.hydrogens(2), 1);
    }

    #[test]
    fn branches_and_errors() {
        assert_eq!(
            parse_smiles("C("),
            Err(SmilesError::UnbalancedBranch { position: 1 })
        );
        assert_eq!(parse_smiles("C)"), Err(SmilesError::UnbalancedBranch { position: 1 }));
        assert_eq!(parse_smiles("C()C"), Err(SmilesError::UnbalancedBranch { position: 2 }));
        assert_eq!(parse_smiles("(C)"), Err(SmilesError::UnbalancedBranch { position: 0 }));
        assert_eq!(parse_smiles("C1CC"), Err(SmilesError::UnmatchedRingClosure { digit: 1 }));
        assert_eq!(parse_smiles("C="), Err(SmilesError::DanglingBond { position: 1 }));
        assert_eq!(parse_smiles("=C"), Err(SmilesError::DanglingBond { position: 0 }));
        assert_eq!(parse_smiles("C(=)C"), Err(SmilesError::DanglingBond { position: 2 }));
        assert_eq!(parse_smiles("C11"), Err(SmilesError::SelfBond { position: 2 }));
        assert_eq!(parse_smiles("C12CC12"), Err(SmilesError::DuplicateBond { position: 6 }));
        assert_eq!(
            parse_smiles("C=1CC-1"),
            Err(SmilesError::ConflictingRingBond { digit: 1 })
        );
        assert!(parse_smiles("C..C").is_err());
    }

    #[test]
    fn branch_restores_previous_atom() {
        let g = parse_smiles("CC(C)(C)O").unwrap();
        assert_eq!(g.degree(1), 4);
        assert_eq!(g.atom(4).element, Element::O);
        assert!(g.bond_between(1, 4).is_some());
    }

    #[test]
    fn ring_bond_order_from_either_end() {
        let g = parse_smiles("C=1CCCCC1").unwrap();
        assert_eq!(g.bonds()[g.bond_between(0, 5).unwrap()].order, BondOrder::Double);
        let g = parse_smiles("C1CCCCC=1").unwrap();
        assert_eq!(g.bonds()[g.bond_between(0, 5).unwrap()].order, BondOrder::Double);
        let g = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(g.bonds()[g.bond_between(5, 6).unwrap()].order, BondOrder::Single);
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[13CH3][N+](=O)[O-]").unwrap();
        let c = g.atom(0);
        assert_eq!((c.isotope, c.explicit_hydrogens, c.charge), (Some(13), Some(3), 0));
        assert_eq!(g.atom(1).charge, 1);
        assert_eq!(g.atom(3).charge, -1);
        let g = parse_smiles("[C@@H](F)(Cl)Br").unwrap();
        assert_eq!(g.atom(0).explicit_hydrogens, Some(1));
        let g = parse_smiles("[Fe++]").unwrap();
        assert_eq!(g.atom(0).charge, 2);
        let g = parse_smiles("c1cc[nH]c1").unwrap();
        assert!(g.atom(3).aromatic && g.atom(3).explicit_hydrogens == Some(1));
        let g = parse_smiles("[se]1cccc1").unwrap();
        assert_eq!(g.atom(0).element.symbol(), "Se");
        let g = parse_smiles("[NH4+:3]").unwrap();
        assert_eq!(g.atom(0).explicit_hydrogens, Some(4));
        assert!(parse_smiles("[Xy]").is_err());
        assert!(parse_smiles("[C@XX]").is_err());
        assert!(parse_smiles("[]").is_err());
    }

    #[test]
    fn stereo_bonds_are_single() {
        let g = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(g.bonds()[0].order, BondOrder::Single);
        assert_eq!(g.bonds()[1].order, BondOrder::Double);
    }

    #[test]
    fn dot_disconnects() {
        let g = parse_smiles("[Na+].[Cl-]").unwrap();
        assert_eq!(g.bond_count(), 0);
        assert_eq!(g.components().0, 2);
    }
}
