//! SMILES lexing, parsing, validation, canonicalisation and writing.
//!
//! Aromaticity is taken as written (lowercase atoms are aromatic) and stereo
//! marks are accepted but dropped before the graph is built, so canonical
//! strings are stereo-free.

mod canon;
pub mod elements;
mod graph;
mod lexer;
mod parser;
mod substructure;
mod valence;
mod writer;

pub use canon::canonical_ranks;
pub use elements::Element;
pub use graph::{Atom, Bond, BondOrder, GraphError, MolGraph};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use substructure::has_substructure;
pub use valence::{Rule, ValenceTable, Violation};
pub use writer::{write_smiles, write_with_priority};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SmilesError {
    #[error("unknown character {character:?} at position {position}")]
    UnknownCharacter { position: usize, character: char },
    #[error("bracket atom opened at position {position} is never closed")]
    UnclosedBracketAtom { position: usize },
    #[error("malformed bracket atom {text} at position {position}")]
    InvalidBracketAtom { position: usize, text: String },
    #[error("ring closure {digit} is never matched")]
    UnmatchedRingClosure { digit: u8 },
    #[error("ring closure {digit} has conflicting bond symbols")]
    ConflictingRingBond { digit: u8 },
    #[error("unbalanced branch at position {position}")]
    UnbalancedBranch { position: usize },
    #[error("bond at position {position} has no atom to attach to")]
    DanglingBond { position: usize },
    #[error("ring closure at position {position} bonds an atom to itself")]
    SelfBond { position: usize },
    #[error("ring closure at position {position} duplicates an existing bond")]
    DuplicateBond { position: usize },
    #[error("line break inside SMILES at position {position}")]
    UnexpectedEol { position: usize },
    #[error("more than 99 ring closures open at once")]
    GraphTooLarge,
    #[error("invalid molecule: {0}")]
    Invalid(Violation),
}

/// Tokenizes and parses a SMILES string without valence checks.
pub fn parse_smiles(input: &str) -> Result<MolGraph, SmilesError> {
    parse(&tokenize(input)?)
}

/// Checks a graph against a valence table.
pub fn validate(graph: &MolGraph, table: &ValenceTable) -> Result<(), Violation> {
    table.validate(graph)
}

/// Parses and validates against the standard valence table.
pub fn parse_valid(input: &str) -> Result<MolGraph, SmilesError> {
    let graph = parse_smiles(input)?;
    validate(&graph, ValenceTable::standard()).map_err(SmilesError::Invalid)?;
    Ok(graph)
}

/// True when the string parses and validates.
pub fn is_valid(input: &str) -> bool {
    parse_valid(input).is_ok()
}

/// Canonical SMILES of a graph.
pub fn canonical_smiles(graph: &MolGraph) -> Result<String, SmilesError> {
    write_with_priority(graph, &canonical_ranks(graph))
}

/// Canonical SMILES of a string: identical for all strings that describe
/// isomorphic (stereo-stripped) graphs.
pub fn canonicalize(input: &str) -> Result<String, SmilesError> {
    canonical_smiles(&parse_valid(input)?)
}
