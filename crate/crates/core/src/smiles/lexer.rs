use super::SmilesError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    /// Organic-subset atom written without brackets (`C`, `Cl`, `c`).
    Atom,
    /// Bond symbol, including the stereo bonds `/` and `\`.
    Bond,
    /// Ring-closure number, 0-99 (`%NN` for two digits).
    RingClosure(u8),
    BranchOpen,
    BranchClose,
    /// Full `[...]` atom.
    BracketAtom,
    Dot,
    Eol,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte offset of the first character.
    pub position: usize,
}

/// Splits a SMILES line into tokens. Concatenating the token texts gives
/// back the input exactly. A single trailing newline becomes an `Eol` token.
pub fn tokenize(input: &str) -> Result<Vec<Token>, SmilesError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let c = bytes[i];
        let kind = match c {
            b'C' if bytes.get(i + 1) == Some(&b'l') => {
                i += 2;
                TokenKind::Atom
            }
            b'B' if bytes.get(i + 1) == Some(&b'r') => {
                i += 2;
                TokenKind::Atom
            }
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' | b'b' | b'c' | b'n' | b'o'
            | b'p' | b's' => {
                i += 1;
                TokenKind::Atom
            }
            b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                i += 1;
                TokenKind::Bond
            }
            b'0'..=b'9' => {
                i += 1;
                TokenKind::RingClosure(c - b'0')
            }
            b'%' => {
                let digits = bytes.get(i + 1..i + 3);
                match digits {
                    Some([a, b]) if a.is_ascii_digit() && b.is_ascii_digit() => {
                        i += 3;
                        TokenKind::RingClosure((a - b'0') * 10 + (b - b'0'))
                    }
                    _ => return Err(SmilesError::UnknownCharacter { position: i, character: '%' }),
                }
            }
            b'(' => {
                i += 1;
                TokenKind::BranchOpen
            }
            b')' => {
                i += 1;
                TokenKind::BranchClose
            }
            b'.' => {
                i += 1;
                TokenKind::Dot
            }
            b'[' => match bytes[i + 1..].iter().position(|&b| b == b']' || b == b'[' || b == b'\n') {
                Some(off) if bytes[i + 1 + off] == b']' => {
                    i += off + 2;
                    TokenKind::BracketAtom
                }
                _ => return Err(SmilesError::UnclosedBracketAtom { position: i }),
            },
            b'\n' if i + 1 == bytes.len() => {
                i += 1;
                TokenKind::Eol
            }
            _ => {
                let character = input[i..].chars().next().unwrap_or('\u{fffd}');
                return Err(SmilesError::UnknownCharacter { position: i, character });
            }
        };
        tokens.push(Token {
            kind,
            text: input[start..i].to_string(),
            position: start,
        });
    }
    Ok(tokens)
}
