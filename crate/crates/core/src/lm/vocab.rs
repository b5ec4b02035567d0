use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::LmError;
use crate::nn::Real;

/// End-of-line symbol; delimits molecules in training text and samples.
pub const EOL: &str = "\n";

/// Splits text into language-model symbols: `Cl` and `Br` are one symbol,
/// every other character is its own symbol.
pub fn split_symbols(text: &str) -> Vec<&str> {
    let mut out = Vec::with_capacity(text.len());
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        let n = if rest.starts_with("Cl") || rest.starts_with("Br") {
            2
        } else {
            c.len_utf8()
        };
        out.push(&rest[..n]);
        rest = &rest[n..];
    }
    out
}

/// Ordered symbol list with its inverse map. Index `k` is the position of
/// the `k`-th symbol; the EOL symbol is always present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Vocabulary with symbols in exactly the given order.
    pub fn from_symbols<S: AsRef<str>>(symbols: &[S]) -> Result<Self, LmError> {
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            let s = s.as_ref();
            if s.is_empty() || index.insert(s.to_string(), i).is_some() {
                return Err(LmError::BadVocabulary(format!("duplicate or empty symbol {s:?}")));
            }
        }
        if !index.contains_key(EOL) {
            return Err(LmError::BadVocabulary("the end-of-line symbol is missing".into()));
        }
        Ok(Vocabulary {
            symbols: symbols.iter().map(|s| s.as_ref().to_string()).collect(),
            index,
        })
    }

    /// Every symbol occurring in the corpus plus EOL, sorted by byte order.
    pub fn build<S: AsRef<str>>(lines: &[S]) -> Result<Self, LmError> {
        let mut set = BTreeSet::new();
        let mut any = false;
        for line in lines {
            let line = line.as_ref().trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                continue;
            }
            any = true;
            set.extend(split_symbols(line));
        }
        if !any {
            return Err(LmError::EmptyCorpus);
        }
        set.insert(EOL);
        let list: Vec<&str> = set.into_iter().collect();
        Self::from_symbols(&list)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, k: usize) -> Option<&str> {
        self.symbols.get(k).map(String::as_str)
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn eol(&self) -> usize {
        self.index[EOL]
    }

    /// Symbol indices of one line (without its line terminator).
    pub fn encode(&self, line: &str) -> Result<Vec<usize>, LmError> {
        let mut pos = 0;
        split_symbols(line)
            .into_iter()
            .map(|s| {
                let at = pos;
                pos += s.len();
                self.index_of(s).ok_or_else(|| LmError::UnknownSymbol {
                    symbol: s.to_string(),
                    position: at,
                })
            })
            .collect()
    }

    pub fn decode(&self, indices: &[usize]) -> Result<String, LmError> {
        let mut out = String::new();
        for &k in indices {
            out.push_str(self.symbol(k).ok_or(LmError::IndexOutOfRange { index: k, len: self.len() })?);
        }
        Ok(out)
    }

    pub fn one_hot<T: Real>(&self, k: usize) -> Result<Vec<T>, LmError> {
        encode_one_hot(k, self.len())
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = LmError;

    fn try_from(v: Vec<String>) -> Result<Self, LmError> {
        Vocabulary::from_symbols(&v)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.symbols
    }
}

/// Length-`len` vector with a single one at index `k`.
pub fn encode_one_hot<T: Real>(k: usize, len: usize) -> Result<Vec<T>, LmError> {
    if k >= len {
        return Err(LmError::IndexOutOfRange { index: k, len });
    }
    let mut v = vec![T::zero(); len];
    v[k] = T::one();
    Ok(v)
}
