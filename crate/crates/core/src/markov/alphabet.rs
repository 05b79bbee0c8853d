use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense symbol id. `0` and `1` are the reserved start and end markers;
/// alphabet tokens start at `2`.
pub type Symbol = u32;

pub const START: Symbol = 0;
pub const END: Symbol = 1;
pub const START_TOKEN: &str = "$";
pub const END_TOKEN: &str = "&";

/// Ordered set of tokens. Symbol order (used for tie-breaking) is the order
/// tokens were supplied in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    tokens: Vec<String>,
    index: HashMap<String, Symbol>,
}

impl Alphabet {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::param("alphabet is empty"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t == START_TOKEN || t == END_TOKEN || t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::param(format!("token {t:?} is reserved or malformed")));
            }
            if index.insert(t.clone(), i as Symbol + 2).is_some() {
                return Err(Error::param(format!("duplicate token {t:?}")));
            }
        }
        Ok(Alphabet { tokens, index })
    }

    /// Number of ordinary symbols, `|Σ|`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// PST fanout `|Σ| + 1`.
    pub fn fanout(&self) -> u32 {
        self.tokens.len() as u32 + 1
    }

    /// Size of a dense per-symbol array (reserved ids included).
    pub fn table_len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn id(&self, token: &str) -> Option<Symbol> {
        match token {
            START_TOKEN => Some(START),
            END_TOKEN => Some(END),
            _ => self.index.get(token).copied(),
        }
    }

    pub fn token(&self, sym: Symbol) -> &str {
        match sym {
            START => START_TOKEN,
            END => END_TOKEN,
            s => &self.tokens[(s - 2) as usize],
        }
    }

    /// Ordinary symbols in order.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + Clone {
        2..self.tokens.len() as Symbol + 2
    }

    /// Symbols a histogram counts: END then Σ.
    pub fn predicted(&self) -> impl Iterator<Item = Symbol> + Clone {
        std::iter::once(END).chain(self.symbols())
    }

    /// Symbols a predictor can be extended with: START then Σ.
    pub fn extenders(&self) -> impl Iterator<Item = Symbol> + Clone {
        std::iter::once(START).chain(self.symbols())
    }

    pub fn encode(&self, tokens: &[&str]) -> Result<Vec<Symbol>> {
        tokens
            .iter()
            .map(|t| self.id(t).ok_or_else(|| Error::input(format!("unknown token {t:?}"))))
            .collect()
    }

    pub fn render(&self, syms: &[Symbol]) -> String {
        syms.iter().map(|&s| self.token(s)).collect::<Vec<_>>().join(" ")
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;
    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Alphabet::new(tokens)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.tokens
    }
}

/// A stored sequence: ordinary symbols, and whether the end marker follows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    pub symbols: Vec<Symbol>,
    pub terminated: bool,
}

impl Sequence {
    /// Length counting the end marker when present.
    pub fn len_with_end(&self) -> usize {
        self.symbols.len() + usize::from(self.terminated)
    }

    /// Symbol predicted at position `i` (`END` one past the last symbol).
    #[inline]
    pub(crate) fn predicted_at(&self, i: usize) -> Symbol {
        if i < self.symbols.len() {
            self.symbols[i]
        } else {
            END
        }
    }

    /// Number of prediction positions (one per symbol, plus the end marker).
    pub(crate) fn positions(&self) -> usize {
        self.len_with_end()
    }
}

/// Sequences bounded by `l_max` (counting the end marker).
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub alphabet: Alphabet,
    pub sequences: Vec<Sequence>,
    pub l_max: usize,
}

/// Bound every sequence: ones whose length with the end marker is at most
/// `l_max` are kept as they are, longer ones keep their first `l_max`
/// symbols and lose the end marker.
pub fn truncate_sequences(alphabet: Alphabet, raw: Vec<Vec<Symbol>>, l_max: usize) -> Result<SequenceDataset> {
    if l_max < 1 {
        return Err(Error::param("l_max must be at least 1"));
    }
    let top = alphabet.len() as Symbol + 2;
    let sequences = raw
        .into_iter()
        .map(|mut symbols| {
            if let Some(bad) = symbols.iter().find(|&&s| s < 2 || s >= top) {
                return Err(Error::input(format!("symbol id {bad} is not in the alphabet")));
            }
            if symbols.len() < l_max {
                Ok(Sequence { symbols, terminated: true })
            } else {
                symbols.truncate(l_max);
                Ok(Sequence { symbols, terminated: false })
            }
        })
        .collect::<Result<_>>()?;
    Ok(SequenceDataset { alphabet, sequences, l_max })
}

impl SequenceDataset {
    /// Encode token lists with an alphabet made of their distinct tokens in
    /// sorted order, then truncate.
    pub fn from_tokens<S: AsRef<str>>(raw: &[Vec<S>], l_max: usize) -> Result<Self> {
        let mut tokens: Vec<&str> = raw.iter().flatten().map(AsRef::as_ref).collect();
        tokens.sort_unstable();
        tokens.dedup();
        let alphabet = Alphabet::new(tokens.iter().copied())?;
        Self::from_tokens_with(alphabet, raw, l_max)
    }

    pub fn from_tokens_with<S: AsRef<str>>(alphabet: Alphabet, raw: &[Vec<S>], l_max: usize) -> Result<Self> {
        let encoded = raw
            .iter()
            .map(|s| s.iter().map(|t| alphabet.id(t.as_ref()).filter(|&id| id >= 2)
                .ok_or_else(|| Error::input(format!("token {:?} not in alphabet", t.as_ref())))).collect())
            .collect::<Result<Vec<Vec<Symbol>>>>()?;
        truncate_sequences(alphabet, encoded, l_max)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Total number of predicted symbols (ordinary symbols plus end markers).
    pub fn total_predictions(&self) -> usize {
        self.sequences.iter().map(Sequence::positions).sum()
    }
}

/// Newline-delimited sequences of whitespace-separated tokens. Blank lines
/// are empty sequences; lines starting with `#` are skipped.
pub fn read_sequences<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim_start().starts_with('#') {
            continue;
        }
        let seq: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if let Some(t) = seq.iter().find(|t| *t == START_TOKEN || *t == END_TOKEN) {
            return Err(Error::InputLine { line: i + 1, message: format!("reserved token {t:?}") });
        }
        out.push(seq);
    }
    Ok(out)
}
