//! Sample-file ingestion: one state token per line, or `context,state` CSV
//! rows. Labels map to dense indices in first-appearance order unless an
//! alphabet (JSON array of labels) fixes the order.

use std::collections::HashMap;
use std::path::Path;

use crate::dist::SampleSequence;
use crate::error::{Error, Result};

/// Label ↔ index mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    frozen: bool,
}

impl Alphabet {
    /// An alphabet that grows as new labels appear.
    pub fn open() -> Self {
        Self::default()
    }

    /// A fixed alphabet; unknown labels are rejected.
    pub fn fixed(labels: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Parse(format!("duplicate label {l:?} in alphabet")));
            }
        }
        Ok(Self {
            labels,
            index,
            frozen: true,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let labels: Vec<String> = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("alphabet must be a JSON array of strings: {e}")))?;
        Self::fixed(labels)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn lookup(&mut self, label: &str) -> Result<usize> {
        if let Some(&i) = self.index.get(label) {
            return Ok(i);
        }
        if self.frozen {
            return Err(Error::Parse(format!("label {label:?} is not in the alphabet")));
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        Ok(i)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Parses one token per line; blank lines are skipped and surrounding
/// whitespace trimmed.
pub fn parse_samples(text: &str, mut alphabet: Alphabet) -> Result<(Alphabet, SampleSequence)> {
    let mut states = Vec::new();
    for line in text.lines() {
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        states.push(alphabet.lookup(token)?);
    }
    if alphabet.is_empty() {
        return Err(Error::Parse(
            "empty sample and no alphabet: the number of states is unknown".into(),
        ));
    }
    let seq = SampleSequence::new(states, alphabet.len())?;
    Ok((alphabet, seq))
}

/// `(context, state)` observations with their alphabets.
#[derive(Debug, Clone)]
pub struct PairData {
    pub contexts: Alphabet,
    pub states: Alphabet,
    pub pairs: Vec<(usize, usize)>,
}

/// Parses two-column `context,state` CSV. A first row reading
/// `context,state` is treated as a header.
pub fn parse_pairs(text: &str, contexts: Alphabet, states: Alphabet) -> Result<PairData> {
    let mut data = PairData {
        contexts,
        states,
        pairs: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse(format!(
                "line {}: expected `context,state`, got {line:?}",
                lineno + 1
            )));
        }
        if data.pairs.is_empty() && fields == ["context", "state"] {
            continue;
        }
        let y = data.contexts.lookup(fields[0])?;
        let x = data.states.lookup(fields[1])?;
        data.pairs.push((y, x));
    }
    if data.contexts.is_empty() || data.states.is_empty() {
        return Err(Error::Parse(
            "no rows and no alphabets: the table shape is unknown".into(),
        ));
    }
    Ok(data)
}
