//! Label vocabularies and the reserved symbols.

use crate::error::{Result, TransegError};

/// Reserved symbol names in model and LM files. They never appear as
/// ordinary labels.
pub const BLANK_NAME: &str = "<blank>";
pub const EOS_NAME: &str = "<eos>";
pub const BOS_NAME: &str = "<bos>";

/// Index of a label in its [`Vocabulary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub u32);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An ordered set of distinct label symbols. Blank, sentence end and the
/// begin-of-sequence context pad live outside the vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    names: Vec<String>,
}

impl Vocabulary {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = labels.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(TransegError::InvalidVocabulary(
                "at least one label required".into(),
            ));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(TransegError::InvalidVocabulary(format!(
                    "label {i} is empty"
                )));
            }
            if name == BLANK_NAME || name == EOS_NAME || name == BOS_NAME {
                return Err(TransegError::InvalidVocabulary(format!(
                    "label {name:?} is a reserved symbol"
                )));
            }
            if names[..i].contains(name) {
                return Err(TransegError::InvalidVocabulary(format!(
                    "duplicate label {name:?}"
                )));
            }
        }
        Ok(Vocabulary { names })
    }

    /// Vocabulary with `n` synthetic labels: `a`, `b`, ... then `l26`, `l27`, ...
    pub fn synthetic(n: usize) -> Self {
        let names = (0..n)
            .map(|i| {
                if i < 26 {
                    char::from(b'a' + i as u8).to_string()
                } else {
                    format!("l{i}")
                }
            })
            .collect::<Vec<_>>();
        Vocabulary { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[id.index()]
    }

    pub fn id(&self, name: &str) -> Result<LabelId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| LabelId(i as u32))
            .ok_or_else(|| TransegError::OutOfVocabulary(name.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = LabelId> + '_ {
        (0..self.names.len() as u32).map(LabelId)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Parse a sequence of label names into ids.
    pub fn parse_labels(&self, names: &[String]) -> Result<Vec<LabelId>> {
        names.iter().map(|n| self.id(n)).collect()
    }

    /// Render a sequence of ids as names.
    pub fn render(&self, labels: &[LabelId]) -> Vec<String> {
        labels.iter().map(|&l| self.name(l).to_string()).collect()
    }
}
