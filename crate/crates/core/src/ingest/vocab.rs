use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SyscallTrace;

/// The column basis of a frequency matrix: distinct system-call tokens in
/// lexicographic order, with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SyscallVocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl SyscallVocabulary {
    /// Builds a vocabulary from arbitrary tokens; sorts and deduplicates.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        tokens.sort();
        tokens.dedup();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        SyscallVocabulary { tokens, index }
    }

    pub fn from_traces(traces: &[SyscallTrace]) -> Self {
        Self::from_tokens(traces.iter().flat_map(|t| t.calls.iter().cloned()))
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, j: usize) -> &str {
        &self.tokens[j]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Sub-vocabulary restricted to the given column positions (ascending),
    /// e.g. after spectral column selection.
    pub fn slice(&self, keep: &[usize]) -> SyscallVocabulary {
        Self::from_tokens(keep.iter().map(|&j| self.tokens[j].clone()))
    }
}

impl TryFrom<Vec<String>> for SyscallVocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        if tokens.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(
                "vocabulary tokens must be strictly sorted and unique",
            ));
        }
        Ok(Self::from_tokens(tokens))
    }
}

impl From<SyscallVocabulary> for Vec<String> {
    fn from(v: SyscallVocabulary) -> Vec<String> {
        v.tokens
    }
}
