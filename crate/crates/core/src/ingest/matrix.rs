use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{SyscallTrace, SyscallVocabulary};
use crate::Real;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// How matrix cells encode system-call usage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    /// Raw occurrence counts.
    Count,
    /// Presence, thresholded at > 0.
    Binary,
    /// Counts divided by the row sum; all-zero rows stay all-zero.
    Normalized,
}

impl fmt::Display for MatrixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MatrixMode::Count => "count",
            MatrixMode::Binary => "binary",
            MatrixMode::Normalized => "normalized",
        };
        f.write_str(name)
    }
}

impl FromStr for MatrixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(MatrixMode::Count),
            "binary" => Ok(MatrixMode::Binary),
            "normalized" => Ok(MatrixMode::Normalized),
            other => Err(Error::config(format!(
                "unknown matrix mode \"{other}\" (expected count, binary or normalized)"
            ))),
        }
    }
}

/// The process × system-call matrix: one row per sample, one column per
/// vocabulary token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMatrix<T> {
    pub rows: Vec<String>,
    pub vocab: SyscallVocabulary,
    pub mode: MatrixMode,
    pub values: Array2<T>,
    pub labels: Vec<Option<String>>,
}

impl<T: Real> FrequencyMatrix<T> {
    pub fn new(
        rows: Vec<String>,
        vocab: SyscallVocabulary,
        mode: MatrixMode,
        values: Array2<T>,
        labels: Vec<Option<String>>,
    ) -> Result<Self> {
        let matrix = FrequencyMatrix {
            rows,
            vocab,
            mode,
            values,
            labels,
        };
        matrix.validate()?;
        Ok(matrix)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.values.row(i)
    }

    /// Distinct labels present, sorted; unlabeled rows are ignored.
    pub fn distinct_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.labels.iter().flatten().cloned().collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Checks shape agreement, row-id uniqueness and the mode-specific
    /// value invariants.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = self.values.dim();
        if self.rows.len() != n {
            return Err(Error::LengthMismatch {
                left: self.rows.len(),
                right: n,
            });
        }
        if self.labels.len() != n {
            return Err(Error::LengthMismatch {
                left: self.labels.len(),
                right: n,
            });
        }
        if self.vocab.len() != m {
            return Err(Error::LengthMismatch {
                left: self.vocab.len(),
                right: m,
            });
        }
        let mut seen = HashSet::new();
        for id in &self.rows {
            if !seen.insert(id) {
                return Err(Error::validation(format!("duplicate sample id \"{id}\"")));
            }
        }
        let tol = T::from_f64(ROW_SUM_TOLERANCE).unwrap();
        for (i, row) in self.values.rows().into_iter().enumerate() {
            for &v in row.iter() {
                if !v.is_finite() || v < T::zero() {
                    return Err(Error::validation(format!(
                        "row {i}: values must be finite and non-negative"
                    )));
                }
                match self.mode {
                    MatrixMode::Count => {
                        if v.fract() != T::zero() {
                            return Err(Error::validation(format!(
                                "row {i}: count mode requires integer values"
                            )));
                        }
                    }
                    MatrixMode::Binary => {
                        if v != T::zero() && v != T::one() {
                            return Err(Error::validation(format!(
                                "row {i}: binary mode requires values in {{0, 1}}"
                            )));
                        }
                    }
                    MatrixMode::Normalized => {}
                }
            }
            if self.mode == MatrixMode::Normalized {
                let sum = row.iter().copied().sum::<T>();
                if sum != T::zero() && (sum - T::one()).abs() > tol {
                    return Err(Error::validation(format!(
                        "row {i}: normalized mode requires row sums of 1, got {sum}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of [`build_matrix`]: the matrix plus, when a fixed vocabulary
/// was supplied, the tokens that fell outside it with their counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBuild<T> {
    pub matrix: FrequencyMatrix<T>,
    pub dropped: BTreeMap<String, usize>,
}

/// Builds the frequency matrix for a set of traces.
///
/// With `vocab` given, it becomes the column basis and unknown tokens are
/// dropped (counted in the returned report); otherwise the basis is built
/// from the traces themselves.
pub fn build_matrix<T: Real>(
    traces: &[SyscallTrace],
    mode: MatrixMode,
    vocab: Option<&SyscallVocabulary>,
) -> Result<MatrixBuild<T>> {
    if traces.is_empty() {
        return Err(Error::validation("no traces"));
    }
    let vocab = match vocab {
        Some(v) => v.clone(),
        None => SyscallVocabulary::from_traces(traces),
    };
    let n = traces.len();
    let m = vocab.len();
    let mut values = Array2::<T>::zeros((n, m));
    let mut dropped = BTreeMap::new();
    for (i, trace) in traces.iter().enumerate() {
        for call in &trace.calls {
            match vocab.index_of(call) {
                Some(j) => values[[i, j]] += T::one(),
                None => *dropped.entry(call.clone()).or_insert(0) += 1,
            }
        }
    }
    match mode {
        MatrixMode::Count => {}
        MatrixMode::Binary => {
            values.mapv_inplace(|v| if v > T::zero() { T::one() } else { T::zero() });
        }
        MatrixMode::Normalized => {
            for mut row in values.rows_mut() {
                let sum = row.iter().copied().sum::<T>();
                if sum > T::zero() {
                    row.mapv_inplace(|v| v / sum);
                }
            }
        }
    }
    let rows = traces.iter().map(|t| t.trace_id.clone()).collect();
    let labels = traces.iter().map(|t| t.label.clone()).collect();
    let matrix = FrequencyMatrix::new(rows, vocab, mode, values, labels)?;
    Ok(MatrixBuild { matrix, dropped })
}
