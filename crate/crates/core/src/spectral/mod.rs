//! SVD dominance analysis of the frequency matrix: standardize, decompose,
//! keep components with eigenvalue ≥ 1 (Kaiser rule), keep the prefix that
//! carries 90% of the retained energy, score columns by squared loadings
//! and slice the matrix down to the dominant system calls.
//!
//! Eigenvalues are `s_i² / (n−1)` of the standardized matrix, so the
//! Kaiser threshold of 1 has its usual correlation-matrix meaning.

mod svd;

pub use svd::{svd, Svd};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FrequencyMatrix, MatrixMode};
use crate::stats::column_mean_std;
use crate::Real;

/// Per-column mean/std collected during standardization. The same numbers
/// back the Gaussian similarity's sigma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
    pub zero_variance: Vec<bool>,
}

/// Centers every column and divides by its n−1 standard deviation.
/// Zero-variance columns are centered only and flagged.
pub fn standardize<T: Real>(matrix: &FrequencyMatrix<T>) -> Result<(Array2<T>, ColumnStats<T>)> {
    let (n, m) = matrix.values.dim();
    if n < 2 {
        return Err(Error::validation("insufficient samples: need n >= 2"));
    }
    let (mean, std) = column_mean_std(matrix.values.view());
    let zero_variance: Vec<bool> = std.iter().map(|&s| s == T::zero()).collect();
    let mut out = Array2::<T>::zeros((n, m));
    for j in 0..m {
        for i in 0..n {
            let centered = matrix.values[[i, j]] - mean[j];
            out[[i, j]] = if zero_variance[j] {
                centered
            } else {
                centered / std[j]
            };
        }
    }
    Ok((
        out,
        ColumnStats {
            mean,
            std,
            zero_variance,
        },
    ))
}

/// `λ_i = s_i² / (n−1)`.
pub fn eigenvalues_from_singular<T: Real>(singular_values: &[T], n_samples: usize) -> Vec<T> {
    let denom = T::from_usize(n_samples.saturating_sub(1).max(1)).unwrap();
    singular_values.iter().map(|&s| s * s / denom).collect()
}

/// Kaiser rule: keep the components with eigenvalue ≥ 1. When none
/// qualifies, the single largest component is kept so the pipeline never
/// goes empty.
pub fn kaiser_filter<T: Real>(eigenvalues: &[T]) -> Result<Vec<usize>> {
    if eigenvalues.is_empty() {
        return Err(Error::validation("empty eigenvalue list"));
    }
    let retained: Vec<usize> = eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= T::one())
        .map(|(i, _)| i)
        .collect();
    if !retained.is_empty() {
        return Ok(retained);
    }
    let mut best = 0usize;
    for (i, &v) in eigenvalues.iter().enumerate() {
        if v > eigenvalues[best] {
            best = i;
        }
    }
    Ok(vec![best])
}

/// Output of [`energy_retain`]: the retained prefix and the energy
/// fraction it actually covers.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRetention<T> {
    pub indices: Vec<usize>,
    pub achieved: T,
}

/// Smallest prefix of components whose squared singular values reach the
/// requested fraction of the total energy.
pub fn energy_retain<T: Real>(singular_values: &[T], fraction: T) -> Result<EnergyRetention<T>> {
    if fraction <= T::zero() || fraction > T::one() {
        return Err(Error::config("energy fraction out of range (0, 1]"));
    }
    if singular_values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::validation("singular values must be non-increasing"));
    }
    let total: T = singular_values.iter().map(|&s| s * s).sum();
    if total == T::zero() {
        return Err(Error::validation("zero-energy matrix"));
    }
    let mut cum = T::zero();
    let mut indices = Vec::new();
    let mut achieved = T::zero();
    for (i, &s) in singular_values.iter().enumerate() {
        cum += s * s;
        indices.push(i);
        achieved = cum / total;
        if achieved >= fraction {
            break;
        }
    }
    Ok(EnergyRetention { indices, achieved })
}

/// Column scores and the retained column set from [`select_syscalls`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyscallSelection<T> {
    pub selected: Vec<usize>,
    pub scores: Vec<T>,
}

/// Scores column `j` as `Σ_i s_i² · V[j][i]²` over the retained
/// components, then keeps the columns scoring at least the mean score —
/// or the top `keep_count` when given, ties to the lower column index.
pub fn select_syscalls<T: Real>(
    v: ArrayView2<'_, T>,
    singular_values: &[T],
    components: &[usize],
    keep_count: Option<usize>,
) -> Result<SyscallSelection<T>> {
    if components.is_empty() {
        return Err(Error::validation("no components retained"));
    }
    let (m, r) = v.dim();
    if components.iter().any(|&c| c >= r || c >= singular_values.len()) {
        return Err(Error::validation("component index out of range"));
    }
    let mut scores = vec![T::zero(); m];
    for (j, score) in scores.iter_mut().enumerate() {
        for &c in components {
            let loading = v[[j, c]];
            *score += singular_values[c] * singular_values[c] * loading * loading;
        }
    }
    let selected = match keep_count {
        Some(0) => return Err(Error::config("keep_count must be >= 1")),
        Some(count) => {
            let count = count.min(m);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
            let mut keep: Vec<usize> = order[..count].to_vec();
            keep.sort_unstable();
            keep
        }
        None => {
            let mean = scores.iter().copied().sum::<T>() / T::from_usize(m).unwrap();
            (0..m).filter(|&j| scores[j] >= mean).collect()
        }
    };
    Ok(SyscallSelection { selected, scores })
}

/// Restricts a matrix to the selected columns. Vocabulary is sliced to
/// match, labels and row ids are preserved, and normalized rows are
/// re-normalized over the surviving columns.
pub fn reduce_matrix<T: Real>(
    matrix: &FrequencyMatrix<T>,
    selected: &[usize],
) -> Result<FrequencyMatrix<T>> {
    if selected.is_empty() {
        return Err(Error::validation("empty selection"));
    }
    let m = matrix.n_features();
    if selected.iter().any(|&j| j >= m) {
        return Err(Error::validation("selected column out of range"));
    }
    let mut keep: Vec<usize> = selected.to_vec();
    keep.sort_unstable();
    keep.dedup();

    let n = matrix.n_samples();
    let mut values = Array2::<T>::zeros((n, keep.len()));
    for (out, &j) in keep.iter().enumerate() {
        for i in 0..n {
            values[[i, out]] = matrix.values[[i, j]];
        }
    }
    if matrix.mode == MatrixMode::Normalized {
        for mut row in values.rows_mut() {
            let sum = row.iter().copied().sum::<T>();
            if sum > T::zero() {
                row.mapv_inplace(|v| v / sum);
            }
        }
    }
    FrequencyMatrix::new(
        matrix.rows.clone(),
        matrix.vocab.slice(&keep),
        matrix.mode,
        values,
        matrix.labels.clone(),
    )
}

/// Options for the staged reduction in [`spectral_reduce`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions<T> {
    pub energy_fraction: T,
    pub kaiser: bool,
    pub keep_count: Option<usize>,
}

impl<T: Real> Default for SpectralOptions<T> {
    fn default() -> Self {
        SpectralOptions {
            energy_fraction: T::from_f64(0.9).unwrap(),
            kaiser: true,
            keep_count: None,
        }
    }
}

/// Everything the reduction decided, serialized by the CLI `reduce`
/// subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport<T> {
    pub singular_values: Vec<T>,
    pub eigenvalues: Vec<T>,
    pub kaiser_retained: Vec<usize>,
    pub energy_retained: Vec<usize>,
    pub syscall_scores: Vec<T>,
    pub selected_columns: Vec<usize>,
    pub energy_fraction_achieved: T,
}

/// The full spectral stage: standardize → SVD → Kaiser filter → energy
/// prefix within the retained components → column scoring → matrix
/// reduction. With `kaiser` disabled all components enter the energy
/// step, and `kaiser_retained` reports them all.
pub fn spectral_reduce<T: Real>(
    matrix: &FrequencyMatrix<T>,
    options: &SpectralOptions<T>,
) -> Result<(SpectralReport<T>, FrequencyMatrix<T>)> {
    let (standardized, _stats) = standardize(matrix)?;
    let decomposition = svd(standardized.view())?;
    let eigenvalues = eigenvalues_from_singular(&decomposition.s, matrix.n_samples());
    let kaiser_retained = if options.kaiser {
        kaiser_filter(&eigenvalues)?
    } else {
        (0..decomposition.s.len()).collect()
    };
    let kaiser_singulars: Vec<T> = kaiser_retained.iter().map(|&i| decomposition.s[i]).collect();
    let retention = energy_retain(&kaiser_singulars, options.energy_fraction)?;
    let energy_retained: Vec<usize> = retention
        .indices
        .iter()
        .map(|&i| kaiser_retained[i])
        .collect();
    let selection = select_syscalls(
        decomposition.v.view(),
        &decomposition.s,
        &energy_retained,
        options.keep_count,
    )?;
    let reduced = reduce_matrix(matrix, &selection.selected)?;
    let report = SpectralReport {
        singular_values: decomposition.s,
        eigenvalues,
        kaiser_retained,
        energy_retained,
        syscall_scores: selection.scores,
        selected_columns: selection.selected,
        energy_fraction_achieved: retention.achieved,
    };
    Ok((report, reduced))
}
