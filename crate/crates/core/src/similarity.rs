//! Similarity measures between feature vectors: the Gaussian-based `idsim`
//! plus `cosine` and binary `jaccard`.
//!
//! `idsim` compares two vectors feature by feature. A feature takes part
//! only when it is present (positive) on at least one side; each
//! participating feature contributes `exp(-(x-mu)^2 / sigma)`, where the
//! second vector plays `mu` and `sigma` is that feature's standard
//! deviation over the training set. The mean of the contributions is
//! rescaled by `(1 + mean) / 2`, so defined values land in `[0.5, 1]`;
//! when no feature is present on either side the similarity is 0 by
//! convention. Note the exponent divides by `sigma`, not `sigma^2`.
//!
//! All three measures are symmetric, return values in `[0, 1]`, and score
//! a non-degenerate vector against itself as exactly 1.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FrequencyMatrix;
use crate::stats::column_mean_std;
use crate::Real;

/// Default replacement for zero standard deviations; keeps the Gaussian
/// exponent defined for constant features.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;

/// Per-feature training statistics backing `idsim`.
///
/// `mu` holds the column means (the cluster mean when the stats come from
/// a cluster); `sigma` holds the per-column standard deviation over the
/// training set, n−1 divisor. Kernels never see a sigma below
/// `sigma_floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats<T> {
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
    pub sigma_floor: T,
}

impl<T: Real> FeatureStats<T> {
    pub fn new(mu: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(Error::LengthMismatch {
                left: mu.len(),
                right: sigma.len(),
            });
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < T::zero()) {
            return Err(Error::validation("sigma entries must be finite and >= 0"));
        }
        Ok(FeatureStats {
            mu,
            sigma,
            sigma_floor: T::from_f64(DEFAULT_SIGMA_FLOOR).unwrap(),
        })
    }

    /// Column means and standard deviations of a training matrix.
    pub fn from_matrix(matrix: &FrequencyMatrix<T>) -> Self {
        let (mu, sigma) = column_mean_std(matrix.values.view());
        FeatureStats {
            mu,
            sigma,
            sigma_floor: T::from_f64(DEFAULT_SIGMA_FLOOR).unwrap(),
        }
    }

    pub fn with_sigma_floor(mut self, floor: T) -> Self {
        self.sigma_floor = floor;
        self
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Sigma actually used in kernels: `max(sigma[j], sigma_floor)`.
    pub fn effective_sigma(&self, j: usize) -> T {
        self.sigma[j].max(self.sigma_floor)
    }
}

/// `exp(-(x-mu)^2 / sigma)` when the feature is present on either side,
/// 0 when it is present on neither. `sigma` must be positive; callers go
/// through [`FeatureStats::effective_sigma`].
pub fn gaussian_term<T: Real>(x: T, mu: T, sigma: T) -> T {
    if feature_exists(x, mu) {
        let d = x - mu;
        (-(d * d) / sigma).exp()
    } else {
        T::zero()
    }
}

/// Whether a feature is present (strictly positive) in either vector.
pub fn feature_exists<T: Real>(x: T, mu: T) -> bool {
    x > T::zero() || mu > T::zero()
}

fn gaussian_sum_count<T: Real>(
    sample: ArrayView1<'_, T>,
    reference: ArrayView1<'_, T>,
    stats: &FeatureStats<T>,
) -> Result<(T, usize)> {
    if sample.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: sample.len(),
            right: reference.len(),
        });
    }
    if sample.len() != stats.len() {
        return Err(Error::LengthMismatch {
            left: sample.len(),
            right: stats.len(),
        });
    }
    let mut sum = T::zero();
    let mut count = 0usize;
    for (j, (&x, &mu)) in sample.iter().zip(reference.iter()).enumerate() {
        if feature_exists(x, mu) {
            sum += gaussian_term(x, mu, stats.effective_sigma(j));
            count += 1;
        }
    }
    Ok((sum, count))
}

/// Mean Gaussian term over the features present on either side; 0 when no
/// feature is present at all. Always in `[0, 1]`.
pub fn gaussian_average<T: Real>(
    sample: ArrayView1<'_, T>,
    reference: ArrayView1<'_, T>,
    stats: &FeatureStats<T>,
) -> Result<T> {
    let (sum, count) = gaussian_sum_count(sample, reference, stats)?;
    if count == 0 {
        Ok(T::zero())
    } else {
        Ok(sum / T::from_usize(count).unwrap())
    }
}

/// The Gaussian similarity: `(1 + gaussian_average) / 2`, or 0 when no
/// feature is present on either side. Range is `{0} ∪ [0.5, 1]`.
pub fn idsim<T: Real>(
    sample: ArrayView1<'_, T>,
    reference: ArrayView1<'_, T>,
    stats: &FeatureStats<T>,
) -> Result<T> {
    let (sum, count) = gaussian_sum_count(sample, reference, stats)?;
    if count == 0 {
        return Ok(T::zero());
    }
    let avg = sum / T::from_usize(count).unwrap();
    let two = T::one() + T::one();
    Ok((T::one() + avg) / two)
}

/// Cosine similarity, 0 when either vector is all-zero. Inputs are
/// non-negative, so the result is clamped to `[0, 1]`.
pub fn cosine<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return Ok(T::zero());
    }
    // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): identical vectors
    // then score exactly 1.0.
    let sim = dot / (na * nb).sqrt();
    Ok(sim.max(T::zero()).min(T::one()))
}

/// Jaccard similarity of the positive-support sets: |intersection| /
/// |union|. Two empty sets are identical, so the result is 1.
pub fn jaccard<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&x, &y) in a.iter().zip(b.iter()) {
        let px = x > T::zero();
        let py = y > T::zero();
        if px && py {
            inter += 1;
        }
        if px || py {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(T::one());
    }
    Ok(T::from_usize(inter).unwrap() / T::from_usize(union).unwrap())
}

/// Name of a similarity measure, as used in CLI flags and config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Idsim,
    Cosine,
    Jaccard,
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MeasureKind::Idsim => "idsim",
            MeasureKind::Cosine => "cosine",
            MeasureKind::Jaccard => "jaccard",
        };
        f.write_str(name)
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idsim" => Ok(MeasureKind::Idsim),
            "cosine" => Ok(MeasureKind::Cosine),
            "jaccard" => Ok(MeasureKind::Jaccard),
            other => Err(Error::config(format!(
                "unknown measure \"{other}\" (expected idsim, cosine or jaccard)"
            ))),
        }
    }
}

/// A selected measure plus the stats `idsim` needs. Immutable once built;
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMeasure<T> {
    pub kind: MeasureKind,
    pub stats: Option<FeatureStats<T>>,
}

impl<T: Real> SimilarityMeasure<T> {
    pub fn new(kind: MeasureKind, stats: Option<FeatureStats<T>>) -> Result<Self> {
        if kind == MeasureKind::Idsim && stats.is_none() {
            return Err(Error::config("idsim requires feature statistics"));
        }
        Ok(SimilarityMeasure { kind, stats })
    }

    pub fn idsim(stats: FeatureStats<T>) -> Self {
        SimilarityMeasure {
            kind: MeasureKind::Idsim,
            stats: Some(stats),
        }
    }

    pub fn cosine() -> Self {
        SimilarityMeasure {
            kind: MeasureKind::Cosine,
            stats: None,
        }
    }

    pub fn jaccard() -> Self {
        SimilarityMeasure {
            kind: MeasureKind::Jaccard,
            stats: None,
        }
    }

    pub fn similarity(&self, a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> Result<T> {
        match self.kind {
            MeasureKind::Idsim => {
                let stats = self
                    .stats
                    .as_ref()
                    .ok_or_else(|| Error::config("idsim requires feature statistics"))?;
                idsim(a, b, stats)
            }
            MeasureKind::Cosine => cosine(a, b),
            MeasureKind::Jaccard => jaccard(a, b),
        }
    }

    /// `1 − similarity`, in `[0, 1]`.
    pub fn distance(&self, a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> Result<T> {
        Ok(T::one() - self.similarity(a, b)?)
    }
}
