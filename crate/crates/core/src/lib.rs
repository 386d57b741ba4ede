//! Intrusion detection from system-call traces, treated as a text-mining
//! problem: processes are documents, system calls are words.
//!
//! The pipeline runs ingest → spectral reduction → similarity-driven k-means
//! → per-sample scalar compression → nearest-neighbor classification:
//!
//! * [`ingest`] parses trace files and KDD-style connection records into a
//!   process × system-call [`FrequencyMatrix`], and generates seeded
//!   synthetic datasets.
//! * [`spectral`] ranks system calls by SVD dominance and drops the ones
//!   that carry no signal.
//! * [`similarity`] provides the Gaussian `idsim` measure plus `cosine` and
//!   `jaccard`, all in `[0, 1]`.
//! * [`clustering`] fits k-means under any of those measures.
//! * [`scalar_reduce`] compresses every sample to a single distance scalar.
//! * [`classify`] runs kNN over scalars or raw vectors and scores the
//!   result (accuracy, detection rate, false-alarm rate).
//! * [`freqpat`] mines frequent system-call itemsets from binary matrices.
//!
//! Everything numeric is generic over [`Real`] (any `num_traits::Float`,
//! in practice `f32` or `f64`); the `*64` aliases at the crate root pick
//! `f64`, which is what the CLI uses.

pub mod classify;
pub mod clustering;
pub mod error;
pub mod freqpat;
pub mod ingest;
pub mod scalar_reduce;
pub mod similarity;
pub mod spectral;
mod stats;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the numeric routines are generic over.
///
/// Blanket-implemented for everything that satisfies the bounds, which in
/// practice means `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum<Self> + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum<Self>
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

pub use error::{Error, Result};

pub use classify::EvaluationReport;
pub use clustering::ClusterModel;
pub use freqpat::FrequentItemsets;
pub use ingest::{
    FrequencyMatrix, LabeledRecordSet, MatrixMode, SyntheticSpec, SyscallTrace, SyscallVocabulary,
};
pub use scalar_reduce::ScalarFeatureSet;
pub use similarity::{FeatureStats, MeasureKind, SimilarityMeasure};
pub use spectral::SpectralReport;

/// `f64`-concrete aliases for the main pipeline types.
pub type FrequencyMatrix64 = FrequencyMatrix<f64>;
pub type FeatureStats64 = FeatureStats<f64>;
pub type SimilarityMeasure64 = SimilarityMeasure<f64>;
pub type ClusterModel64 = ClusterModel<f64>;
pub type ScalarFeatureSet64 = ScalarFeatureSet<f64>;
pub type SpectralReport64 = SpectralReport<f64>;
pub type EvaluationReport64 = EvaluationReport<f64>;

/// `f32` variants, for callers that trade precision for footprint.
pub type FrequencyMatrix32 = FrequencyMatrix<f32>;
pub type FeatureStats32 = FeatureStats<f32>;
pub type SimilarityMeasure32 = SimilarityMeasure<f32>;
pub type ClusterModel32 = ClusterModel<f32>;
