//! Dataset ingestion: system-call trace files, KDD-style connection
//! records, the process × system-call frequency matrix, and a seeded
//! synthetic generator for desk-scale experiments.
//!
//! Trace format, one process per line:
//!
//! ```text
//! <trace_id> <label|-> <token> [<token> ...]
//! ```
//!
//! `#` starts a comment line, blank lines are skipped, `-` marks an
//! unlabeled trace. A 42-field comma-separated row format is accepted for
//! connection records, with a user-supplied attack-name → class table.

mod kdd;
mod matrix;
mod synthetic;
mod trace;
mod vocab;

pub use kdd::{
    feature_kinds, parse_category_map, parse_kdd_csv, FeatureKind, LabeledRecordSet,
    KDD_FEATURE_NAMES,
};
pub use matrix::{build_matrix, FrequencyMatrix, MatrixBuild, MatrixMode};
pub use synthetic::{generate_synthetic, ClassProfile, SyntheticSpec};
pub use trace::{parse_trace_file, write_trace_file, SyscallTrace};
pub use vocab::SyscallVocabulary;
