//! Crate-wide error type.

use thiserror::Error;

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by any part of the library.
///
/// Variants are grouped by the subsystem that raises them; several are shared
/// (e.g. [`Error::DimensionMismatch`] is raised by kernels, weighting and
/// prediction alike).
#[derive(Debug, Error)]
pub enum Error {
    // ---- compositions and perturbations ----
    /// A vector could not be validated as a composition.
    #[error("invalid composition: {0}")]
    InvalidComposition(String),
    /// A row of raw counts summed to zero and cannot be normalized.
    #[error("row {0:?} sums to zero and cannot be normalized")]
    ZeroSumRow(String),
    /// The requested coordinate makes the perturbation degenerate
    /// (the coordinate carries the whole mass).
    #[error("coordinate {0} is degenerate for this perturbation (value is 1)")]
    DegenerateCoordinate(usize),
    /// Multiplicative perturbation scale must be nonnegative.
    #[error("invalid perturbation scale {0}: must be >= 0")]
    InvalidScale(f64),
    /// Fixed-coordinate perturbation target must lie in [0, 1].
    #[error("target value {0} out of range [0, 1]")]
    OutOfRange(f64),
    /// The log-ratio shift must be strictly positive.
    #[error("nonpositive shift {0}: the log-ratio shift must be > 0")]
    NonpositiveShift(f64),
    /// Geometric mean requires strictly positive entries.
    #[error("nonpositive entry {value} at index {index}")]
    NonpositiveEntry { index: usize, value: f64 },

    // ---- kernels ----
    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    /// Kernel parameters outside every supported regime.
    #[error("invalid kernel parameters: {0}")]
    InvalidParameters(String),

    // ---- weighting ----
    /// Newick text could not be parsed.
    #[error("newick parse error at byte {offset}: expected {expected}")]
    NewickParse { offset: usize, expected: String },
    /// Two leaves carry the same name.
    #[error("duplicate leaf name {0:?}")]
    DuplicateLeafName(String),
    /// A leaf name was not found in the tree.
    #[error("unknown leaf {0:?}")]
    UnknownLeaf(String),
    /// A weight matrix failed the positive semi-definiteness check.
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
    /// A block structure does not partition the coordinate set.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    /// A weight matrix failed validation.
    #[error("invalid weight matrix: {0}")]
    InvalidWeight(String),

    // ---- learning ----
    /// Linear solve failed even after a jitter retry.
    #[error("kernel system solve failed after jitter retry")]
    SolveFailure,
    /// Cross-validation folds would be empty or degenerate.
    #[error("fold too small: {0}")]
    FoldTooSmall(String),
    /// Stratified folds cannot be built from the class counts.
    #[error("stratification impossible: class {label:?} has {count} samples for {folds} folds")]
    SingleClassFold {
        label: String,
        count: usize,
        folds: usize,
    },
    /// All pairwise distances are zero; the median heuristic is undefined.
    #[error("all points identical: median heuristic is zero")]
    AllPointsIdentical,

    // ---- interpretation ----
    /// A predictor failed while being probed.
    #[error("predictor failed on sample {index}: {message}")]
    PredictorFailure { index: usize, message: String },
    /// Log-contrast coefficients must sum to zero.
    #[error("coefficients sum to {0:.3e}, expected 0")]
    NonzeroSum(f64),
    /// Log-contrast evaluation requires strictly positive coordinates.
    #[error("nonpositive coordinate {index} (value {value}) in log-contrast evaluation")]
    NonpositiveCoordinate { index: usize, value: f64 },

    // ---- embedding ----
    /// A subset selector matched nothing.
    #[error("empty subset")]
    EmptySubset,

    // ---- data I/O ----
    /// Tabular input could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: String,
        message: String,
    },
    /// A named column is missing from the input.
    #[error("missing column {0:?}")]
    MissingColumn(String),
    /// Classification requires exactly two distinct label values.
    #[error("expected exactly 2 distinct labels, found {0:?}")]
    NonBinaryLabels(Vec<String>),
    /// The prevalence/abundance filter removed every feature.
    #[error("all features filtered out (prevalence {prevalence}, min median non-zero {min_median})")]
    AllFeaturesFiltered { prevalence: f64, min_median: f64 },
    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    /// CSV layer failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    /// Model (de)serialization failure.
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
