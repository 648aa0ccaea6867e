//! Kernel methods for compositional data.
//!
//! Compositions (nonnegative vectors summing to one) carry only relative
//! information, which breaks standard regression tooling in two places: the
//! model must live on the simplex, and any per-feature interpretation must
//! respect the sum constraint. This crate covers both ends:
//!
//! * [`compdata`]: simplex points, the two coordinate perturbations that stay
//!   on the simplex, and the shifted centered log-ratio transform.
//! * [`kernels`]: a catalog of simplex kernels across four geometries, their
//!   induced distances, and Gram-matrix assembly with PSD diagnostics.
//! * [`weighting`]: prior-similarity weight matrices (block partitions,
//!   phylogenetic UniFrac similarities from Newick trees) and the weighted
//!   kernel variants.
//! * [`learn`]: kernel ridge regression/classification, data-adaptive default
//!   grids and hierarchical cross-validation model selection.
//! * [`interpret`]: compositional feature influence and dependence curves
//!   for arbitrary predictors, with the log-contrast model as exact oracle.
//! * [`embed`]: kernel PCA with out-of-sample projection, kernel-distance
//!   summary scores and kernel medoids.
//! * [`datio`]: counts-CSV ingestion, label handling and the
//!   prevalence/abundance feature filter.
//! * [`simgen`]: seeded synthetic designs used by the test and acceptance
//!   suites, plus the importance-measure comparison harness.

pub mod compdata;
pub mod datio;
pub mod embed;
mod error;
pub mod interpret;
pub mod kernels;
pub mod learn;
mod linalg;
pub mod rng;
pub mod simgen;
#[cfg(test)]
pub(crate) mod testutil;
pub mod weighting;

pub use compdata::{clr_shifted, geometric_mean, phi, psi, Composition};
pub use datio::{load_counts_csv, Dataset, Task};
pub use embed::{kernel_medoid, kpca_fit, summary_stat, KpcaModel, SummaryStat};
pub use error::{Error, Result};
pub use interpret::{cfi, cpd, CfiVector, CpdCurve, LogContrast, Predictor};
pub use kernels::{
    cross_gram, gram, kernel_distance, kernel_eval, GramMatrix, KernelFamily, KernelRecord,
    KernelSpec,
};
pub use learn::{
    default_grid, default_lambda_grid, fit_krr, median_heuristic, select_model, FittedModel,
    MedianSpace, ParamGrid, SelectionReport,
};
pub use weighting::{
    parse_newick, partition_weights, unifrac_distance, unifrac_weights, Partition, PhyloTree,
    UnifracVariant, WeightMatrix,
};
