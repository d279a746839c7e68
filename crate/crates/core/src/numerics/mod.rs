//! Linear algebra and statistics kernel.
//!
//! Matrices are `nalgebra::DMatrix<f64>` with one observation per row.

mod ols;
mod pca;
mod reliability;
mod stats;

pub use ols::{ols_fit, RegressionModel};
pub use pca::{PcaBasis, LANCZOS_MIN_DIM};
pub use reliability::{
    odd_even_split, split_half_ceiling, RatingMatrix, ReliabilityEstimate, SplitHalf,
};
pub use stats::{mean, pearson, sample_sd, spearman_brown};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("invalid number of components k={k} for n={n} observations of dimension {d}")]
    InvalidK { k: usize, n: usize, d: usize },
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("normal equations are numerically singular (reciprocal condition {rcond:e})")]
    SingularSystem { rcond: f64 },
    #[error("constant input has undefined correlation")]
    ConstantInput,
    #[error("value {0} outside the domain of the Spearman-Brown correction")]
    Domain(f64),
    #[error("need at least 2 subjects, found {0}")]
    TooFewSubjects(usize),
    #[error("no resample produced a defined split-half correlation")]
    NoValidResample,
}
