//! Dense matrices, statistics, linear solvers and seeded randomness.

pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod stats;

pub use linalg::{cholesky, cholesky_solve, ridge_solve};
pub use matrix::{dot, norm, Matrix};
pub use rng::Rng;
pub use stats::{apply_centering, cosine, fractional_ranks, gram_linear, pearson, spearman};
