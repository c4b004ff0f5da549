//! Dual-branch decoding of voxel responses into token-embedding targets.
//!
//! The numeric, alignment, loss and metric code is generic over [`Real`]
//! (`f32`/`f64`); the model, training loop and file formats run in `f64`.

pub mod alignment;
pub mod data;
pub mod error;
pub mod eval;
pub mod losses;
pub mod model;
pub mod numeric;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use numeric::{Matrix, Rng};
pub use scalar::Real;

/// Double-precision matrix, the working type of the model and file formats.
pub type Mat = Matrix<f64>;
/// Single-precision matrix.
pub type Mat32 = Matrix<f32>;
