//! Reconstruction metrics, identification, and Lasso back-projection.

mod backproject;
mod lasso;
mod metrics;
mod report;

pub use backproject::{backproject, Backprojection, BACKPROJECT_LAMBDA};
pub use lasso::{lasso_fit, soft_threshold, ConvergenceWarning, LassoDesign, LassoFit, LASSO_MAX_SWEEPS, LASSO_TOL};
pub use metrics::{gaussian_taps, pixcorr, ssim, two_way_identification, Similarity, SSIM_SIGMA, SSIM_WINDOW};
pub use report::{evaluate, image_codes, image_similarity, predict, Metrics};
