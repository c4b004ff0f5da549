//! Synthetic data with a planted region/layer hierarchy, target averaging,
//! and the MAT1 file format.

pub mod mat1;
mod regions;
mod store;
mod synth;
mod targets;

pub use mat1::{load_matrix, save_matrix};
pub use regions::{split_region_rows, split_regions, Region, RegionMask};
pub use store::{load_dataset, save_dataset, ImageTargetSet, PROJECTION_FILE};
pub use synth::{linear_alphas, synth_generate, Dataset, SynthConfig};
pub use targets::{average_captions, average_layers, fuse_targets, project_tokens};
