//! Adam training of the dual-branch model, ablations and layer scans.

mod ablation;
mod adam;
mod gradsuite;
mod objective;
mod trainer;

pub use ablation::{layer_scan, layer_scan_csv, run_ablation, scan_targets, AblationRun, LayerScanRow, Variant};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradsuite::{
    gradient_suite, param_rel_error, GradCheckRow, GRADCHECK_STEP, GRADCHECK_TOL, GRADCHECK_TOL_MSE,
};
pub use objective::{loss_and_grads, Batch, Components, Objective, StepResult};
pub use trainer::{evaluate_losses, train, BranchSet, EpochLosses, TrainConfig, TrainData, TrainReport};
