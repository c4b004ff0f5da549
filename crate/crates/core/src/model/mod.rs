//! Dual-branch network: text branch `F_S → Ê_T` and image branch
//! `(F_S, F_D) → Ê_I`, with explicit forward and reverse passes.

mod backward;
mod checkpoint;
mod config;
mod forward;
mod layers;
mod params;

pub use backward::{
    image_backward, model_backward, text_backward, ImageUpstream, ModelUpstream, ParamGrads, TextUpstream,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, MANIFEST};
pub use config::{
    ModelConfig, FULL_SCALE_BATCH_IMAGE, FULL_SCALE_BATCH_TEXT, FULL_SCALE_IMAGE_TOKENS, FULL_SCALE_TEXT_TOKENS,
};
pub use forward::{
    image_branch_forward, model_forward, text_branch_forward, unflatten_row, ImageOutputs, ImagePaths, ModelOutputs,
    PathOutputs, ReconOutputs, TextCaches, TextOutputs,
};
pub use layers::{block_backward, block_forward, dropout_mask, mlp_block_forward, BlockCache, BlockGrad, BlockKind, Mode};
pub use params::{init_params, param_count, Affine, Backbone, ImageBranch, ModelParams, TextBranch};
