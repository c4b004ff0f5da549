//! Training objectives with analytic gradients.
//!
//! Every loss returns its value together with the gradient with respect to
//! the predicted argument(s); targets are treated as constants.

pub mod cka;
pub mod composite;
pub mod gradcheck;
pub mod mse;
pub mod sims;

pub use self::cka::cka_loss;
pub use composite::{
    crec_loss, image_total_loss, mg_loss, mg_loss_batch, mg_loss_weighted, text_total_loss, CrecLoss,
    CrecRecons, CREC_TERM_NAMES,
    ImageLoss, ImagePreds, ImageTargets, LossWeights, MgLoss, TextLoss,
};
pub use gradcheck::grad_check;
pub use mse::mse_loss;
pub use sims::{sims_loss, sims_vector, AnchorMode, SimsVector};

use crate::numeric::Matrix;

/// A loss value and its gradient with respect to the predicted argument.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValueGrad<T> {
    pub value: T,
    pub grad: Matrix<T>,
}
