//! Token-level similarity-pattern loss.
//!
//! Each sequence is summarised by the cosine similarity between its first
//! token and every later token; the loss is the MSE between the two patterns.

use crate::error::{Error, Result};
use crate::losses::LossValueGrad;
use crate::numeric::{dot, norm, Matrix};
use crate::scalar::Real;

/// Which first token the prediction's similarity pattern is anchored on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorMode {
    /// Prediction tokens are compared with the prediction's own first token.
    #[default]
    OwnFirstToken,
    /// Prediction tokens are compared with the target's first token.
    TargetFirstToken,
}

impl AnchorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AnchorMode::OwnFirstToken => "own_first_token",
            AnchorMode::TargetFirstToken => "target_first_token",
        }
    }
}

impl std::str::FromStr for AnchorMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "own_first_token" => Ok(AnchorMode::OwnFirstToken),
            "target_first_token" => Ok(AnchorMode::TargetFirstToken),
            other => Err(format!(
                "unknown anchor mode {other:?} (expected own_first_token or target_first_token)"
            )),
        }
    }
}

/// Cosine similarities between the first token and each later token.
#[derive(Clone, Debug, PartialEq)]
pub struct SimsVector<T>(pub Vec<T>);

fn token_norms<T: Real>(a: &Matrix<T>, what: &str) -> Result<Vec<T>> {
    a.row_iter()
        .enumerate()
        .map(|(i, r)| {
            let n = norm(r);
            if n == T::zero() {
                Err(Error::degenerate(format!("{what} token {i} is a zero vector")))
            } else {
                Ok(n)
            }
        })
        .collect()
}

fn check_tokens<T: Real>(a: &Matrix<T>) -> Result<()> {
    if a.rows() < 2 {
        return Err(Error::degenerate("similarity pattern needs at least 2 tokens"));
    }
    Ok(())
}

fn cos_from<T: Real>(u: &[T], nu: T, v: &[T], nv: T) -> T {
    (dot(u, v) / (nu * nv)).max(-T::one()).min(T::one())
}

pub fn sims_vector<T: Real>(a: &Matrix<T>) -> Result<SimsVector<T>> {
    check_tokens(a)?;
    let norms = token_norms(a, "input")?;
    let first = a.row(0);
    Ok(SimsVector(
        (1..a.rows())
            .map(|k| cos_from(first, norms[0], a.row(k), norms[k]))
            .collect(),
    ))
}

/// Adds `scale · ∂cos(u, v)/∂v` into `out`.
fn add_dcos_dv<T: Real>(out: &mut [T], u: &[T], nu: T, v: &[T], nv: T, cos: T, scale: T) {
    let a = scale / (nu * nv);
    let b = scale * cos / (nv * nv);
    for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
        *o += a * ui - b * vi;
    }
}

/// `MSE(s_target, s_pred)` with the gradient with respect to every entry of `pred`.
pub fn sims_loss<T: Real>(
    target: &Matrix<T>,
    pred: &Matrix<T>,
    anchor: AnchorMode,
) -> Result<LossValueGrad<T>> {
    if target.shape() != pred.shape() {
        return Err(Error::shape(format!(
            "sims: target {:?} vs prediction {:?}",
            target.shape(),
            pred.shape()
        )));
    }
    let s_a = sims_vector(target)?.0;
    let pred_norms = token_norms(pred, "prediction")?;
    let (anchor_tok, anchor_norm) = match anchor {
        AnchorMode::OwnFirstToken => (pred.row(0), pred_norms[0]),
        AnchorMode::TargetFirstToken => (target.row(0), norm(target.row(0))),
    };
    let m1 = T::from_count(pred.rows() - 1);
    let mut value = T::zero();
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut anchor_grad = vec![T::zero(); pred.cols()];
    for k in 1..pred.rows() {
        let tok = pred.row(k);
        let c = cos_from(anchor_tok, anchor_norm, tok, pred_norms[k]);
        let diff = c - s_a[k - 1];
        value += diff * diff;
        let g = T::lit(2.0) * diff / m1;
        add_dcos_dv(grad.row_mut(k), anchor_tok, anchor_norm, tok, pred_norms[k], c, g);
        if anchor == AnchorMode::OwnFirstToken {
            add_dcos_dv(&mut anchor_grad, tok, pred_norms[k], anchor_tok, anchor_norm, c, g);
        }
    }
    if anchor == AnchorMode::OwnFirstToken {
        grad.row_mut(0).copy_from_slice(&anchor_grad);
    }
    Ok(LossValueGrad {
        value: value / m1,
        grad,
    })
}
