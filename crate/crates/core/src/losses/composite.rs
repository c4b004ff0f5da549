//! Multi-granularity, cross-reconstruction and per-branch total losses.

use crate::error::{Error, Result};
use crate::losses::{cka_loss, mse_loss, sims_loss, AnchorMode, LossValueGrad};
use crate::numeric::Matrix;
use crate::scalar::Real;

/// Scalars applied to the loss components; all default to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights<T> {
    pub cka: T,
    pub sims: T,
    pub crec: T,
}

impl<T: Real> Default for LossWeights<T> {
    fn default() -> Self {
        LossWeights {
            cka: T::one(),
            sims: T::one(),
            crec: T::one(),
        }
    }
}

/// Multi-granularity loss; `cka` and `sims` are the unweighted components.
#[derive(Clone, Debug, PartialEq)]
pub struct MgLoss<T> {
    pub value: T,
    pub cka: T,
    pub sims: T,
    pub grad: Matrix<T>,
}

/// `w_cka · (1 - CKA) + w_sims · Sims` for one token sequence.
pub fn mg_loss_weighted<T: Real>(
    target: &Matrix<T>,
    pred: &Matrix<T>,
    anchor: AnchorMode,
    weights: &LossWeights<T>,
) -> Result<MgLoss<T>> {
    let c = cka_loss(target, pred)?;
    let s = sims_loss(target, pred, anchor)?;
    let mut grad = c.grad.scale(weights.cka);
    grad.axpy(weights.sims, &s.grad)?;
    Ok(MgLoss {
        value: weights.cka * c.value + weights.sims * s.value,
        cka: c.value,
        sims: s.value,
        grad,
    })
}

/// Unit-weight multi-granularity loss, `L_CKA + L_Sims`.
pub fn mg_loss<T: Real>(target: &Matrix<T>, pred: &Matrix<T>, anchor: AnchorMode) -> Result<MgLoss<T>> {
    mg_loss_weighted(target, pred, anchor, &LossWeights::default())
}

/// Mean per-sample multi-granularity loss over a batch.
///
/// Each row holds one sample's `tokens × dims` sequence flattened row-major.
pub fn mg_loss_batch<T: Real>(
    targets: &Matrix<T>,
    preds: &Matrix<T>,
    tokens: usize,
    anchor: AnchorMode,
    weights: &LossWeights<T>,
) -> Result<MgLoss<T>> {
    if targets.shape() != preds.shape() {
        return Err(Error::shape(format!(
            "mg batch: targets {:?} vs predictions {:?}",
            targets.shape(),
            preds.shape()
        )));
    }
    if tokens == 0 || targets.cols() % tokens != 0 {
        return Err(Error::shape(format!(
            "row width {} is not a multiple of {tokens} tokens",
            targets.cols()
        )));
    }
    let dims = targets.cols() / tokens;
    let n = T::from_count(targets.rows());
    let mut grad = Matrix::zeros(preds.rows(), preds.cols());
    let (mut value, mut cka, mut sims) = (T::zero(), T::zero(), T::zero());
    for i in 0..targets.rows() {
        let t = Matrix::new(tokens, dims, targets.row(i).to_vec())?;
        let p = Matrix::new(tokens, dims, preds.row(i).to_vec())?;
        let l = mg_loss_weighted(&t, &p, anchor, weights).map_err(|e| e.context(format!("sample {i}")))?;
        value += l.value;
        cka += l.cka;
        sims += l.sims;
        for (g, &x) in grad.row_mut(i).iter_mut().zip(l.grad.as_slice()) {
            *g = x / n;
        }
    }
    Ok(MgLoss {
        value: value / n,
        cka: cka / n,
        sims: sims / n,
        grad,
    })
}

/// The four voxel-space reconstructions of the image branch.
#[derive(Clone, Debug, PartialEq)]
pub struct CrecRecons<T> {
    /// Semantic decoder applied to the semantic code.
    pub s_from_s: Matrix<T>,
    /// Detail decoder applied to the semantic code (cross path).
    pub d_from_s: Matrix<T>,
    /// Detail decoder applied to the detail code.
    pub d_from_d: Matrix<T>,
    /// Semantic decoder applied to the detail code (cross path).
    pub s_from_d: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrecLoss<T> {
    pub value: T,
    /// Terms in summation order: s_from_s, d_from_s, d_from_d, s_from_d.
    pub terms: [T; 4],
    pub grads: CrecRecons<T>,
}

pub const CREC_TERM_NAMES: [&str; 4] = ["s_from_s", "d_from_s", "d_from_d", "s_from_d"];

/// Cross-reconstruction loss; each term's target is the signal living in the
/// output space of the decoder that produced it.
pub fn crec_loss<T: Real>(f_s: &Matrix<T>, f_d: &Matrix<T>, r: &CrecRecons<T>) -> Result<CrecLoss<T>> {
    let term = |name: &str, target: &Matrix<T>, pred: &Matrix<T>| {
        mse_loss(target, pred).map_err(|e| e.context(format!("crec term {name}")))
    };
    let a = term(CREC_TERM_NAMES[0], f_s, &r.s_from_s)?;
    let b = term(CREC_TERM_NAMES[1], f_d, &r.d_from_s)?;
    let c = term(CREC_TERM_NAMES[2], f_d, &r.d_from_d)?;
    let d = term(CREC_TERM_NAMES[3], f_s, &r.s_from_d)?;
    Ok(CrecLoss {
        value: a.value + b.value + c.value + d.value,
        terms: [a.value, b.value, c.value, d.value],
        grads: CrecRecons {
            s_from_s: a.grad,
            d_from_s: b.grad,
            d_from_d: c.grad,
            s_from_d: d.grad,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextLoss<T> {
    pub value: T,
    pub mg: T,
    pub cka: T,
    pub sims: T,
    pub mse_recon: T,
    pub grad_embedding: Matrix<T>,
    pub grad_recon: Matrix<T>,
}

/// Text-branch objective: multi-granularity alignment plus voxel reconstruction MSE.
pub fn text_total_loss<T: Real>(
    e_t: &Matrix<T>,
    e_t_hat: &Matrix<T>,
    f_s: &Matrix<T>,
    f_s_hat: &Matrix<T>,
    tokens: usize,
    anchor: AnchorMode,
    weights: &LossWeights<T>,
) -> Result<TextLoss<T>> {
    let mg = mg_loss_batch(e_t, e_t_hat, tokens, anchor, weights).map_err(|e| e.context("text mg"))?;
    let rec = mse_loss(f_s, f_s_hat).map_err(|e| e.context("text reconstruction"))?;
    Ok(TextLoss {
        value: mg.value + rec.value,
        mg: mg.value,
        cka: mg.cka,
        sims: mg.sims,
        mse_recon: rec.value,
        grad_embedding: mg.grad,
        grad_recon: rec.grad,
    })
}

/// Ground truth for the image branch.
#[derive(Clone, Copy, Debug)]
pub struct ImageTargets<'a, T> {
    /// Fused target, the mean of the semantic and detail targets.
    pub fused: &'a Matrix<T>,
    pub semantic: &'a Matrix<T>,
    pub detail: &'a Matrix<T>,
    pub f_s: &'a Matrix<T>,
    pub f_d: &'a Matrix<T>,
}

/// Image-branch predictions; absent paths contribute neither loss nor output.
#[derive(Clone, Copy, Debug)]
pub struct ImagePreds<'a, T> {
    pub semantic: Option<&'a Matrix<T>>,
    pub detail: Option<&'a Matrix<T>>,
    pub recons: Option<&'a CrecRecons<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageLoss<T> {
    pub value: T,
    pub mg: T,
    pub cka: T,
    pub sims: T,
    /// Weighted cross-reconstruction contribution.
    pub crec: T,
    pub mse_semantic: T,
    pub mse_detail: T,
    /// Mean of the present path predictions.
    pub fused: Matrix<T>,
    pub grad_semantic: Option<Matrix<T>>,
    pub grad_detail: Option<Matrix<T>>,
    pub grad_recons: Option<CrecRecons<T>>,
}

/// Image-branch objective: multi-granularity loss on the fused prediction,
/// cross-reconstruction, and direct MSE on each path's prediction.
///
/// The fused gradient is split evenly across the present paths.
pub fn image_total_loss<T: Real>(
    targets: ImageTargets<'_, T>,
    preds: ImagePreds<'_, T>,
    tokens: usize,
    anchor: AnchorMode,
    weights: &LossWeights<T>,
) -> Result<ImageLoss<T>> {
    let paths: Vec<&Matrix<T>> = [preds.semantic, preds.detail].into_iter().flatten().collect();
    if paths.is_empty() {
        return Err(Error::InvalidState("image loss needs at least one path".into()));
    }
    let fused = if paths.len() == 2 {
        paths[0].zip_map(paths[1], |a, b| (a + b) / T::lit(2.0))?
    } else {
        paths[0].clone()
    };
    let share = T::one() / T::from_count(paths.len());
    let mg = mg_loss_batch(targets.fused, &fused, tokens, anchor, weights)
        .map_err(|e| e.context("image mg"))?;

    let path_grad = |target: &Matrix<T>, pred: &Matrix<T>, name: &str| -> Result<(T, Matrix<T>)> {
        let LossValueGrad { value, mut grad } =
            mse_loss(target, pred).map_err(|e| e.context(format!("{name} embedding mse")))?;
        grad.axpy(share, &mg.grad)?;
        Ok((value, grad))
    };
    let (mse_semantic, grad_semantic) = match preds.semantic {
        Some(p) => {
            let (v, g) = path_grad(targets.semantic, p, "semantic")?;
            (v, Some(g))
        }
        None => (T::zero(), None),
    };
    let (mse_detail, grad_detail) = match preds.detail {
        Some(p) => {
            let (v, g) = path_grad(targets.detail, p, "detail")?;
            (v, Some(g))
        }
        None => (T::zero(), None),
    };
    let (crec, grad_recons) = match preds.recons {
        Some(r) => {
            let l = crec_loss(targets.f_s, targets.f_d, r)?;
            let w = weights.crec;
            let g = CrecRecons {
                s_from_s: l.grads.s_from_s.scale(w),
                d_from_s: l.grads.d_from_s.scale(w),
                d_from_d: l.grads.d_from_d.scale(w),
                s_from_d: l.grads.s_from_d.scale(w),
            };
            (w * l.value, Some(g))
        }
        None => (T::zero(), None),
    };
    Ok(ImageLoss {
        value: mg.value + crec + mse_semantic + mse_detail,
        mg: mg.value,
        cka: mg.cka,
        sims: mg.sims,
        crec,
        mse_semantic,
        mse_detail,
        fused,
        grad_semantic,
        grad_detail,
        grad_recons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;

    #[test]
    fn crec_zero_cases() {
        let mut rng = Rng::new(5);
        let f_s: Matrix<f64> = rng.normal_matrix(1, 3, 1.0);
        let f_d: Matrix<f64> = rng.normal_matrix(1, 5, 1.0);
        let perfect = CrecRecons {
            s_from_s: f_s.clone(),
            d_from_s: f_d.clone(),
            d_from_d: f_d.clone(),
            s_from_d: f_s.clone(),
        };
        assert_eq!(crec_loss(&f_s, &f_d, &perfect).unwrap().value, 0.0);
        let (zs, zd) = (Matrix::<f64>::zeros(1, 3), Matrix::<f64>::zeros(1, 5));
        let zero = CrecRecons {
            s_from_s: zs.clone(),
            d_from_s: zd.clone(),
            d_from_d: zd.clone(),
            s_from_d: zs.clone(),
        };
        assert_eq!(crec_loss(&zs, &zd, &zero).unwrap().value, 0.0);
    }

    #[test]
    fn crec_shape_error_names_term() {
        let f_s = Matrix::<f64>::zeros(1, 3);
        let f_d = Matrix::<f64>::zeros(1, 5);
        let bad = CrecRecons {
            s_from_s: f_s.clone(),
            d_from_s: f_s.clone(),
            d_from_d: f_d.clone(),
            s_from_d: f_s.clone(),
        };
        match crec_loss(&f_s, &f_d, &bad) {
            Err(Error::ShapeMismatch(msg)) => assert!(msg.contains("d_from_s"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_path_fusion_is_identity() {
        let mut rng = Rng::new(9);
        let t: Matrix<f64> = rng.normal_matrix(2, 12, 1.0);
        let p: Matrix<f64> = rng.normal_matrix(2, 12, 1.0);
        let f = Matrix::<f64>::zeros(2, 3);
        let targets = ImageTargets { fused: &t, semantic: &t, detail: &t, f_s: &f, f_d: &f };
        let preds = ImagePreds { semantic: Some(&p), detail: None, recons: None };
        let l = image_total_loss(targets, preds, 3, AnchorMode::default(), &LossWeights::default()).unwrap();
        assert_eq!(l.fused, p);
        assert!(l.grad_detail.is_none());
        assert_eq!(l.mse_detail, 0.0);
        let none = ImagePreds { semantic: None, detail: None, recons: None };
        assert!(image_total_loss(targets, none, 3, AnchorMode::default(), &LossWeights::default()).is_err());
    }

    #[test]
    fn batch_rejects_bad_token_split() {
        let t = Matrix::<f64>::zeros(2, 10);
        assert!(mg_loss_batch(&t, &t, 3, AnchorMode::default(), &LossWeights::default()).is_err());
    }
}
