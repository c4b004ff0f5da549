use crate::alignment::kernel::centered_vanishes;
use crate::error::{Error, Result};
use crate::losses::LossValueGrad;
use crate::numeric::{apply_centering, gram_linear, Matrix};
use crate::scalar::Real;

/// `1 - CKA(target, pred)` with the gradient with respect to `pred`.
///
/// With `K_c`, `L_c` the centered Gram matrices of target and prediction,
/// `x = <K_c, L_c>`, `y = <L_c, L_c>`, `z = <K_c, K_c>`, the alignment is
/// `x / sqrt(y z)` and its derivative with respect to `L = B Bᵀ` is
/// `G = (K_c - (x / y) L_c) / sqrt(y z)`, so `∂CKA/∂B = 2 G B`.
pub fn cka_loss<T: Real>(target: &Matrix<T>, pred: &Matrix<T>) -> Result<LossValueGrad<T>> {
    if target.rows() != pred.rows() {
        return Err(Error::shape(format!(
            "cka loss: target has {} rows, prediction {}",
            target.rows(),
            pred.rows()
        )));
    }
    if target.rows() < 2 {
        return Err(Error::degenerate("cka loss needs at least 2 rows"));
    }
    let (k, l) = (gram_linear(target), gram_linear(pred));
    let (kc, lc) = (apply_centering(&k)?, apply_centering(&l)?);
    if centered_vanishes(&k, &kc) {
        return Err(Error::degenerate("target representation is constant"));
    }
    if centered_vanishes(&l, &lc) {
        return Err(Error::degenerate("predicted representation is constant"));
    }
    let x = kc.frobenius_dot(&lc)?;
    let y = lc.frobenius_dot(&lc)?;
    let z = kc.frobenius_dot(&kc)?;
    let root = (y * z).sqrt();
    let raw = x / root;
    if !raw.is_finite() {
        return Err(Error::numerical("cka loss ratio is not finite"));
    }
    let ratio = x / y;
    let g = Matrix::from_fn(kc.rows(), kc.cols(), |i, j| {
        (kc[(i, j)] - ratio * lc[(i, j)]) / root
    });
    let grad = g.matmul(pred)?.scale(T::lit(-2.0));
    let cka = raw.max(T::zero()).min(T::one());
    Ok(LossValueGrad {
        value: T::one() - cka,
        grad,
    })
}
