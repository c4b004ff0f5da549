//! Linear-kernel HSIC and CKA.

use crate::error::{Error, Result};
use crate::numeric::{apply_centering, gram_linear, Matrix};
use crate::scalar::Real;

fn check_rows<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::shape(format!(
            "representations have {} and {} samples",
            a.rows(),
            b.rows()
        )));
    }
    if a.rows() < 2 {
        return Err(Error::degenerate("HSIC needs at least 2 samples"));
    }
    Ok(())
}

/// Centered linear Gram matrix `H A Aᵀ H`.
pub fn centered_gram<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    apply_centering(&gram_linear(a))
}

/// `tr(K H L H) / (m-1)²` given both centered Gram matrices.
pub(crate) fn hsic_from_centered<T: Real>(kc: &Matrix<T>, lc: &Matrix<T>) -> Result<T> {
    let m1 = T::from_count(kc.rows() - 1);
    Ok(kc.frobenius_dot(lc)? / (m1 * m1))
}

/// Whether a centered Gram matrix is numerically zero relative to its source.
pub(crate) fn centered_vanishes<T: Real>(k: &Matrix<T>, kc: &Matrix<T>) -> bool {
    let tol = T::lit(64.0) * T::from_count(k.rows()) * T::epsilon() * k.frobenius_norm();
    kc.frobenius_norm() <= tol
}

/// Hilbert-Schmidt independence criterion with linear kernels.
pub fn hsic<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
    check_rows(a, b)?;
    hsic_from_centered(&centered_gram(a)?, &centered_gram(b)?)
}

/// Linear centered kernel alignment in `[0, 1]`.
pub fn cka<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
    check_rows(a, b)?;
    let (ka, kb) = (gram_linear(a), gram_linear(b));
    let (kac, kbc) = (apply_centering(&ka)?, apply_centering(&kb)?);
    if centered_vanishes(&ka, &kac) {
        return Err(Error::degenerate("first representation is constant across samples"));
    }
    if centered_vanishes(&kb, &kbc) {
        return Err(Error::degenerate("second representation is constant across samples"));
    }
    let ab = hsic_from_centered(&kac, &kbc)?;
    let aa = hsic_from_centered(&kac, &kac)?;
    let bb = hsic_from_centered(&kbc, &kbc)?;
    let raw = ab / (aa.sqrt() * bb.sqrt());
    if !raw.is_finite() {
        return Err(Error::numerical("CKA ratio is not finite"));
    }
    if raw < T::zero() || raw > T::one() {
        log::debug!("cka clamped from raw value {raw}");
    }
    Ok(raw.max(T::zero()).min(T::one()))
}
