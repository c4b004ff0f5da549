use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;
use crate::scalar::Real;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let (n, c) = a.shape();
    if n != c {
        return Err(Error::shape(format!("cholesky needs a square matrix, got {n}x{c}")));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::numerical(format!(
                "cholesky: matrix not positive definite at pivot {j}"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ X = B` in place given the Cholesky factor.
pub fn cholesky_solve<T: Real>(l: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = l.rows();
    if b.rows() != n {
        return Err(Error::shape(format!("cholesky_solve: factor {n}x{n}, rhs {} rows", b.rows())));
    }
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Ridge regression `argmin_W ||XW - Y||² + λ||W||²` via Cholesky of `XᵀX + λI`.
pub fn ridge_solve<T: Real>(x: &Matrix<T>, y: &Matrix<T>, lambda: T) -> Result<Matrix<T>> {
    if x.rows() != y.rows() {
        return Err(Error::shape(format!(
            "ridge_solve: X has {} rows, Y has {}",
            x.rows(),
            y.rows()
        )));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::RangeError("ridge lambda must be >= 0".into()));
    }
    let mut gram = x.t_matmul(x)?;
    for i in 0..gram.rows() {
        gram[(i, i)] += lambda;
    }
    let l = cholesky(&gram)?;
    let rhs = x.t_matmul(y)?;
    let w = cholesky_solve(&l, &rhs)?;
    if !w.is_finite() {
        return Err(Error::numerical("ridge_solve produced non-finite weights"));
    }
    Ok(w)
}
