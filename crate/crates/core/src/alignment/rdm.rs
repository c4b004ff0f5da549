use crate::error::{Error, Result};
use crate::numeric::stats::is_constant;
use crate::numeric::{pearson, spearman, Matrix};
use crate::scalar::Real;

/// Representational dissimilarity matrix with `1 - pearson` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Rdm<T> {
    values: Matrix<T>,
}

impl<T: Real> Rdm<T> {
    /// Wraps a precomputed matrix after checking the RDM invariants.
    pub fn from_matrix(values: Matrix<T>) -> Result<Self> {
        let n = values.rows();
        if values.cols() != n {
            return Err(Error::shape(format!("RDM must be square, got {n}x{}", values.cols())));
        }
        let two = T::lit(2.0);
        for i in 0..n {
            if values[(i, i)] != T::zero() {
                return Err(Error::degenerate(format!("RDM diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if !(v >= T::zero() && v <= two) {
                    return Err(Error::RangeError(format!("RDM entry ({i},{j}) = {v} outside [0, 2]")));
                }
                if (v - values[(j, i)]).abs() > T::lit(1e-12) {
                    return Err(Error::degenerate(format!("RDM not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Rdm { values })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    /// Entries strictly above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<T> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.values.row(i)[i + 1..]);
        }
        out
    }
}

/// RDM over the rows (stimuli) of a feature matrix.
pub fn rdm_from_features<T: Real>(features: &Matrix<T>) -> Result<Rdm<T>> {
    let n = features.rows();
    if n < 2 {
        return Err(Error::degenerate("RDM needs at least 2 stimuli"));
    }
    if let Some(i) = (0..n).find(|&i| is_constant(features.row(i))) {
        return Err(Error::degenerate(format!("stimulus {i} has a constant feature pattern")));
    }
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = T::one() - pearson(features.row(i), features.row(j))?;
            values[(i, j)] = d;
            values[(j, i)] = d;
        }
    }
    Ok(Rdm { values })
}

/// Spearman correlation between the upper triangles of two RDMs.
pub fn rsa<T: Real>(r1: &Rdm<T>, r2: &Rdm<T>) -> Result<T> {
    if r1.n() != r2.n() {
        return Err(Error::shape(format!("RDMs over {} and {} stimuli", r1.n(), r2.n())));
    }
    if r1.n() < 3 {
        return Err(Error::degenerate("RSA needs at least 3 stimuli"));
    }
    spearman(&r1.upper_triangle(), &r2.upper_triangle())
}
