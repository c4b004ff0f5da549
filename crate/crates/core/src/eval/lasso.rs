use crate::error::{Error, Result};
use crate::Mat;

pub const LASSO_TOL: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

/// Raised, not thrown, when coordinate descent hits the sweep limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceWarning {
    pub sweeps: usize,
    pub max_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoFit {
    /// Coefficients on the original column scale.
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub sweeps: usize,
    pub warning: Option<ConvergenceWarning>,
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// A design matrix prepared for repeated fits: column means, standard
/// deviations and the Gram matrix of the standardised columns.
#[derive(Clone, Debug)]
pub struct LassoDesign {
    n: usize,
    means: Vec<f64>,
    /// Population standard deviations; zero marks a constant column.
    sds: Vec<f64>,
    /// Standardised columns, one row per column.
    cols: Mat,
    /// `n⁻¹ X̃ᵀX̃`.
    gram: Mat,
}

impl LassoDesign {
    pub fn new(x: &Mat) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 {
            return Err(Error::degenerate("lasso needs at least two samples"));
        }
        if !x.is_finite() {
            return Err(Error::numerical("lasso design has non-finite entries"));
        }
        let means = x.col_means();
        let mut sds = vec![0.0; p];
        let mut cols = x.transpose();
        for j in 0..p {
            let c = cols.row_mut(j);
            for v in c.iter_mut() {
                *v -= means[j];
            }
            let sd = (c.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            if sd > 1e-12 * (1.0 + means[j].abs()) {
                sds[j] = sd;
                for v in c.iter_mut() {
                    *v /= sd;
                }
            } else {
                c.fill(0.0);
            }
        }
        let gram = cols.matmul_t(&cols)?.scale(1.0 / n as f64);
        Ok(LassoDesign { n, means, sds, cols, gram })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.means.len()
    }

    /// Standardised design, `n × p`.
    pub fn standardized(&self) -> Mat {
        self.cols.transpose()
    }

    /// Cyclic coordinate descent on `½n⁻¹‖ỹ − X̃β̃‖² + λ‖β̃‖₁`.
    pub fn fit(&self, y: &[f64], lambda: f64) -> Result<LassoFit> {
        if y.len() != self.n {
            return Err(Error::shape(format!("lasso: {} responses for {} rows", y.len(), self.n)));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::RangeError(format!("lasso lambda must be > 0, got {lambda}")));
        }
        let p = self.p();
        let y_mean = y.iter().sum::<f64>() / self.n as f64;
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        let c: Vec<f64> = (0..p)
            .map(|j| self.cols.row(j).iter().zip(&yc).map(|(a, b)| a * b).sum::<f64>() / self.n as f64)
            .collect();
        let mut b = vec![0.0; p];
        // g = Gβ
        let mut g = vec![0.0; p];
        let mut sweeps = 0;
        let mut max_change = f64::INFINITY;
        while sweeps < LASSO_MAX_SWEEPS && max_change >= LASSO_TOL {
            sweeps += 1;
            max_change = 0.0;
            for j in 0..p {
                if self.sds[j] == 0.0 {
                    continue;
                }
                let gjj = self.gram[(j, j)];
                let z = c[j] - (g[j] - gjj * b[j]);
                let new = soft_threshold(z, lambda) / gjj;
                let delta = new - b[j];
                if delta != 0.0 {
                    for (gk, &gjk) in g.iter_mut().zip(self.gram.row(j)) {
                        *gk += gjk * delta;
                    }
                    b[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
        }
        let warning = (max_change >= LASSO_TOL).then_some(ConvergenceWarning { sweeps, max_change });
        if let Some(w) = &warning {
            log::warn!("lasso stopped after {} sweeps, max change {:e}", w.sweeps, w.max_change);
        }
        let beta: Vec<f64> = (0..p)
            .map(|j| if self.sds[j] == 0.0 { 0.0 } else { b[j] / self.sds[j] })
            .collect();
        let intercept = y_mean - beta.iter().zip(&self.means).map(|(b, m)| b * m).sum::<f64>();
        Ok(LassoFit { beta, intercept, sweeps, warning })
    }
}

/// Lasso with internally standardised columns; `beta` is on the original scale.
pub fn lasso_fit(x: &Mat, y: &[f64], lambda: f64) -> Result<LassoFit> {
    LassoDesign::new(x)?.fit(y, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn constant_response_gives_zero() {
        let x = Mat::from_rows(&[[1.0, 2.0], [3.0, 1.0], [0.0, 5.0]]).unwrap();
        let f = lasso_fit(&x, &[2.0, 2.0, 2.0], 0.1).unwrap();
        assert_eq!(f.beta, vec![0.0, 0.0]);
        assert_eq!(f.intercept, 2.0);
        assert!(f.warning.is_none());
    }

    #[test]
    fn bad_inputs() {
        let x = Mat::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(lasso_fit(&x, &[1.0], 0.1).is_err());
        assert!(lasso_fit(&x, &[1.0, 2.0], 0.0).is_err());
        assert!(lasso_fit(&Mat::from_rows(&[[1.0]]).unwrap(), &[1.0], 0.1).is_err());
    }
}
