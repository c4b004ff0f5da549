use crate::error::{Error, Result};
use crate::losses::LossValueGrad;
use crate::numeric::Matrix;
use crate::scalar::Real;

/// Floor for the relative-error denominator.
pub const REL_ERR_FLOOR: f64 = 1e-8;

/// Relative error with denominator `max(|a|, |b|, 1e-8)`.
pub fn relative_error<T: Real>(analytic: T, numeric: T) -> T {
    let denom = analytic.abs().max(numeric.abs()).max(T::lit(REL_ERR_FLOOR));
    (analytic - numeric).abs() / denom
}

/// Largest relative error between `analytic` and central differences of
/// `value` around `point`, one coordinate at a time.
pub fn max_relative_error<T: Real>(
    mut value: impl FnMut(&Matrix<T>) -> Result<T>,
    point: &Matrix<T>,
    analytic: &Matrix<T>,
    h: T,
) -> Result<T> {
    if analytic.shape() != point.shape() {
        return Err(Error::shape(format!(
            "gradient {:?} vs point {:?}",
            analytic.shape(),
            point.shape()
        )));
    }
    let mut x = point.clone();
    let mut worst = T::zero();
    for k in 0..point.len() {
        let orig = x.as_slice()[k];
        x.as_mut_slice()[k] = orig + h;
        let up = value(&x)?;
        x.as_mut_slice()[k] = orig - h;
        let down = value(&x)?;
        x.as_mut_slice()[k] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::numerical(format!("non-finite loss at coordinate {k}")));
        }
        let numeric = (up - down) / (T::lit(2.0) * h);
        worst = worst.max(relative_error(analytic.as_slice()[k], numeric));
    }
    Ok(worst)
}

/// Checks a loss's analytic gradient against central finite differences.
pub fn grad_check<T: Real>(
    f: impl Fn(&Matrix<T>) -> Result<LossValueGrad<T>>,
    point: &Matrix<T>,
    h: T,
) -> Result<T> {
    let at = f(point)?;
    if !at.value.is_finite() || !at.grad.is_finite() {
        return Err(Error::numerical("non-finite loss or gradient at the check point"));
    }
    max_relative_error(|x| f(x).map(|l| l.value), point, &at.grad, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::mse_loss;

    #[test]
    fn mse_passes_tightly() {
        let target = Matrix::<f64>::from_fn(3, 2, |i, j| i as f64 - j as f64 * 0.5);
        let point = Matrix::<f64>::from_fn(3, 2, |i, j| (i * j) as f64 * 0.3 + 0.7);
        let err = grad_check(|p| mse_loss(&target, p), &point, 1e-5).unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let point = Matrix::<f64>::filled(1, 2, 1.0);
        let err = grad_check(
            |p| {
                Ok(LossValueGrad {
                    value: p.as_slice().iter().map(|x| x * x).sum(),
                    grad: p.scale(3.0),
                })
            },
            &point,
            1e-5,
        )
        .unwrap();
        assert!(err > 0.3);
    }

    #[test]
    fn non_finite_is_a_numerical_failure() {
        let point = Matrix::<f64>::filled(1, 1, 0.0);
        let r = grad_check(
            |p| Ok(LossValueGrad { value: 1.0 / p[(0, 0)], grad: p.clone() }),
            &point,
            1e-5,
        );
        assert!(matches!(r, Err(Error::NumericalFailure(_))));
    }
}
