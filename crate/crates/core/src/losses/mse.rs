use crate::error::{Error, Result};
use crate::losses::LossValueGrad;
use crate::numeric::Matrix;
use crate::scalar::Real;

/// Mean squared error over all entries; gradient with respect to `pred`.
pub fn mse_loss<T: Real>(target: &Matrix<T>, pred: &Matrix<T>) -> Result<LossValueGrad<T>> {
    if target.shape() != pred.shape() {
        return Err(Error::shape(format!(
            "mse: target {:?} vs prediction {:?}",
            target.shape(),
            pred.shape()
        )));
    }
    let n = T::from_count(target.len());
    let diff = pred.sub(target)?;
    let value = diff.as_slice().iter().map(|&d| d * d).sum::<T>() / n;
    let two_over_n = T::lit(2.0) / n;
    Ok(LossValueGrad {
        value,
        grad: diff.scale(two_over_n),
    })
}
