use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::{cosine, pearson, Matrix};
use crate::scalar::Real;

/// Pearson correlation of the flattened values.
pub fn pixcorr<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::shape(format!("pixcorr needs equal lengths >= 2, got {} and {}", a.len(), b.len())));
    }
    pearson(a, b)
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

/// Normalised 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps<T: Real>() -> Vec<T> {
    let c = (SSIM_WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / s)).collect()
}

/// Valid-mode separable filtering with the Gaussian window.
fn filter<T: Real>(m: &Matrix<T>, taps: &[T]) -> Matrix<T> {
    let k = taps.len();
    let (h, w) = m.shape();
    let rows = Matrix::from_fn(h, w - k + 1, |i, j| (0..k).map(|t| taps[t] * m[(i, j + t)]).sum());
    Matrix::from_fn(h - k + 1, w - k + 1, |i, j| (0..k).map(|t| taps[t] * rows[(i + t, j)]).sum())
}

/// Mean local SSIM with an 11×11 Gaussian window (σ = 1.5) over every
/// valid window position, `C1 = (0.01 L)²`, `C2 = (0.03 L)²`.
pub fn ssim<T: Real>(a: &Matrix<T>, b: &Matrix<T>, range: T) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!("ssim: {:?} vs {:?}", a.shape(), b.shape())));
    }
    if a.rows() < SSIM_WINDOW || a.cols() < SSIM_WINDOW {
        return Err(Error::degenerate(format!(
            "ssim needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {:?}",
            a.shape()
        )));
    }
    if !(range > T::zero()) {
        return Err(Error::degenerate("ssim value range must be positive"));
    }
    let taps = gaussian_taps::<T>();
    let c1 = (T::lit(0.01) * range).powi(2);
    let c2 = (T::lit(0.03) * range).powi(2);
    let mu_a = filter(a, &taps);
    let mu_b = filter(b, &taps);
    let aa = filter(&a.zip_map(a, |x, y| x * y)?, &taps);
    let bb = filter(&b.zip_map(b, |x, y| x * y)?, &taps);
    let ab = filter(&a.zip_map(b, |x, y| x * y)?, &taps);
    let mut total = T::zero();
    for k in 0..mu_a.len() {
        let (ma, mb) = (mu_a.as_slice()[k], mu_b.as_slice()[k]);
        let va = aa.as_slice()[k] - ma * ma;
        let vb = bb.as_slice()[k] - mb * mb;
        let cov = ab.as_slice()[k] - ma * mb;
        let two = T::lit(2.0);
        total += ((two * ma * mb + c1) * (two * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / T::from_count(mu_a.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Similarity {
    #[default]
    Pearson,
    Cosine,
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(Similarity::Pearson),
            "cosine" => Ok(Similarity::Cosine),
            other => Err(Error::RangeError(format!("unknown similarity {other:?}"))),
        }
    }
}

/// Percentage of ordered pairs `i ≠ j` where prediction `i` is closer to
/// truth `i` than to truth `j`; ties count one half.
pub fn two_way_identification<T: Real>(preds: &Matrix<T>, truths: &Matrix<T>, sim: Similarity) -> Result<T> {
    if preds.shape() != truths.shape() {
        return Err(Error::shape(format!("identification: {:?} vs {:?}", preds.shape(), truths.shape())));
    }
    let n = preds.rows();
    if n < 2 {
        return Err(Error::degenerate("identification needs at least two samples"));
    }
    let f = |a: &[T], b: &[T]| match sim {
        Similarity::Pearson => pearson(a, b),
        Similarity::Cosine => cosine(a, b),
    };
    let mut wins = T::zero();
    for i in 0..n {
        let own = f(preds.row(i), truths.row(i)).map_err(|e| e.context(format!("sample {i}")))?;
        for j in 0..n {
            if j == i {
                continue;
            }
            let other = f(preds.row(i), truths.row(j)).map_err(|e| e.context(format!("sample {i} vs {j}")))?;
            if own > other {
                wins += T::one();
            } else if own == other {
                wins += T::lit(0.5);
            }
        }
    }
    Ok(T::lit(100.0) * wins / T::from_count(n * (n - 1)))
}
