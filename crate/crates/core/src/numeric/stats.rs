//! Gram matrices, double centering and correlation statistics.

use crate::error::{Error, Result};
use crate::numeric::matrix::{dot, norm, Matrix};
use crate::scalar::Real;

/// Linear-kernel Gram matrix `A Aᵀ`.
pub fn gram_linear<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    let m = a.rows();
    let mut k = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = dot(a.row(i), a.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// `H K H` with `H = I - 11ᵀ/m`, via row/column mean subtraction.
pub fn apply_centering<T: Real>(k: &Matrix<T>) -> Result<Matrix<T>> {
    let (m, n) = k.shape();
    if m != n {
        return Err(Error::shape(format!("centering needs a square matrix, got {m}x{n}")));
    }
    if m < 2 {
        return Err(Error::degenerate("centering needs at least 2 samples"));
    }
    let mf = T::from_count(m);
    let row_means: Vec<T> = k.row_iter().map(|r| r.iter().copied().sum::<T>() / mf).collect();
    let col_means = k.col_means();
    let grand = row_means.iter().copied().sum::<T>() / mf;
    Ok(Matrix::from_fn(m, m, |i, j| {
        k[(i, j)] - row_means[i] - col_means[j] + grand
    }))
}

fn mean<T: Real>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::from_count(x.len())
}

/// True when the centered sum of squares is indistinguishable from zero.
pub(crate) fn is_constant<T: Real>(x: &[T]) -> bool {
    let mu = mean(x);
    let scale = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let ss: T = x.iter().map(|&v| (v - mu) * (v - mu)).sum();
    let tol = T::from_count(x.len()) * T::epsilon() * scale;
    ss <= tol * tol
}

/// Pearson correlation coefficient, clamped to `[-1, 1]`.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::shape(format!("pearson: lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::degenerate("pearson needs at least 2 values"));
    }
    if is_constant(x) || is_constant(y) {
        return Err(Error::degenerate("pearson: zero-variance input"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Fractional ranks starting at 1; ties share their average rank.
pub fn fractional_ranks<T: Real>(x: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("ranking requires non-NaN values"));
    let mut ranks = vec![T::zero(); x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        // ranks start+1 ..= end averaged
        let avg = T::from_count(start + 1 + end) / T::lit(2.0);
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation (Pearson over fractional ranks).
pub fn spearman<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::shape(format!("spearman: lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::degenerate("spearman needs at least 2 values"));
    }
    pearson(&fractional_ranks(x), &fractional_ranks(y))
        .map_err(|_| Error::degenerate("spearman: all-equal input"))
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine<T: Real>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::shape(format!("cosine: lengths {} and {}", u.len(), v.len())));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::degenerate("cosine of a zero vector"));
    }
    Ok((dot(u, v) / (nu * nv)).max(-T::one()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn gram_examples() {
        assert_eq!(gram_linear(&Matrix::<f64>::identity(2)), Matrix::identity(2));
        let k = gram_linear(&m(&[&[1.0, 1.0], &[2.0, 2.0]]));
        assert_eq!(k.as_slice(), &[2.0, 4.0, 4.0, 8.0]);
    }

    #[test]
    fn centering_examples() {
        let z = apply_centering(&Matrix::<f64>::filled(3, 3, 1.0)).unwrap();
        assert!(z.max_abs() < 1e-15);

        let c = apply_centering(&Matrix::<f64>::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 3.0 } else { -1.0 / 3.0 };
                assert!((c[(i, j)] - want).abs() < 1e-15);
            }
        }
        let cc = apply_centering(&c).unwrap();
        assert!(cc.sub(&c).unwrap().max_abs() < 1e-9);

        assert!(matches!(
            apply_centering(&Matrix::<f64>::identity(1)),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            apply_centering(&Matrix::<f64>::zeros(2, 3)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0f64, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0f64, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(pearson(&[1.0f64, 1.0], &[1.0, 2.0]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0f64, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[0.1, 5.0, 7.0, 100.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[4.0, 3.0, 1.0, -9.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(spearman(&x, &[2.0; 4]), Err(Error::DegenerateInput(_))));
        assert_eq!(fractional_ranks(&[3.0f64, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[3.0f64, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c: f64 = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(cosine(&[0.0f64, 0.0], &[1.0, 0.0]), Err(Error::DegenerateInput(_))));
    }
}
