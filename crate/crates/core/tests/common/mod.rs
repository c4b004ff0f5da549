//! Independent oracles shared by the integration tests. Nothing here calls
//! the library routines it is used to check.
#![allow(dead_code)]

use brainalign::{Mat, Rng};

pub fn rand_mat(rng: &mut Rng, rows: usize, cols: usize) -> Mat {
    rng.normal_matrix(rows, cols, 1.0)
}

/// Plain triple-loop product.
pub fn naive_matmul(a: &Mat, b: &Mat) -> Mat {
    Mat::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

/// Householder QR: returns (Q m×m, R m×n).
pub fn householder_qr(a: &Mat) -> (Mat, Mat) {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = Mat::identity(m);
    for k in 0..n.min(m - 1) {
        let x: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        let alpha = -x[0].signum() * x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.clone();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|t| t * t).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        // R <- (I - 2vvᵀ/vᵀv) R on rows k..m
        for j in 0..n {
            let s: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vn;
            for i in k..m {
                r[(i, j)] -= s * v[i - k];
            }
        }
        // Q <- Q (I - 2vvᵀ/vᵀv) on cols k..m
        for i in 0..m {
            let s: f64 = (k..m).map(|j| q[(i, j)] * v[j - k]).sum::<f64>() * 2.0 / vn;
            for j in k..m {
                q[(i, j)] -= s * v[j - k];
            }
        }
    }
    (q, r)
}

/// Random orthogonal d×d matrix.
pub fn random_orthogonal(rng: &mut Rng, d: usize) -> Mat {
    householder_qr(&rand_mat(rng, d, d)).0
}

/// Least squares via QR: solves R₁ W = Q₁ᵀ Y for tall full-rank X.
pub fn qr_least_squares(x: &Mat, y: &Mat) -> Mat {
    let (q, r) = householder_qr(x);
    let p = x.cols();
    let qty = naive_matmul(&q.transpose(), y);
    let mut w = Mat::zeros(p, y.cols());
    for c in 0..y.cols() {
        for i in (0..p).rev() {
            let mut s = qty[(i, c)];
            for k in (i + 1)..p {
                s -= r[(i, k)] * w[(k, c)];
            }
            w[(i, c)] = s / r[(i, i)];
        }
    }
    w
}

/// HSIC with the centering matrix H materialised and four explicit products.
pub fn hsic_explicit(a: &Mat, b: &Mat) -> f64 {
    let m = a.rows();
    let k = naive_matmul(a, &a.transpose());
    let l = naive_matmul(b, &b.transpose());
    let h = Mat::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / m as f64);
    let khlh = naive_matmul(&naive_matmul(&naive_matmul(&k, &h), &l), &h);
    (0..m).map(|i| khlh[(i, i)]).sum::<f64>() / ((m - 1) * (m - 1)) as f64
}

pub fn cka_explicit(a: &Mat, b: &Mat) -> f64 {
    hsic_explicit(a, b) / (hsic_explicit(a, a).sqrt() * hsic_explicit(b, b).sqrt())
}

/// Pearson correlation written out directly.
pub fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn cosine_direct(u: &[f64], v: &[f64]) -> f64 {
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    d / (nu * nv)
}

/// Central-difference gradient of a scalar function.
pub fn numeric_grad(f: impl Fn(&Mat) -> f64, x: &Mat, h: f64) -> Mat {
    let mut g = Mat::zeros(x.rows(), x.cols());
    let mut p = x.clone();
    for k in 0..x.len() {
        let orig = p.as_slice()[k];
        p.as_mut_slice()[k] = orig + h;
        let up = f(&p);
        p.as_mut_slice()[k] = orig - h;
        let down = f(&p);
        p.as_mut_slice()[k] = orig;
        g.as_mut_slice()[k] = (up - down) / (2.0 * h);
    }
    g
}

pub fn max_rel_err(analytic: &Mat, numeric: &Mat) -> f64 {
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Largest relative error between `analytic` and central differences of
/// `loss` over every entry of every parameter tensor.
pub fn param_grad_err(
    params: &brainalign::model::ModelParams,
    analytic: &brainalign::model::ModelParams,
    loss: impl Fn(&brainalign::model::ModelParams) -> f64,
    h: f64,
) -> (f64, String) {
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let grads: Vec<Mat> = analytic.tensors().into_iter().map(|(_, m)| m.clone()).collect();
    let mut worst = (0.0, String::new());
    let mut p = params.clone();
    for (t, name) in names.iter().enumerate() {
        let len = grads[t].len();
        for k in 0..len {
            let orig = p.tensors()[t].1.as_slice()[k];
            p.tensors_mut()[t].1.as_mut_slice()[k] = orig + h;
            let up = loss(&p);
            p.tensors_mut()[t].1.as_mut_slice()[k] = orig - h;
            let down = loss(&p);
            p.tensors_mut()[t].1.as_mut_slice()[k] = orig;
            let num = (up - down) / (2.0 * h);
            let a = grads[t].as_slice()[k];
            let err = (a - num).abs() / a.abs().max(num.abs()).max(1e-8);
            if err > worst.0 {
                worst = (err, format!("{name}[{k}] analytic {a:e} numeric {num:e}"));
            }
        }
    }
    worst
}

/// SSIM by explicit 11×11 windows with a 2-D Gaussian weight table built
/// from scratch.
pub fn ssim_loop(a: &Mat, b: &Mat, range: f64) -> f64 {
    let k = 11usize;
    let mut w = vec![vec![0.0; k]; k];
    let mut total_w = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            total_w += *v;
        }
    }
    let c1 = (0.01 * range) * (0.01 * range);
    let c2 = (0.03 * range) * (0.03 * range);
    let (h, wd) = a.shape();
    let mut sum = 0.0;
    let mut count = 0;
    for r in 0..=h - k {
        for c in 0..=wd - k {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let q = w[i][j] / total_w;
                    ma += q * a[(r + i, c + j)];
                    mb += q * b[(r + i, c + j)];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let q = w[i][j] / total_w;
                    let (x, y) = (a[(r + i, c + j)] - ma, b[(r + i, c + j)] - mb);
                    va += q * x * x;
                    vb += q * y * y;
                    cov += q * x * y;
                }
            }
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// Worst KKT violation of a lasso solution on the standardised scale.
pub fn lasso_kkt_violation(x: &Mat, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let (n, p) = x.shape();
    let nf = n as f64;
    let mut cols = Vec::with_capacity(p);
    let mut b_std = Vec::with_capacity(p);
    for j in 0..p {
        let c = x.col(j);
        let m = c.iter().sum::<f64>() / nf;
        let sd = (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf).sqrt();
        cols.push(c.iter().map(|v| (v - m) / sd).collect::<Vec<f64>>());
        b_std.push(beta[j] * sd);
    }
    let ym = y.iter().sum::<f64>() / nf;
    let r: Vec<f64> = (0..n)
        .map(|i| y[i] - ym - (0..p).map(|j| cols[j][i] * b_std[j]).sum::<f64>())
        .collect();
    let mut worst: f64 = 0.0;
    for j in 0..p {
        let g = cols[j].iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / nf;
        let v = if b_std[j] != 0.0 { (g - lambda * b_std[j].signum()).abs() } else { (g.abs() - lambda).max(0.0) };
        worst = worst.max(v);
    }
    worst
}
