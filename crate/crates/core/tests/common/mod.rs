//! Helpers shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ulse_core::Dataset;

pub fn close(a: f64, b: f64, tol: f64, what: &str) {
    let scale = 1.0f64.max(a.abs()).max(b.abs());
    assert!(
        (a - b).abs() <= tol * scale,
        "{what}: {a} vs {b} (diff {:e})",
        (a - b).abs()
    );
}

/// Independent OLS on a row range via SVD: `(beta, mu, sse)`.
pub fn svd_ols(data: &Dataset, rows: std::ops::Range<usize>) -> Option<(Vec<f64>, f64, f64)> {
    let q = data.q();
    let t = rows.len();
    let a = DMatrix::from_fn(t, q + 1, |i, j| {
        if j < q {
            data.x_row(rows.start + i)[j]
        } else {
            1.0
        }
    });
    let b = DVector::from_fn(t, |i, _| data.y()[rows.start + i]);
    let coef = a.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    let sse = (&a * &coef - &b).norm_squared();
    Some((coef.as_slice()[..q].to_vec(), coef[q], sse))
}

pub struct OracleFit {
    pub k_hat: usize,
    pub beta: Vec<f64>,
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub sigma2_lo: f64,
    pub sigma2_hi_raw: f64,
    pub block_means: Vec<f64>,
}

/// Brute-force Robust-LSE: every block refit, every window recomputed.
pub fn oracle_fit(data: &Dataset, n: usize, n1: usize) -> OracleFit {
    let t = data.len();
    let m = t - n + 1;
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for l in 0..m {
        let (beta, _, sse) = svd_ols(data, l..l + n).expect("block solve");
        let s2 = sse / (n as f64 - 1.0);
        if best.as_ref().is_none_or(|b| s2 < b.2) {
            best = Some((l, beta, s2));
        }
    }
    let (k, beta, sigma2_lo) = best.unwrap();
    let w: Vec<f64> = (0..t)
        .map(|i| {
            data.y()[i]
                - data
                    .x_row(i)
                    .iter()
                    .zip(&beta)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect();
    let block_means: Vec<f64> = (0..m)
        .map(|l| w[l..l + n].iter().sum::<f64>() / n as f64)
        .collect();
    let mut wt = vec![0.0; t];
    let mut start = 0;
    while start < t {
        let end = (start + n1).min(t);
        let mean = w[start..end].iter().sum::<f64>() / (end - start) as f64;
        for i in start..end {
            wt[i] = w[i] - mean;
        }
        start = end;
    }
    let sigma2_hi_raw = (0..m)
        .map(|l| wt[l..l + n].iter().map(|v| v * v).sum::<f64>() / (n as f64 - 1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    OracleFit {
        k_hat: k + 1,
        beta,
        mu_lo: block_means.iter().copied().fold(f64::INFINITY, f64::min),
        mu_hi: block_means
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
        sigma2_lo,
        sigma2_hi_raw,
        block_means,
    }
}
