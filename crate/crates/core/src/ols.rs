//! Ordinary least squares with an intercept.
//!
//! The normal equations are formed on centred data and solved with a
//! Cholesky factorization of the equilibrated covariate cross-product. The
//! same kernel ([`solve_centered`]) backs both the standalone fit and the
//! rolling block scan of the Robust-LSE.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Relative pivot threshold for rank detection.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    /// Intercept.
    pub mu: f64,
    /// Residual mean square `SSE / (n - 1)`.
    pub mse: f64,
    pub r2: f64,
    /// F with the default `(q, n - q - 1)` degrees of freedom; `None` when the
    /// fit is perfect.
    pub f_stat: Option<f64>,
    pub n: usize,
    pub sse: f64,
    pub sst: f64,
}

impl OlsFit {
    pub fn q(&self) -> usize {
        self.beta.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.q() {
            return Err(Error::Dimension {
                expected: self.q(),
                got: x.len(),
            });
        }
        Ok(dot(&self.beta, x) + self.mu)
    }

    /// Default degrees of freedom `(q, n - q - 1)`.
    pub fn default_df(&self) -> (usize, usize) {
        (self.q(), self.n - self.q() - 1)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Slope solution from centred cross-products.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredSolution {
    pub beta: Vec<f64>,
    /// `Cyy - beta' Cxy`, clamped at zero.
    pub sse: f64,
}

/// Solves `Cxx beta = Cxy` where `cxx` is the `q × q` centred cross-product
/// (row-major), `raw_diag` the uncentred diagonal `Σ x_j²` used to
/// equilibrate, and `cyy` the centred response sum of squares.
///
/// The factorisation is `L D L'` of the unscaled matrix. Covariate `j` is
/// rejected when its pivot, equilibrated by `1 / Σ x_j²` so that the
/// intercept pivot is 1, falls below [`RANK_TOL`].
pub fn solve_centered(
    q: usize,
    cxx: &[f64],
    cxy: &[f64],
    cyy: f64,
    raw_diag: &[f64],
) -> Result<CenteredSolution> {
    debug_assert_eq!(cxx.len(), q * q);
    let mut l = vec![0.0; q * q];
    let mut d = vec![0.0; q];
    for j in 0..q {
        if !(raw_diag[j] > 0.0) {
            return Err(Error::RankDeficient(format!(
                "covariate {} is identically zero",
                j + 1
            )));
        }
        let mut pivot = cxx[j * q + j];
        for k in 0..j {
            pivot -= l[j * q + k] * l[j * q + k] * d[k];
        }
        let scaled = pivot / raw_diag[j];
        if !(scaled >= RANK_TOL) {
            return Err(Error::RankDeficient(format!(
                "covariate {} is collinear with the intercept or earlier covariates (pivot {scaled:.3e})",
                j + 1
            )));
        }
        d[j] = pivot;
        l[j * q + j] = 1.0;
        for i in j + 1..q {
            let mut s = cxx[i * q + j];
            for k in 0..j {
                s -= l[i * q + k] * l[j * q + k] * d[k];
            }
            l[i * q + j] = s / pivot;
        }
    }
    let mut z = cxy.to_vec();
    for i in 0..q {
        for k in 0..i {
            z[i] -= l[i * q + k] * z[k];
        }
    }
    for i in 0..q {
        z[i] /= d[i];
    }
    for i in (0..q).rev() {
        for k in i + 1..q {
            z[i] -= l[k * q + i] * z[k];
        }
    }
    let sse = (cyy - dot(&z, cxy)).max(0.0);
    Ok(CenteredSolution { beta: z, sse })
}

/// Fits `y = beta' x + mu` by least squares. Requires `n >= q + 2`.
pub fn ols_fit(data: &Dataset) -> Result<OlsFit> {
    let n = data.len();
    let q = data.q();
    if n < q + 2 {
        return Err(Error::OutOfRange(format!(
            "OLS needs n >= q + 2 = {}, got n = {n}",
            q + 2
        )));
    }
    let nf = n as f64;
    let mut xbar = vec![0.0; q];
    let mut ybar = 0.0;
    for (x, y) in data.samples() {
        for j in 0..q {
            xbar[j] += x[j];
        }
        ybar += y;
    }
    xbar.iter_mut().for_each(|v| *v /= nf);
    ybar /= nf;

    let mut cxx = vec![0.0; q * q];
    let mut cxy = vec![0.0; q];
    let mut raw = vec![0.0; q];
    let mut cyy = 0.0;
    let mut xc = vec![0.0; q];
    for (x, y) in data.samples() {
        for j in 0..q {
            xc[j] = x[j] - xbar[j];
            raw[j] += x[j] * x[j];
        }
        let yc = y - ybar;
        for i in 0..q {
            cxy[i] += xc[i] * yc;
            for j in 0..=i {
                cxx[i * q + j] += xc[i] * xc[j];
            }
        }
        cyy += yc * yc;
    }
    for i in 0..q {
        for j in 0..i {
            cxx[j * q + i] = cxx[i * q + j];
        }
    }
    let sol = solve_centered(q, &cxx, &cxy, cyy, &raw)?;
    let beta = sol.beta;
    let mu = ybar - dot(&beta, &xbar);

    // Residual pass: more accurate than Cyy - beta'Cxy when the fit is tight.
    let sse: f64 = data
        .samples()
        .map(|(x, y)| {
            let z = y - dot(&beta, x) - mu;
            z * z
        })
        .sum();
    let sst = cyy;
    let ymax = data.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_sst = sst <= nf * (4.0 * f64::EPSILON * ymax).powi(2);
    let (r2, f_stat) = if zero_sst {
        (0.0, Some(0.0))
    } else {
        let r2 = (1.0 - sse / sst).clamp(0.0, 1.0);
        (r2, f_from_r2(r2, q, n - q - 1).ok())
    };
    Ok(OlsFit {
        beta,
        mu,
        mse: sse / (nf - 1.0),
        r2,
        f_stat,
        n,
        sse,
        sst,
    })
}

fn f_from_r2(r2: f64, df_num: usize, df_den: usize) -> Result<f64> {
    if df_num == 0 || df_den == 0 {
        return Err(Error::OutOfRange(format!(
            "degrees of freedom must be positive, got ({df_num}, {df_den})"
        )));
    }
    if r2 >= 1.0 {
        return Err(Error::PerfectFit);
    }
    Ok((r2 / df_num as f64) / ((1.0 - r2) / df_den as f64))
}

/// Goodness-of-fit F statistic `(R²/df_num) / ((1-R²)/df_den)`.
pub fn f_statistic(fit: &OlsFit, df_num: usize, df_den: usize) -> Result<f64> {
    f_from_r2(fit.r2, df_num, df_den)
}

/// F statistic from a bare R² (used for fits that are not plain OLS).
pub fn f_statistic_from_r2(r2: f64, df_num: usize, df_den: usize) -> Result<f64> {
    f_from_r2(r2, df_num, df_den)
}
