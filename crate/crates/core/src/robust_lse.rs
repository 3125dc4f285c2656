//! Moving-block Robust-LSE.
//!
//! Step 1 fits OLS on every block `B_l = {l, ..., l+n-1}` (`m = T - n + 1`
//! blocks), keeps the slope of the block with the smallest residual mean
//! square, and reads the lower/upper means off the block averages of the
//! intermediate residuals `w_i = y_i - beta_hat' x_i`. Step 2 centres `w` on
//! consecutive windows of length `n1` and takes the largest block mean square
//! as the upper variance.
//!
//! Block statistics are maintained as running sums while the window slides.
//! Sums are rebuilt from scratch every `n` steps, and blocks whose rank test
//! is borderline are recomputed directly, so the scan agrees with an
//! independent per-block recompute to well below `1e-10`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::envelope::UncertaintyEnvelope;
use crate::error::{Error, Result};
use crate::ols::{dot, solve_centered, RANK_TOL};

/// Default centering window.
pub const DEFAULT_N1: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustLseConfig {
    /// Block length `n`.
    pub n: usize,
    /// Centering window `n1`.
    pub n1: usize,
    /// Keep per-block OLS estimates in the fit.
    pub diagnostics: bool,
}

impl RobustLseConfig {
    pub fn new(n: usize, n1: usize) -> Self {
        Self {
            n,
            n1,
            diagnostics: false,
        }
    }

    pub fn with_diagnostics(mut self, on: bool) -> Self {
        self.diagnostics = on;
        self
    }

    /// `n = max(floor(T/8), q + 2)` capped at `T`, `n1 = min(20, n)`.
    pub fn default_for(t: usize, q: usize) -> Self {
        let n = (t / 8).max(q + 2).min(t);
        Self::new(n, DEFAULT_N1.min(n))
    }

    pub fn validate(&self, t: usize, q: usize) -> Result<()> {
        if self.n > t {
            return Err(Error::OutOfRange(format!(
                "block length n = {} violates n <= T = {t}",
                self.n
            )));
        }
        if self.n < q + 2 {
            return Err(Error::OutOfRange(format!(
                "block length n = {} violates n >= q + 2 = {}",
                self.n,
                q + 2
            )));
        }
        if self.n1 < 2 {
            return Err(Error::OutOfRange(format!(
                "centering window n1 = {} violates n1 >= 2",
                self.n1
            )));
        }
        if self.n1 > self.n {
            return Err(Error::OutOfRange(format!(
                "centering window n1 = {} violates n1 <= n = {}",
                self.n1, self.n
            )));
        }
        Ok(())
    }
}

/// OLS estimates on one block (1-based start index `l`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagnostics {
    pub l: usize,
    pub beta_l: Vec<f64>,
    pub mu_l: f64,
    pub sigma2_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustLseFit {
    pub beta_hat: Vec<f64>,
    pub envelope: UncertaintyEnvelope,
    /// Winning block (1-based).
    pub k_hat: usize,
    /// Intercept of the winning block's OLS fit.
    pub mu_block: f64,
    /// `mu~_l` for `l = 1..m`.
    pub block_means: Vec<f64>,
    /// Step-2 block mean squares of the window-centred residuals.
    pub block_sigma2_centered: Vec<f64>,
    /// Raw maximum of `block_sigma2_centered`. The envelope's `sigma2_hi` is
    /// this value raised to `sigma2_lo` when it falls below it.
    pub sigma2_hi_raw: f64,
    /// Blocks (1-based) whose design is rank deficient.
    pub skipped_blocks: Vec<usize>,
    pub n: usize,
    pub n1: usize,
    pub m: usize,
    pub diagnostics: Option<Vec<BlockDiagnostics>>,
}

/// Intercept used by [`predict`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuRule {
    /// `mu_hat` of the winning block.
    #[default]
    Block,
    Midpoint,
    Lower,
    Upper,
}

impl RobustLseFit {
    pub fn q(&self) -> usize {
        self.beta_hat.len()
    }

    pub fn mu_for(&self, rule: MuRule) -> f64 {
        match rule {
            MuRule::Block => self.mu_block,
            MuRule::Midpoint => self.envelope.mu_mid(),
            MuRule::Lower => self.envelope.mu_lo,
            MuRule::Upper => self.envelope.mu_hi,
        }
    }

    /// Zero-based row range of the winning block.
    pub fn winning_block(&self) -> std::ops::Range<usize> {
        self.k_hat - 1..self.k_hat - 1 + self.n
    }
}

/// `beta_hat' x + mu*` with `mu*` chosen by `rule`.
pub fn predict(fit: &RobustLseFit, x: &[f64], rule: MuRule) -> Result<f64> {
    if x.len() != fit.q() {
        return Err(Error::Dimension {
            expected: fit.q(),
            got: x.len(),
        });
    }
    Ok(dot(&fit.beta_hat, x) + fit.mu_for(rule))
}

/// `1 - SSR/SST` of the prediction rule over `data`. Not clamped: a rule
/// that fits worse than the mean gives a negative value.
pub fn r_squared(fit: &RobustLseFit, data: &Dataset, rule: MuRule) -> Result<f64> {
    let ybar = data.y().iter().sum::<f64>() / data.len() as f64;
    let mut ssr = 0.0;
    let mut sst = 0.0;
    for (x, y) in data.samples() {
        let e = y - predict(fit, x, rule)?;
        ssr += e * e;
        sst += (y - ybar) * (y - ybar);
    }
    Ok(if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 })
}

/// Robust-LSE with block length `n` and centering window `n1`.
pub fn robust_lse_fit(data: &Dataset, n: usize, n1: usize) -> Result<RobustLseFit> {
    fit_with(data, &RobustLseConfig::new(n, n1))
}

/// Running block sums in globally shifted coordinates.
struct BlockSums {
    q: usize,
    sx: Vec<f64>,
    sy: f64,
    sxx: Vec<f64>,
    sxy: Vec<f64>,
    syy: f64,
}

impl BlockSums {
    fn new(q: usize) -> Self {
        Self {
            q,
            sx: vec![0.0; q],
            sy: 0.0,
            sxx: vec![0.0; q * q],
            sxy: vec![0.0; q],
            syy: 0.0,
        }
    }

    fn reset(&mut self) {
        self.sx.iter_mut().for_each(|v| *v = 0.0);
        self.sxx.iter_mut().for_each(|v| *v = 0.0);
        self.sxy.iter_mut().for_each(|v| *v = 0.0);
        self.sy = 0.0;
        self.syy = 0.0;
    }

    fn update(&mut self, x: &[f64], y: f64, sign: f64) {
        let q = self.q;
        for i in 0..q {
            self.sx[i] += sign * x[i];
            self.sxy[i] += sign * x[i] * y;
            for j in 0..=i {
                self.sxx[i * q + j] += sign * x[i] * x[j];
            }
        }
        self.sy += sign * y;
        self.syy += sign * y * y;
    }
}

struct BlockEstimate {
    beta: Vec<f64>,
    mu: f64,
    sigma2: f64,
}

/// Centred cross-products for one block, then the shared OLS kernel.
/// `xs`, `ys` are in shifted coordinates; `shift_x` restores the raw
/// diagonal used by the rank test.
fn solve_from_sums(s: &BlockSums, n: usize, shift_x: &[f64]) -> Result<(Vec<f64>, f64, f64, f64)> {
    let q = s.q;
    let nf = n as f64;
    let mut cxx = vec![0.0; q * q];
    let mut cxy = vec![0.0; q];
    let mut raw = vec![0.0; q];
    for i in 0..q {
        cxy[i] = s.sxy[i] - s.sx[i] * s.sy / nf;
        for j in 0..=i {
            let v = s.sxx[i * q + j] - s.sx[i] * s.sx[j] / nf;
            cxx[i * q + j] = v;
            cxx[j * q + i] = v;
        }
        raw[i] = s.sxx[i * q + i] + 2.0 * shift_x[i] * s.sx[i] + nf * shift_x[i] * shift_x[i];
    }
    let cyy = s.syy - s.sy * s.sy / nf;
    let sol = solve_centered(q, &cxx, &cxy, cyy, &raw)?;
    let mu_shifted = (s.sy - dot(&sol.beta, &s.sx)) / nf;
    let pivot_margin = min_scaled_pivot(q, &cxx, &raw);
    Ok((sol.beta, mu_shifted, sol.sse, pivot_margin))
}

/// Smallest equilibrated pivot, used to flag borderline rank decisions.
fn min_scaled_pivot(q: usize, cxx: &[f64], raw: &[f64]) -> f64 {
    let mut a: Vec<f64> = (0..q * q)
        .map(|k| {
            let (i, j) = (k / q, k % q);
            cxx[k] / (raw[i].sqrt() * raw[j].sqrt())
        })
        .collect();
    let mut min = f64::INFINITY;
    for j in 0..q {
        let d = a[j * q + j];
        min = min.min(d);
        if !(d > 0.0) {
            return d;
        }
        for i in j + 1..q {
            let f = a[i * q + j] / d;
            for k in j + 1..q {
                a[i * q + k] -= f * a[j * q + k];
            }
        }
    }
    min
}

/// Direct two-pass OLS on rows `start..start+n` (raw coordinates).
fn direct_block(data: &Dataset, start: usize, n: usize) -> Result<BlockEstimate> {
    let block = data.slice(start..start + n)?;
    let fit = crate::ols::ols_fit(&block)?;
    Ok(BlockEstimate {
        beta: fit.beta,
        mu: fit.mu,
        sigma2: fit.sse / (n as f64 - 1.0),
    })
}

/// Running sum of `values` over every length-`n` window, rebuilt every `n`
/// steps.
fn rolling_sums(values: &[f64], n: usize) -> Vec<f64> {
    let m = values.len() - n + 1;
    let mut out = Vec::with_capacity(m);
    let mut s = 0.0;
    for l in 0..m {
        if l % n == 0 {
            s = values[l..l + n].iter().sum();
        } else {
            s += values[l + n - 1] - values[l - 1];
        }
        out.push(s);
    }
    out
}

/// Full Robust-LSE fit.
pub fn fit_with(data: &Dataset, config: &RobustLseConfig) -> Result<RobustLseFit> {
    let t = data.len();
    let q = data.q();
    config.validate(t, q)?;
    let RobustLseConfig { n, n1, diagnostics } = *config;
    let m = t - n + 1;
    let nf = n as f64;

    // Global shift keeps the running sums well scaled.
    let mut xbar = vec![0.0; q];
    for (x, _) in data.samples() {
        for j in 0..q {
            xbar[j] += x[j];
        }
    }
    xbar.iter_mut().for_each(|v| *v /= t as f64);
    let ybar = data.y().iter().sum::<f64>() / t as f64;
    let xs: Vec<f64> = data
        .x_flat()
        .iter()
        .enumerate()
        .map(|(k, v)| v - xbar[k % q])
        .collect();
    let ys: Vec<f64> = data.y().iter().map(|v| v - ybar).collect();

    // Step 1: per-block OLS.
    let mut sums = BlockSums::new(q);
    let mut best: Option<(usize, BlockEstimate)> = None;
    let mut skipped = Vec::new();
    let mut diag = diagnostics.then(Vec::new);
    for l in 0..m {
        if l % n == 0 {
            sums.reset();
            for i in l..l + n {
                sums.update(&xs[i * q..(i + 1) * q], ys[i], 1.0);
            }
        } else {
            let out = l - 1;
            let inn = l + n - 1;
            sums.update(&xs[out * q..(out + 1) * q], ys[out], -1.0);
            sums.update(&xs[inn * q..(inn + 1) * q], ys[inn], 1.0);
        }
        let rolled = solve_from_sums(&sums, n, &xbar);
        let est = match rolled {
            Ok((beta, mu_s, sse, margin)) if margin > 1e4 * RANK_TOL => {
                let mu = mu_s + ybar - dot(&beta, &xbar);
                BlockEstimate {
                    beta,
                    mu,
                    sigma2: sse / (nf - 1.0),
                }
            }
            // Borderline or failed rank test: decide on an exact recompute.
            _ => match direct_block(data, l, n) {
                Ok(e) => e,
                Err(Error::RankDeficient(msg)) => {
                    log::warn!("block {} skipped: {msg}", l + 1);
                    skipped.push(l + 1);
                    continue;
                }
                Err(e) => return Err(e),
            },
        };
        if let Some(d) = diag.as_mut() {
            d.push(BlockDiagnostics {
                l: l + 1,
                beta_l: est.beta.clone(),
                mu_l: est.mu,
                sigma2_l: est.sigma2,
            });
        }
        let better = match &best {
            None => true,
            Some((_, b)) => est.sigma2 < b.sigma2,
        };
        if better {
            best = Some((l, est));
        }
    }
    let (k0, win) =
        best.ok_or_else(|| Error::RankDeficient(format!("all {m} blocks are rank deficient")))?;

    // Intermediate residuals with the winning slope.
    let w: Vec<f64> = data.samples().map(|(x, y)| y - dot(&win.beta, x)).collect();
    let block_means: Vec<f64> = rolling_sums(&w, n).into_iter().map(|s| s / nf).collect();
    let (mut mu_lo, mut mu_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &block_means {
        if v < mu_lo {
            mu_lo = v;
        }
        if v > mu_hi {
            mu_hi = v;
        }
    }

    // Step 2: centre on consecutive n1-windows; the last window may be short.
    let mut wt = w.clone();
    for chunk in wt.chunks_mut(n1) {
        let mean = chunk.iter().sum::<f64>() / chunk.len() as f64;
        chunk.iter_mut().for_each(|v| *v -= mean);
    }
    let sq: Vec<f64> = wt.iter().map(|v| v * v).collect();
    let block_sigma2_centered: Vec<f64> = rolling_sums(&sq, n)
        .into_iter()
        .map(|s| s.max(0.0) / (nf - 1.0))
        .collect();
    let sigma2_hi_raw = block_sigma2_centered
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    let sigma2_lo = win.sigma2.max(0.0);
    let envelope = UncertaintyEnvelope::new(mu_lo, mu_hi, sigma2_lo, sigma2_hi_raw.max(sigma2_lo))?;
    Ok(RobustLseFit {
        beta_hat: win.beta,
        envelope,
        k_hat: k0 + 1,
        mu_block: win.mu,
        block_means,
        block_sigma2_centered,
        sigma2_hi_raw,
        skipped_blocks: skipped,
        n,
        n1,
        m,
        diagnostics: diag,
    })
}
