//! Seeded generators for the simulation designs.
//!
//! * grouped uncertainty: `K = T / n0` consecutive groups, each with its own
//!   mean shift `eta_j` and noise level `sigma_j`;
//! * contamination scenarios: `y = x + eps`, clean `N(0, 1)` noise followed by
//!   `N(0, 100)` noise at the end of the index range;
//! * heteroscedastic: a fixed list of group noise levels and no mean shift;
//! * noiseless: exact linear data.
//!
//! Every generator is a pure function of its config, seed and stream
//! included. Draw order is fixed: group parameters first (all `eta_j`, then
//! all `sigma_j`), then covariates when random, then the noise in index order.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Clean fractions `a_m` for scenarios `m = 1..6`.
pub const CLEAN_FRACTIONS: [f64; 6] = [0.95, 0.90, 0.80, 0.70, 0.60, 0.50];

/// Group noise levels of the heteroscedastic design.
pub const HETERO_SIGMAS: [f64; 10] = [
    0.6995, 0.5851, 0.3481, 0.1304, 0.7165, 0.3344, 0.4721, 0.5211, 0.1955, 0.4851,
];

/// How covariates are produced. `i` below is the 1-based global index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum XRule {
    /// `x_i = start + step * i`; single covariate only.
    Linear { start: f64, step: f64 },
    /// Every component i.i.d. uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

impl XRule {
    pub fn linear(step: f64) -> Self {
        XRule::Linear { start: 1.0, step }
    }

    fn validate(&self, q: usize) -> Result<()> {
        match *self {
            XRule::Linear { start, step } => {
                if q != 1 {
                    return Err(Error::Config(format!(
                        "linear x rule needs q = 1, got q = {q}"
                    )));
                }
                if !start.is_finite() || !step.is_finite() || step == 0.0 {
                    return Err(Error::Config(
                        "linear x rule needs finite start and non-zero step".into(),
                    ));
                }
            }
            XRule::Uniform { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::Config(format!(
                        "uniform x rule needs lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn fill(&self, t: usize, q: usize, rng: &mut SeededRng) -> Vec<f64> {
        match *self {
            XRule::Linear { start, step } => (1..=t).map(|i| start + step * i as f64).collect(),
            XRule::Uniform { lo, hi } => (0..t * q).map(|_| rng.uniform_in(lo, hi)).collect(),
        }
    }
}

/// Grouped design: `y_i = beta' x_i + eta_j + eps_i`, `eps_i ~ N(0, sigma_j^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub beta: Vec<f64>,
    #[serde(rename = "T")]
    pub t: usize,
    pub n0: usize,
    pub eta_range: [f64; 2],
    pub sigma_range: [f64; 2],
    pub x_rule: XRule,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl DgpConfig {
    /// The grouped simulation design: `beta = 1`, `eta ~ U[0, 5]`,
    /// `sigma ~ U[0.1, 1]`, `x_i = 1 + 0.005 i`.
    pub fn simulation(t: usize, n0: usize, seed: u64, stream: u64) -> Self {
        Self {
            beta: vec![1.0],
            t,
            n0,
            eta_range: [0.0, 5.0],
            sigma_range: [0.1, 1.0],
            x_rule: XRule::linear(0.005),
            seed,
            stream,
        }
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            stream,
            ..self.clone()
        }
    }

    pub fn groups(&self) -> usize {
        self.t.checked_div(self.n0).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_empty() || self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config(
                "beta must be a non-empty finite vector".into(),
            ));
        }
        if self.n0 == 0 || self.t < 2 || !self.t.is_multiple_of(self.n0) {
            return Err(Error::Config(format!(
                "T = {} must be a positive multiple of n0 = {}",
                self.t, self.n0
            )));
        }
        let [elo, ehi] = self.eta_range;
        if !(elo <= ehi) || !elo.is_finite() || !ehi.is_finite() {
            return Err(Error::Config(format!(
                "eta_range [{elo}, {ehi}] must be ordered and finite"
            )));
        }
        let [slo, shi] = self.sigma_range;
        if !(slo > 0.0 && slo <= shi && shi.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_range [{slo}, {shi}] must satisfy 0 < lo <= hi"
            )));
        }
        self.x_rule.validate(self.beta.len())
    }
}

/// Realised group parameters of a grouped or heteroscedastic draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub etas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl GroundTruth {
    fn new(etas: Vec<f64>, sigmas: Vec<f64>) -> Self {
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            eta_min: min(&etas),
            eta_max: max(&etas),
            sigma_min: min(&sigmas),
            sigma_max: max(&sigmas),
            etas,
            sigmas,
        }
    }
}

fn assemble(
    q: usize,
    beta: &[f64],
    x: Vec<f64>,
    mean: impl Fn(usize) -> f64,
    sd: impl Fn(usize) -> f64,
    rng: &mut SeededRng,
) -> Result<Dataset> {
    let t = x.len() / q;
    let y = (0..t)
        .map(|i| {
            let row = &x[i * q..(i + 1) * q];
            let signal: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            signal + mean(i) + sd(i) * rng.standard_normal()
        })
        .collect();
    Dataset::from_parts(q, x, y)
}

pub fn generate_grouped(config: &DgpConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed, config.stream);
    let k = config.groups();
    let etas: Vec<f64> = (0..k)
        .map(|_| rng.uniform_in(config.eta_range[0], config.eta_range[1]))
        .collect();
    let sigmas: Vec<f64> = (0..k)
        .map(|_| rng.uniform_in(config.sigma_range[0], config.sigma_range[1]))
        .collect();
    let q = config.beta.len();
    let x = config.x_rule.fill(config.t, q, &mut rng);
    let n0 = config.n0;
    let data = assemble(
        q,
        &config.beta,
        x,
        |i| etas[i / n0],
        |i| sigmas[i / n0],
        &mut rng,
    )?;
    Ok((data, GroundTruth::new(etas, sigmas)))
}

/// Contamination design: `y = x + eps`, `x_i = 1 + 0.01 i`, with the last
/// `T - floor(a T)` errors drawn from the contaminated law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Scenario label `m`, informational only.
    pub m: usize,
    /// Clean fraction `a_m`.
    pub a: f64,
    #[serde(rename = "T")]
    pub t: usize,
    pub clean_sigma2: f64,
    pub contaminated_sigma2: f64,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl ScenarioConfig {
    /// Scenario `m` (1-based) with the default clean fraction.
    pub fn standard(m: usize, t: usize, seed: u64, stream: u64) -> Result<Self> {
        let a = *CLEAN_FRACTIONS
            .get(m.wrapping_sub(1))
            .ok_or_else(|| Error::OutOfRange(format!("scenario m = {m} must be in 1..=6")))?;
        Ok(Self {
            m,
            a,
            t,
            clean_sigma2: 1.0,
            contaminated_sigma2: 100.0,
            seed,
            stream,
        })
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            stream,
            ..self.clone()
        }
    }

    /// `floor(a T)`.
    pub fn clean_count(&self) -> usize {
        (self.a * self.t as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::Config(format!(
                "clean fraction a = {} must lie in (0, 1)",
                self.a
            )));
        }
        if self.t < 2 || self.clean_count() < 1 {
            return Err(Error::Config(format!(
                "T = {} leaves no clean samples at a = {}",
                self.t, self.a
            )));
        }
        if !(self.clean_sigma2 >= 0.0 && self.contaminated_sigma2 >= 0.0)
            || !self.clean_sigma2.is_finite()
            || !self.contaminated_sigma2.is_finite()
        {
            return Err(Error::Config(
                "scenario variances must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

pub fn generate_scenario(config: &ScenarioConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed, config.stream);
    let x = XRule::linear(0.01).fill(config.t, 1, &mut rng);
    let nc = config.clean_count();
    let (s_clean, s_dirty) = (
        config.clean_sigma2.sqrt(),
        config.contaminated_sigma2.sqrt(),
    );
    assemble(
        1,
        &[1.0],
        x,
        |_| 0.0,
        |i| if i < nc { s_clean } else { s_dirty },
        &mut rng,
    )
}

/// Heteroscedastic design: `K = sigmas.len()` groups of `n0` samples,
/// `y = beta x + eps`, `x_i = 1 + 0.005 i`, no mean shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroConfig {
    pub beta: f64,
    pub sigmas: Vec<f64>,
    pub n0: usize,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl HeteroConfig {
    /// The ten-group design with total length `t`.
    pub fn standard(t: usize, seed: u64, stream: u64) -> Self {
        Self {
            beta: 1.0,
            sigmas: HETERO_SIGMAS.to_vec(),
            n0: t / HETERO_SIGMAS.len(),
            seed,
            stream,
        }
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            stream,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.sigmas.len() * self.n0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Config(
                "sigma list must be non-empty with positive finite entries".into(),
            ));
        }
        if self.n0 == 0 || self.len() < 2 || !self.beta.is_finite() {
            return Err(Error::Config(format!(
                "need n0 >= 1 and T >= 2, got n0 = {}",
                self.n0
            )));
        }
        Ok(())
    }
}

pub fn generate_hetero(config: &HeteroConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed, config.stream);
    let x = XRule::linear(0.005).fill(config.len(), 1, &mut rng);
    let n0 = config.n0;
    let s = &config.sigmas;
    let data = assemble(1, &[config.beta], x, |_| 0.0, |i| s[i / n0], &mut rng)?;
    Ok((data, GroundTruth::new(vec![0.0; s.len()], s.clone())))
}

/// Exact linear data `y = beta' x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiselessConfig {
    pub beta: Vec<f64>,
    pub intercept: f64,
    #[serde(rename = "T")]
    pub t: usize,
    pub x_rule: XRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

pub fn generate_noiseless(config: &NoiselessConfig) -> Result<Dataset> {
    if config.beta.is_empty() || config.t < 2 || !config.intercept.is_finite() {
        return Err(Error::Config(
            "noiseless design needs non-empty beta and T >= 2".into(),
        ));
    }
    config.x_rule.validate(config.beta.len())?;
    let mut rng = SeededRng::new(config.seed, config.stream);
    let q = config.beta.len();
    let x = config.x_rule.fill(config.t, q, &mut rng);
    let c = config.intercept;
    assemble(q, &config.beta, x, |_| c, |_| 0.0, &mut rng)
}
