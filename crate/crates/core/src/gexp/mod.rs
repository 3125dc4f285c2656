//! G-normal expectations.
//!
//! `u(t, x) = E[phi(Z_t + x)]` for a G-normal `Z` with variance band
//! `[sigma2_lo, sigma2_hi]` solves `u_t = G(u_xx)`, `u(0, .) = phi`, with
//! `G(a) = (sigma2_hi a⁺ - sigma2_lo a⁻) / 2`. Three routes are provided:
//!
//! * [`gexp_pde`]: monotone explicit finite differences for the G-heat equation;
//! * [`gexp_dp`]: backward recursion choosing the worst-case volatility from
//!   `{sigma_lo, sigma_hi}` at every step, with Gauss–Hermite one-step
//!   expectations;
//! * [`gexp_mc_lower_bound`]: Monte Carlo under one constant volatility, a
//!   member of the representing family and hence a lower bound.
//!
//! Restricting the DP to the two extreme volatilities is lossless for the
//! G-heat equation since `G` is the maximum of two linear maps.

mod dp;
mod mc;
mod pde;
pub mod quadrature;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dp::{gexp_dp, DpConfig, DP_DEFAULT_NX};
pub use mc::{gexp_mc_lower_bound, McEstimate};
pub use pde::{gexp_pde, gexp_pde_solution, PdeSolution};

use crate::error::{Error, Result};

/// `G(a) = (sigma2_hi * max(a, 0) - sigma2_lo * max(-a, 0)) / 2`.
pub fn g_function(a: f64, sigma2_lo: f64, sigma2_hi: f64) -> f64 {
    if a >= 0.0 {
        0.5 * sigma2_hi * a
    } else {
        0.5 * sigma2_lo * a
    }
}

/// Named test functions exposed through the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PayoffKind {
    Linear,
    Quadratic,
    NegQuadratic,
    Quartic,
    /// `min(z², cap)`.
    CappedQuadratic {
        cap: f64,
    },
    /// `max(z - strike, 0)`.
    Call {
        strike: f64,
    },
    Constant {
        value: f64,
    },
}

impl PayoffKind {
    /// The fixed family used by the cross-oracle checks.
    pub fn family() -> Vec<PayoffKind> {
        vec![
            PayoffKind::Linear,
            PayoffKind::Quadratic,
            PayoffKind::NegQuadratic,
            PayoffKind::Quartic,
            PayoffKind::CappedQuadratic { cap: 1.0 },
            PayoffKind::Call { strike: 0.0 },
        ]
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            PayoffKind::Linear => z,
            PayoffKind::Quadratic => z * z,
            PayoffKind::NegQuadratic => -z * z,
            PayoffKind::Quartic => z.powi(4),
            PayoffKind::CappedQuadratic { cap } => (z * z).min(cap),
            PayoffKind::Call { strike } => (z - strike).max(0.0),
            PayoffKind::Constant { value } => value,
        }
    }

    /// Stable short name (`linear`, `capped-quadratic`, ...).
    pub fn name(&self) -> &'static str {
        match self {
            PayoffKind::Linear => "linear",
            PayoffKind::Quadratic => "quadratic",
            PayoffKind::NegQuadratic => "neg-quadratic",
            PayoffKind::Quartic => "quartic",
            PayoffKind::CappedQuadratic { .. } => "capped-quadratic",
            PayoffKind::Call { .. } => "call",
            PayoffKind::Constant { .. } => "constant",
        }
    }

    /// Parses a CLI name; `param` feeds `cap`, `strike` or `value`.
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        Ok(match name {
            "linear" => PayoffKind::Linear,
            "quadratic" => PayoffKind::Quadratic,
            "neg-quadratic" => PayoffKind::NegQuadratic,
            "quartic" => PayoffKind::Quartic,
            "capped-quadratic" => PayoffKind::CappedQuadratic {
                cap: param.unwrap_or(1.0),
            },
            "call" => PayoffKind::Call {
                strike: param.unwrap_or(0.0),
            },
            "constant" => PayoffKind::Constant {
                value: param.unwrap_or(1.0),
            },
            other => return Err(Error::Config(format!("unknown payoff `{other}`"))),
        })
    }
}

impl FromStr for PayoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s, None)
    }
}

/// A real test function, shareable across threads.
#[derive(Clone)]
pub struct Payoff {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Payoff {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        (self.f)(z)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Pointwise sum `self + other`.
    pub fn plus(&self, other: &Payoff) -> Payoff {
        let (a, b) = (self.f.clone(), other.f.clone());
        Payoff::new(format!("{}+{}", self.name, other.name), move |z| {
            a(z) + b(z)
        })
    }
}

impl From<PayoffKind> for Payoff {
    fn from(kind: PayoffKind) -> Self {
        Payoff::new(kind.name(), move |z| kind.eval(z))
    }
}

impl fmt::Debug for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Payoff").field("name", &self.name).finish()
    }
}

/// `E[phi(Z_horizon + shift)]` for `Z ~ N_G(0, [sigma2_lo, sigma2_hi])`.
#[derive(Debug, Clone)]
pub struct GexpProblem {
    pub payoff: Payoff,
    pub sigma2_lo: f64,
    pub sigma2_hi: f64,
    pub horizon: f64,
    pub shift: f64,
}

impl GexpProblem {
    pub fn new(payoff: impl Into<Payoff>, sigma2_lo: f64, sigma2_hi: f64) -> Result<Self> {
        let p = Self {
            payoff: payoff.into(),
            sigma2_lo,
            sigma2_hi,
            horizon: 1.0,
            shift: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_payoff(&self, payoff: impl Into<Payoff>) -> Self {
        Self {
            payoff: payoff.into(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2_lo >= 0.0 && self.sigma2_lo.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "sigma2_lo = {} must be finite and >= 0",
                self.sigma2_lo
            )));
        }
        if !(self.sigma2_hi >= self.sigma2_lo && self.sigma2_hi.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "sigma2_hi = {} must be finite and >= sigma2_lo = {}",
                self.sigma2_hi, self.sigma2_lo
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "horizon = {} must be > 0",
                self.horizon
            )));
        }
        if !self.shift.is_finite() {
            return Err(Error::OutOfRange("shift must be finite".into()));
        }
        Ok(())
    }

    pub fn g(&self, a: f64) -> f64 {
        g_function(a, self.sigma2_lo, self.sigma2_hi)
    }
}

/// Spatial/temporal discretisation for [`gexp_pde`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub nt: usize,
}

/// Default number of spatial nodes.
pub const DEFAULT_NX: usize = 801;
/// Spatial half-width in units of `sigma_hi * sqrt(horizon)`.
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;

impl PdeGrid {
    /// `[shift ± 8 sigma_hi sqrt(horizon)]`, 801 nodes, and the smallest `nt`
    /// with `dt <= dx² / (2 sigma2_hi)`.
    pub fn default_for(problem: &GexpProblem) -> Self {
        Self::with_nx(problem, DEFAULT_NX)
    }

    pub fn with_nx(problem: &GexpProblem, nx: usize) -> Self {
        let scale = if problem.sigma2_hi > 0.0 {
            problem.sigma2_hi.sqrt()
        } else {
            1.0
        };
        let half = DEFAULT_HALF_WIDTH * scale * problem.horizon.sqrt();
        let x_min = problem.shift - half;
        let x_max = problem.shift + half;
        let mut g = Self {
            x_min,
            x_max,
            nx,
            nt: 1,
        };
        g.nt = g.min_stable_steps(problem, 0.5);
        g
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.nx).map(|i| self.x_min + dx * i as f64).collect()
    }

    /// Smallest step count with `dt <= margin * dx² / sigma2_hi`.
    pub fn min_stable_steps(&self, problem: &GexpProblem, margin: f64) -> usize {
        if problem.sigma2_hi == 0.0 {
            return 1;
        }
        let dt_max = margin * self.dx().powi(2) / problem.sigma2_hi;
        ((problem.horizon / dt_max).ceil() as usize).max(1)
    }

    pub fn validate(&self, problem: &GexpProblem) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::OutOfRange(format!(
                "grid bounds [{}, {}] must satisfy x_min < x_max",
                self.x_min, self.x_max
            )));
        }
        if self.nx < 3 {
            return Err(Error::OutOfRange(format!(
                "grid needs nx >= 3, got {}",
                self.nx
            )));
        }
        if self.nt < 1 {
            return Err(Error::OutOfRange("grid needs nt >= 1".into()));
        }
        let dt = problem.horizon / self.nt as f64;
        let bound = self.dx().powi(2) / problem.sigma2_hi;
        if problem.sigma2_hi > 0.0 && dt > bound {
            return Err(Error::OutOfRange(format!(
                "explicit scheme unstable: dt = {dt:.3e} exceeds dx^2/sigma2_hi = {bound:.3e} (need nt >= {})",
                self.min_stable_steps(problem, 1.0)
            )));
        }
        Ok(())
    }
}

/// Linear interpolation on a uniform grid with linear extrapolation past
/// either end.
pub(crate) fn interp_uniform(x_min: f64, dx: f64, values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let s = (x - x_min) / dx;
    let i = (s.floor() as isize).clamp(0, n as isize - 2) as usize;
    let frac = s - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}
