use serde::{Deserialize, Serialize};

use super::quadrature::NormalQuadrature;
use super::{interp_uniform, GexpProblem, PdeGrid};
use crate::error::{Error, Result};

/// Discretisation for [`gexp_dp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    pub steps: usize,
    /// Gauss–Hermite nodes per one-step expectation.
    pub quad_nodes: usize,
    /// Spatial nodes over the default PDE domain.
    pub nx: usize,
}

/// Default DP node count: the PDE domain at a quarter of its spacing.
pub const DP_DEFAULT_NX: usize = 4 * (super::DEFAULT_NX - 1) + 1;

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            quad_nodes: 21,
            nx: DP_DEFAULT_NX,
        }
    }
}

impl DpConfig {
    pub fn with_steps(steps: usize) -> Self {
        Self {
            steps,
            ..Self::default()
        }
    }
}

/// Backward recursion
/// `V_k(x) = max_{s in {sigma_lo, sigma_hi}} E[V_{k+1}(x + s sqrt(h/steps) xi)]`,
/// `V_steps = phi`, returning `V_0(shift)`.
pub fn gexp_dp(problem: &GexpProblem, config: &DpConfig) -> Result<f64> {
    problem.validate()?;
    if config.steps == 0 {
        return Err(Error::OutOfRange("DP needs steps >= 1".into()));
    }
    if config.nx < 3 {
        return Err(Error::OutOfRange(format!(
            "DP grid needs nx >= 3, got {}",
            config.nx
        )));
    }
    let quad = NormalQuadrature::new(config.quad_nodes)?;
    let grid = PdeGrid::with_nx(problem, config.nx);
    let xs = grid.nodes();
    let dx = grid.dx();
    let mut v: Vec<f64> = xs.iter().map(|&x| problem.payoff.eval(x)).collect();
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "payoff is not finite at x = {}",
            xs[i]
        )));
    }
    let sqrt_dt = (problem.horizon / config.steps as f64).sqrt();
    let vols = [
        problem.sigma2_lo.sqrt() * sqrt_dt,
        problem.sigma2_hi.sqrt() * sqrt_dt,
    ];
    let mut next = vec![0.0; v.len()];
    for _ in 0..config.steps {
        for (i, &x) in xs.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for &s in &vols {
                let e = quad.expect(|z| interp_uniform(grid.x_min, dx, &v, x + s * z));
                best = best.max(e);
            }
            next[i] = best;
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(interp_uniform(grid.x_min, dx, &v, problem.shift))
}
