use serde::{Deserialize, Serialize};

use super::GexpProblem;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_draws: usize,
}

/// `E[phi(N(0, sigma2_const * horizon) + shift)]` by plain Monte Carlo.
///
/// Any constant variance in the band is one member of the representing
/// family, so the estimate is a lower bound for the G-expectation up to
/// sampling error.
pub fn gexp_mc_lower_bound(
    problem: &GexpProblem,
    sigma2_const: f64,
    n_draws: usize,
    rng: &mut SeededRng,
) -> Result<McEstimate> {
    problem.validate()?;
    if !(problem.sigma2_lo..=problem.sigma2_hi).contains(&sigma2_const) {
        return Err(Error::OutOfRange(format!(
            "sigma2_const = {sigma2_const} outside band [{}, {}]",
            problem.sigma2_lo, problem.sigma2_hi
        )));
    }
    if n_draws == 0 {
        return Err(Error::OutOfRange("n_draws must be >= 1".into()));
    }
    let sd = (sigma2_const * problem.horizon).sqrt();
    // Welford accumulation.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=n_draws {
        let v = problem
            .payoff
            .eval(problem.shift + sd * rng.standard_normal());
        let d = v - mean;
        mean += d / k as f64;
        m2 += d * (v - mean);
    }
    let var = if n_draws > 1 {
        m2 / (n_draws - 1) as f64
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr: (var / n_draws as f64).sqrt(),
        n_draws,
    })
}
