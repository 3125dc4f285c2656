use super::{interp_uniform, GexpProblem, PdeGrid};
use crate::error::{Error, Result};

/// Terminal profile `x -> u(horizon, x)` and the value at `shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub value: f64,
    pub xs: Vec<f64>,
    pub u: Vec<f64>,
    pub grid: PdeGrid,
}

/// `u(horizon, shift)` for `u_t = G(u_xx)`, `u(0, .) = phi`.
pub fn gexp_pde(problem: &GexpProblem, grid: &PdeGrid) -> Result<f64> {
    gexp_pde_solution(problem, grid).map(|s| s.value)
}

/// Forward Euler in time, central second differences in space. Boundary
/// nodes are re-extrapolated linearly after every step, i.e. their second
/// difference is held at zero.
pub fn gexp_pde_solution(problem: &GexpProblem, grid: &PdeGrid) -> Result<PdeSolution> {
    problem.validate()?;
    grid.validate(problem)?;
    let xs = grid.nodes();
    let mut u: Vec<f64> = xs.iter().map(|&x| problem.payoff.eval(x)).collect();
    if let Some(i) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "payoff is not finite at x = {}",
            xs[i]
        )));
    }
    let nx = grid.nx;
    let dx2 = grid.dx().powi(2);
    let dt = problem.horizon / grid.nt as f64;
    let mut next = u.clone();
    if problem.sigma2_hi > 0.0 {
        for _ in 0..grid.nt {
            for i in 1..nx - 1 {
                let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / dx2;
                next[i] = u[i] + dt * problem.g(d2);
            }
            next[0] = 2.0 * next[1] - next[2];
            next[nx - 1] = 2.0 * next[nx - 2] - next[nx - 3];
            std::mem::swap(&mut u, &mut next);
        }
    }
    if let Some(i) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "solution blew up at x = {}",
            xs[i]
        )));
    }
    let value = interp_uniform(grid.x_min, grid.dx(), &u, problem.shift);
    Ok(PdeSolution {
        value,
        xs,
        u,
        grid: *grid,
    })
}
