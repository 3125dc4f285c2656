//! Replication harness for the simulation tables.
//!
//! A run is a grid of cells; each cell repeats generate → fit R times and
//! aggregates per-metric statistics. Replication `r` of cell `c` draws from
//! stream `(c << 32) + r` of the base seed, so cells are reproducible on
//! their own and the result does not depend on the thread count.

mod sp500;
mod stats;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{
    generate_grouped, generate_hetero, generate_noiseless, generate_scenario, DgpConfig,
    HeteroConfig, NoiselessConfig, ScenarioConfig, XRule, CLEAN_FRACTIONS, HETERO_SIGMAS,
};
use crate::error::{Error, Result};
use crate::ols::ols_fit;
use crate::robust_lse::{fit_with, RobustLseConfig, DEFAULT_N1};

pub use sp500::{
    parse_windows, run_sp500, yearly_windows, ArFit, Preprocessing, Sp500Config, Sp500Report,
    Window, WindowResult,
};
pub use stats::{monotone_decreasing, CellStat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    /// Grouped design over a `T` grid at fixed `(n0, n, n1)`.
    Table1,
    /// Grouped design over an `n` grid at fixed `(T, n0, n1)`.
    Table2,
    /// Contamination scenarios at one `T`.
    Scenarios,
    /// Contamination scenarios over a `T` grid.
    LargeT,
    /// Fixed-list heteroscedastic design.
    Hetero,
    /// `y = x + 2` with `x_i = i`.
    Noiseless,
}

impl Design {
    pub const ALL: [Design; 6] = [
        Design::Table1,
        Design::Table2,
        Design::Scenarios,
        Design::LargeT,
        Design::Hetero,
        Design::Noiseless,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Design::Table1 => "table1",
            Design::Table2 => "table2",
            Design::Scenarios => "scenarios",
            Design::LargeT => "large-t",
            Design::Hetero => "hetero",
            Design::Noiseless => "noiseless",
        }
    }
}

impl std::str::FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Design::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| {
                Error::Config(format!("unknown design `{s}` (sp500 has its own command)"))
            })
    }
}

/// Everything needed to regenerate a table. [`ExperimentSpec::standard`]
/// fills in the grid of each design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub design: Design,
    pub replications: usize,
    pub seed: u64,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<usize>,
    /// Group length for the grouped designs.
    pub n0: usize,
    /// Block lengths; grouped designs only.
    pub n_grid: Vec<usize>,
    pub n1: usize,
    /// Scenario indices (1-based) into `clean_fractions`.
    pub scenarios: Vec<usize>,
    pub clean_fractions: Vec<f64>,
    /// Block length as a fraction of the clean count (scenarios) or of the
    /// group length (hetero).
    pub block_fraction: f64,
}

impl ExperimentSpec {
    pub fn standard(design: Design, replications: usize, seed: u64) -> Self {
        let base = Self {
            design,
            replications,
            seed,
            t_grid: vec![],
            n0: 200,
            n_grid: vec![150],
            n1: DEFAULT_N1,
            scenarios: vec![],
            clean_fractions: CLEAN_FRACTIONS.to_vec(),
            block_fraction: 0.95,
        };
        match design {
            Design::Table1 => Self {
                t_grid: vec![400, 800, 1600, 3200],
                ..base
            },
            Design::Table2 => Self {
                t_grid: vec![1600],
                n_grid: vec![60, 80, 160, 200],
                ..base
            },
            Design::Scenarios => Self {
                t_grid: vec![200],
                scenarios: (1..=6).collect(),
                ..base
            },
            Design::LargeT => Self {
                t_grid: vec![200, 400, 600, 800, 1000],
                scenarios: vec![1, 4],
                ..base
            },
            Design::Hetero => Self {
                t_grid: vec![500, 1000, 1500, 2000],
                block_fraction: 0.75,
                ..base
            },
            Design::Noiseless => Self {
                t_grid: vec![100],
                n_grid: vec![20],
                n1: 10,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::OutOfRange("replications must be >= 1".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.contains(&0) {
            return Err(Error::Config(
                "T grid must be non-empty and positive".into(),
            ));
        }
        match self.design {
            Design::Table1 | Design::Table2 => {
                if self.n0 == 0 || self.t_grid.iter().any(|t| t % self.n0 != 0) {
                    return Err(Error::Config(format!(
                        "every T must be a multiple of n0 = {}",
                        self.n0
                    )));
                }
                if self.n_grid.is_empty() || self.n_grid.contains(&0) {
                    return Err(Error::Config(
                        "n grid must be non-empty and positive".into(),
                    ));
                }
            }
            Design::Noiseless => {
                if self.n_grid.is_empty() || self.n_grid.contains(&0) {
                    return Err(Error::Config(
                        "n grid must be non-empty and positive".into(),
                    ));
                }
            }
            Design::Scenarios | Design::LargeT => {
                if self.scenarios.is_empty() {
                    return Err(Error::Config("scenario list is empty".into()));
                }
                for &m in &self.scenarios {
                    if m == 0 || m > self.clean_fractions.len() {
                        return Err(Error::OutOfRange(format!(
                            "scenario {m} outside 1..={}",
                            self.clean_fractions.len()
                        )));
                    }
                }
            }
            Design::Hetero => {}
        }
        if matches!(
            self.design,
            Design::Scenarios | Design::LargeT | Design::Hetero
        ) && !(self.block_fraction > 0.0 && self.block_fraction <= 1.0)
        {
            return Err(Error::OutOfRange(format!(
                "block_fraction = {} must lie in (0, 1]",
                self.block_fraction
            )));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<CellParams> {
        let mut out = Vec::new();
        match self.design {
            Design::Table1 | Design::Table2 | Design::Noiseless => {
                for &t in &self.t_grid {
                    for &n in &self.n_grid {
                        let n0 = (self.design != Design::Noiseless).then_some(self.n0);
                        out.push(CellParams {
                            t,
                            n0,
                            n,
                            n1: self.n1,
                            scenario: None,
                            a: None,
                        });
                    }
                }
            }
            Design::Scenarios | Design::LargeT => {
                for &m in &self.scenarios {
                    for &t in &self.t_grid {
                        let a = self.clean_fractions[m - 1];
                        let clean = (a * t as f64).floor();
                        let n = (self.block_fraction * clean).floor() as usize;
                        out.push(CellParams {
                            t,
                            n0: None,
                            n,
                            n1: self.n1,
                            scenario: Some(m),
                            a: Some(a),
                        });
                    }
                }
            }
            Design::Hetero => {
                for &t in &self.t_grid {
                    let n0 = t / HETERO_SIGMAS.len();
                    let n = (self.block_fraction * n0 as f64).floor() as usize;
                    out.push(CellParams {
                        t,
                        n0: Some(n0),
                        n,
                        n1: self.n1,
                        scenario: None,
                        a: None,
                    });
                }
            }
        }
        out
    }
}

/// Resolved parameters of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    pub n: usize,
    pub n1: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

impl CellParams {
    pub fn label(&self) -> String {
        let mut s = format!("T={}", self.t);
        if let Some(m) = self.scenario {
            s = format!("m={m} {s}");
        }
        if let Some(n0) = self.n0 {
            let _ = write!(s, " n0={n0}");
        }
        let _ = write!(s, " n={} n1={}", self.n, self.n1);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub stat: CellStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub label: String,
    pub params: CellParams,
    pub successes: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
    pub metrics: Vec<Metric>,
}

impl Cell {
    pub fn metric(&self, name: &str) -> Option<&CellStat> {
        self.metrics
            .iter()
            .find(|m| m.name == name)
            .map(|m| &m.stat)
    }
}

/// A flat `(x, y)` series for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub spec: ExperimentSpec,
    pub cells: Vec<Cell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<Trace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl TableReport {
    pub fn cell(&self, pred: impl Fn(&CellParams) -> bool) -> Option<&Cell> {
        self.cells.iter().find(|c| pred(&c.params))
    }

    /// Aligned text rendering: one row per (cell, metric).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "design {}  R = {}  seed = {}",
            self.spec.design.name(),
            self.spec.replications,
            self.spec.seed
        );
        let _ = writeln!(
            s,
            "{:<28} {:<16} {:>10} {:>10} {:>10} {:>10}",
            "cell", "metric", "mean", "sd", "se", "mse"
        );
        for c in &self.cells {
            for m in &c.metrics {
                let mse = m
                    .stat
                    .mse
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{:<28} {:<16} {:>10.4} {:>10.4} {:>10.4} {:>10}",
                    c.label, m.name, m.stat.mean, m.stat.sd, m.stat.se, mse
                );
            }
            if c.failures > 0 {
                let _ = writeln!(
                    s,
                    "{:<28} {} failed replications: {}",
                    c.label,
                    c.failures,
                    c.first_error.as_deref().unwrap_or("")
                );
            }
        }
        for ch in &self.checks {
            let _ = writeln!(
                s,
                "check {}: {} ({})",
                ch.name,
                if ch.passed { "pass" } else { "FAIL" },
                ch.detail
            );
        }
        s
    }
}

/// One replication's metric values, in a fixed order per design.
type Row = Vec<(&'static str, f64)>;

const BETA: f64 = 1.0;

fn replicate(design: Design, p: &CellParams, seed: u64, stream: u64) -> Result<Row> {
    let cfg = RobustLseConfig::new(p.n, p.n1);
    match design {
        Design::Table1 | Design::Table2 => {
            let n0 = p.n0.unwrap_or(200);
            let (data, truth) = generate_grouped(&DgpConfig::simulation(p.t, n0, seed, stream))?;
            let lse = ols_fit(&data)?;
            let rl = fit_with(&data, &cfg)?;
            Ok(vec![
                ("rlse_beta", rl.beta_hat[0]),
                ("rlse_mu_lo", rl.envelope.mu_lo),
                ("rlse_mu_hi", rl.envelope.mu_hi),
                ("rlse_sigma_lo", rl.envelope.sigma_lo()),
                ("rlse_sigma_hi", rl.envelope.sigma_hi()),
                ("lse_beta", lse.beta[0]),
                ("lse_mu", lse.mu),
                ("lse_sigma", lse.mse.sqrt()),
                ("eta_min", truth.eta_min),
                ("eta_max", truth.eta_max),
                ("sigma_min", truth.sigma_min),
                ("sigma_max", truth.sigma_max),
            ])
        }
        Design::Scenarios | Design::LargeT => {
            let sc = ScenarioConfig {
                m: p.scenario.unwrap_or(0),
                a: p.a.unwrap_or(0.5),
                t: p.t,
                clean_sigma2: 1.0,
                contaminated_sigma2: 100.0,
                seed,
                stream,
            };
            let data = generate_scenario(&sc)?;
            let lse = ols_fit(&data)?;
            let rl = fit_with(&data, &cfg)?;
            Ok(vec![
                ("rlse_beta", rl.beta_hat[0]),
                ("lse_beta", lse.beta[0]),
            ])
        }
        Design::Hetero => {
            let hc = HeteroConfig {
                n0: p.n0.unwrap_or(p.t / 10),
                ..HeteroConfig::standard(p.t, seed, stream)
            };
            let (data, _) = generate_hetero(&hc)?;
            let lse = ols_fit(&data)?;
            let rl = fit_with(&data, &cfg)?;
            Ok(vec![
                ("rlse_beta", rl.beta_hat[0]),
                ("rlse_sigma_lo", rl.envelope.sigma_lo()),
                ("rlse_sigma_hi", rl.envelope.sigma_hi()),
                ("lse_beta", lse.beta[0]),
                ("lse_sigma", lse.mse.sqrt()),
            ])
        }
        Design::Noiseless => {
            let data = generate_noiseless(&NoiselessConfig {
                beta: vec![BETA],
                intercept: 2.0,
                t: p.t,
                x_rule: XRule::Linear {
                    start: 0.0,
                    step: 1.0,
                },
                seed,
                stream,
            })?;
            let lse = ols_fit(&data)?;
            let rl = fit_with(&data, &cfg)?;
            Ok(vec![
                ("rlse_beta", rl.beta_hat[0]),
                ("lse_beta", lse.beta[0]),
            ])
        }
    }
}

fn run_cell(spec: &ExperimentSpec, index: usize, params: CellParams) -> Result<Cell> {
    let base = (index as u64) << 32;
    let rows: Vec<Result<Row>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|r| replicate(spec.design, &params, spec.seed, base + r))
        .collect();
    let mut names: Vec<&'static str> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut failures = 0;
    let mut first_error = None;
    for row in rows {
        match row {
            Ok(row) => {
                if names.is_empty() {
                    names = row.iter().map(|(n, _)| *n).collect();
                    columns = vec![Vec::with_capacity(spec.replications); names.len()];
                }
                for (col, (_, v)) in columns.iter_mut().zip(row) {
                    col.push(v);
                }
            }
            Err(e) => {
                failures += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if names.is_empty() {
        return Err(Error::Numerical(format!(
            "cell {} failed in all {} replications: {}",
            params.label(),
            spec.replications,
            first_error.unwrap_or_default()
        )));
    }
    let metrics = names
        .iter()
        .zip(&columns)
        .map(|(name, col)| {
            let truth = name.ends_with("_beta").then_some(BETA);
            Metric {
                name: name.to_string(),
                stat: CellStat::from_values(col, truth),
            }
        })
        .collect();
    Ok(Cell {
        index,
        label: params.label(),
        params,
        successes: columns[0].len(),
        failures,
        first_error,
        metrics,
    })
}

/// Runs every cell of `spec`. Large-T runs also get MSE traces and the
/// consistency checks, see [`run_scenarios_large_t`].
pub fn run_experiment(spec: &ExperimentSpec) -> Result<TableReport> {
    spec.validate()?;
    let cells = spec
        .cells()
        .into_iter()
        .enumerate()
        .map(|(i, p)| run_cell(spec, i, p))
        .collect::<Result<Vec<_>>>()?;
    let mut report = TableReport {
        spec: spec.clone(),
        cells,
        traces: vec![],
        checks: vec![],
    };
    if spec.design == Design::LargeT {
        annotate_large_t(&mut report);
    }
    Ok(report)
}

/// Contamination scenarios over a `T` grid with MSE-vs-T traces per
/// (scenario, estimator) and monotone-decrease checks.
pub fn run_scenarios_large_t(spec: &ExperimentSpec) -> Result<TableReport> {
    if spec.design != Design::LargeT {
        return Err(Error::Config(format!(
            "expected design large-t, got {}",
            spec.design.name()
        )));
    }
    run_experiment(spec)
}

fn annotate_large_t(report: &mut TableReport) {
    for &m in &report.spec.scenarios.clone() {
        let cells: Vec<&Cell> = report
            .cells
            .iter()
            .filter(|c| c.params.scenario == Some(m))
            .collect();
        let trace = |metric: &str| -> Vec<(f64, f64)> {
            cells
                .iter()
                .map(|c| {
                    (
                        c.params.t as f64,
                        c.metric(metric).and_then(|s| s.mse).unwrap_or(f64::NAN),
                    )
                })
                .collect()
        };
        let lse = trace("lse_beta");
        let rlse = trace("rlse_beta");
        for (est, tr) in [("lse", &lse), ("rlse", &rlse)] {
            let ys: Vec<f64> = tr.iter().map(|p| p.1).collect();
            report.checks.push(Check {
                name: format!("scenario {m} {est} mse decreasing"),
                passed: monotone_decreasing(&ys, 1, 0.10),
                detail: format!("{ys:.4?}"),
            });
        }
        let dominated = lse.iter().zip(&rlse).all(|(a, b)| b.1 <= a.1);
        report.checks.push(Check {
            name: format!("scenario {m} rlse <= lse"),
            passed: dominated,
            detail: format!(
                "lse {:.4?} rlse {:.4?}",
                lse.iter().map(|p| p.1).collect::<Vec<_>>(),
                rlse.iter().map(|p| p.1).collect::<Vec<_>>()
            ),
        });
        report.traces.push(Trace {
            name: format!("scenario{m}_lse_mse"),
            points: lse,
        });
        report.traces.push(Trace {
            name: format!("scenario{m}_rlse_mse"),
            points: rlse,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_cell_has_zero_mse() {
        let spec = ExperimentSpec {
            replications: 1,
            ..ExperimentSpec::standard(Design::Noiseless, 1, 0)
        };
        let rep = run_experiment(&spec).unwrap();
        let c = &rep.cells[0];
        assert_eq!(c.metric("lse_beta").unwrap().mse, Some(0.0));
        assert_eq!(c.metric("rlse_beta").unwrap().mse, Some(0.0));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let spec = ExperimentSpec {
            t_grid: vec![400],
            ..ExperimentSpec::standard(Design::Table1, 12, 5)
        };
        let a = run_experiment(&spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run_experiment(&spec).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn scenario_cells_resolve_block_length() {
        let spec = ExperimentSpec::standard(Design::Scenarios, 1, 0);
        let cells = spec.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[0].n, cells[5].n), (180, 95));
        let h = ExperimentSpec::standard(Design::Hetero, 1, 0).cells();
        assert_eq!((h[3].n0, h[3].n), (Some(200), 150));
    }

    #[test]
    fn spec_validation() {
        let mut s = ExperimentSpec::standard(Design::Table1, 0, 0);
        assert!(s.validate().is_err());
        s.replications = 1;
        s.t_grid = vec![450];
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::standard(Design::Scenarios, 1, 0);
        s.scenarios = vec![7];
        assert!(s.validate().is_err());
        assert!("sp500".parse::<Design>().is_err());
        assert_eq!("large-t".parse::<Design>().unwrap(), Design::LargeT);
    }

    #[test]
    fn all_failures_fail_the_cell() {
        let spec = ExperimentSpec {
            n_grid: vec![500],
            ..ExperimentSpec::standard(Design::Noiseless, 2, 0)
        };
        assert!(run_experiment(&spec).is_err());
    }

    #[test]
    fn large_t_annotations() {
        let spec = ExperimentSpec {
            t_grid: vec![200, 400],
            ..ExperimentSpec::standard(Design::LargeT, 20, 1)
        };
        let rep = run_scenarios_large_t(&spec).unwrap();
        assert_eq!(rep.traces.len(), 4);
        assert_eq!(rep.checks.len(), 6);
        assert!(rep.to_text().contains("scenario 4 rlse <= lse"));
    }
}
