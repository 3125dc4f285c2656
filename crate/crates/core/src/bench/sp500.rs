//! Yearly AR(1) fits of an index series by LSE and Robust-LSE.

use serde::{Deserialize, Serialize};

use crate::data::{lagged, log_returns, Dataset};
use crate::error::{Error, Result};
use crate::ols::{f_statistic_from_r2, ols_fit};
use crate::robust_lse::{fit_with, r_squared, MuRule, RobustLseConfig, DEFAULT_N1};

/// Half-open label range `[start, end)`, compared lexicographically
/// against ISO dates, so `2015-07:2016-07` covers July 2015 to June 2016.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: String,
    pub end: String,
}

impl Window {
    pub fn new(start: impl Into<String>, end: impl Into<String>) -> Self {
        Self {
            start: start.into(),
            end: end.into(),
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        label >= self.start.as_str() && label < self.end.as_str()
    }

    pub fn name(&self) -> String {
        format!("{}:{}", self.start, self.end)
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("window `{s}` is not of the form START:END")))?;
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() || a >= b {
            return Err(Error::Config(format!("window `{s}` needs START < END")));
        }
        Ok(Window::new(a, b))
    }
}

/// Parses a comma-separated window list.
pub fn parse_windows(s: &str) -> Result<Vec<Window>> {
    s.split(',')
        .filter(|w| !w.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// `Y-MM:(Y+1)-MM` for every year `Y` in `first..=last`.
pub fn yearly_windows(first: i32, last: i32, month: u32) -> Vec<Window> {
    (first..=last)
        .map(|y| {
            Window::new(
                format!("{y:04}-{month:02}"),
                format!("{:04}-{month:02}", y + 1),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocessing {
    #[default]
    LogReturns,
    Levels,
}

impl std::str::FromStr for Preprocessing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log-returns" => Ok(Preprocessing::LogReturns),
            "levels" => Ok(Preprocessing::Levels),
            other => Err(Error::Config(format!(
                "unknown preprocessing `{other}` (log-returns | levels)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sp500Config {
    pub windows: Vec<Window>,
    pub prep: Preprocessing,
    /// F degrees of freedom; `None` uses `(1, n_obs - 2)` per window.
    pub df: Option<(usize, usize)>,
    pub fcrit: f64,
    /// Robust-LSE block length; `None` uses the default rule per window.
    pub n: Option<usize>,
    pub n1: usize,
    pub min_obs: usize,
}

impl Sp500Config {
    pub fn new(windows: Vec<Window>, prep: Preprocessing, fcrit: f64) -> Self {
        Self {
            windows,
            prep,
            df: None,
            fcrit,
            n: None,
            n1: DEFAULT_N1,
            min_obs: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArFit {
    pub beta: f64,
    pub mu: f64,
    pub r2: f64,
    pub f: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub window: String,
    pub n_obs: usize,
    pub df: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lse: Option<ArFit>,
    /// R² and F on the winning block with the block intercept.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rlse: Option<ArFit>,
    /// R² of the block rule over the whole window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rlse_r2_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rlse_k_hat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rlse_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sp500Report {
    pub config: Sp500Config,
    pub input_rows: usize,
    pub windows: Vec<WindowResult>,
    pub rlse_f_exceeds_lse: usize,
    pub rlse_significant: usize,
    pub lse_significant: usize,
}

fn ar_fit(beta: f64, mu: f64, r2: f64, df: (usize, usize), fcrit: f64) -> ArFit {
    let f = f_statistic_from_r2(r2.max(0.0), df.0, df.1).ok();
    ArFit {
        beta,
        mu,
        r2,
        f,
        significant: f.is_some_and(|f| f > fcrit),
    }
}

fn fit_window(series: &Dataset, w: &Window, cfg: &Sp500Config) -> WindowResult {
    let labels = series.labels().unwrap_or_default();
    let rows: Vec<usize> = (0..series.len())
        .filter(|&i| labels.get(i).is_some_and(|l| w.contains(l)))
        .collect();
    let mut out = WindowResult {
        window: w.name(),
        n_obs: rows.len().saturating_sub(1),
        df: None,
        lse: None,
        rlse: None,
        rlse_r2_window: None,
        rlse_k_hat: None,
        rlse_n: None,
        error: None,
    };
    let run = |out: &mut WindowResult| -> Result<()> {
        if out.n_obs < cfg.min_obs {
            return Err(Error::InvalidData(format!(
                "{} AR(1) pairs, need at least {}",
                out.n_obs, cfg.min_obs
            )));
        }
        // Labels in a valid series are sorted, so the window is contiguous.
        let sub = series.slice(rows[0]..rows[rows.len() - 1] + 1)?;
        let ar = lagged(&sub)?;
        let df = cfg.df.unwrap_or((1, ar.len() - 2));
        out.df = Some(df);
        let lse = ols_fit(&ar)?;
        out.lse = Some(ar_fit(lse.beta[0], lse.mu, lse.r2, df, cfg.fcrit));
        let rcfg = match cfg.n {
            Some(n) => RobustLseConfig::new(n, cfg.n1),
            None => RobustLseConfig {
                n1: cfg.n1,
                ..RobustLseConfig::default_for(ar.len(), 1)
            },
        };
        let fit = fit_with(&ar, &rcfg)?;
        let block = ar.slice(fit.winning_block())?;
        let r2_block = r_squared(&fit, &block, MuRule::Block)?;
        out.rlse = Some(ar_fit(
            fit.beta_hat[0],
            fit.mu_block,
            r2_block,
            df,
            cfg.fcrit,
        ));
        out.rlse_r2_window = Some(r_squared(&fit, &ar, MuRule::Block)?);
        out.rlse_k_hat = Some(fit.k_hat);
        out.rlse_n = Some(fit.n);
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.error = Some(e.to_string());
    }
    out
}

/// Fits every window of a labelled price series. Window failures are
/// recorded in that window's result and do not affect the others.
pub fn run_sp500(prices: &Dataset, cfg: &Sp500Config) -> Result<Sp500Report> {
    if prices.labels().is_none() {
        return Err(Error::InvalidData(
            "price series needs a date label column".into(),
        ));
    }
    if cfg.windows.is_empty() {
        return Err(Error::Config("no windows given".into()));
    }
    if !cfg.fcrit.is_finite() || cfg.fcrit < 0.0 {
        return Err(Error::OutOfRange(format!(
            "fcrit = {} must be finite and >= 0",
            cfg.fcrit
        )));
    }
    let series = match cfg.prep {
        Preprocessing::LogReturns => log_returns(prices)?,
        Preprocessing::Levels => prices.clone(),
    };
    let windows: Vec<WindowResult> = cfg
        .windows
        .iter()
        .map(|w| fit_window(&series, w, cfg))
        .collect();
    let f = |r: &Option<ArFit>| r.as_ref().and_then(|a| a.f);
    let sig = |r: &Option<ArFit>| r.as_ref().is_some_and(|a| a.significant);
    Ok(Sp500Report {
        config: cfg.clone(),
        input_rows: prices.len(),
        rlse_f_exceeds_lse: windows
            .iter()
            .filter(|w| matches!((f(&w.rlse), f(&w.lse)), (Some(a), Some(b)) if a > b))
            .count(),
        rlse_significant: windows.iter().filter(|w| sig(&w.rlse)).count(),
        lse_significant: windows.iter().filter(|w| sig(&w.lse)).count(),
        windows,
    })
}
