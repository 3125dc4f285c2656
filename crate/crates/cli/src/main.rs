use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ulse_core::bench::{
    parse_windows, run_experiment, run_sp500, yearly_windows, Design, ExperimentSpec,
    Preprocessing, Sp500Config,
};
use ulse_core::data::{load_csv, load_series, write_csv_to, CsvSchema};
use ulse_core::dgp::{
    generate_grouped, generate_hetero, generate_noiseless, generate_scenario, DgpConfig,
    HeteroConfig, NoiselessConfig, ScenarioConfig, XRule,
};
use ulse_core::gexp::{
    gexp_dp, gexp_mc_lower_bound, gexp_pde_solution, DpConfig, GexpProblem, PayoffKind, PdeGrid,
    DEFAULT_NX, DP_DEFAULT_NX,
};
use ulse_core::ols::ols_fit;
use ulse_core::report::{write_trace, Report};
use ulse_core::rng::{RngId, SeededRng};
use ulse_core::robust_lse::{fit_with, predict, r_squared, MuRule, RobustLseConfig, DEFAULT_N1};

/// Regression under mean and variance uncertainty.
#[derive(Debug, Parser)]
#[command(name = "ulse", version, about)]
struct Cli {
    /// Worker threads (0 = all cores). Affects speed only.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Base random seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Write the main output here (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Fit LSE and Robust-LSE to a CSV dataset.
    Fit(FitArgs),
    /// Evaluate a G-normal expectation.
    Gexp(GexpArgs),
    /// Regenerate a simulation table.
    Bench(BenchArgs),
    /// Yearly AR(1) comparison on an index price series.
    Sp500(Sp500Args),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GenDesign {
    Grouped,
    Scenario,
    Hetero,
    Noiseless,
}

#[derive(Debug, Args, Serialize)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = GenDesign::Grouped)]
    design: GenDesign,
    /// JSON config for the chosen design; replaces the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sample size.
    #[arg(short = 'T', long = "T", default_value_t = 3200)]
    t: usize,
    /// Group length (grouped, hetero).
    #[arg(long, default_value_t = 200)]
    n0: usize,
    /// Scenario index 1..6 (scenario design).
    #[arg(long, default_value_t = 1)]
    scenario: usize,
    /// Override the scenario's clean fraction.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Write the ground-truth report here.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RuleArg {
    Block,
    Midpoint,
    Lower,
    Upper,
}

impl From<RuleArg> for MuRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Block => MuRule::Block,
            RuleArg::Midpoint => MuRule::Midpoint,
            RuleArg::Lower => MuRule::Lower,
            RuleArg::Upper => MuRule::Upper,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    #[arg(long)]
    csv: PathBuf,
    /// Response column.
    #[arg(long, default_value = "y")]
    y: String,
    /// Covariate column; repeat for several.
    #[arg(long, default_values_t = ["x1".to_string()])]
    x: Vec<String>,
    /// Block length (default max(T/8, q+2)).
    #[arg(long)]
    n: Option<usize>,
    /// Centering window.
    #[arg(long, default_value_t = DEFAULT_N1)]
    n1: usize,
    /// Intercept rule for the reported Robust-LSE R².
    #[arg(long, value_enum, default_value_t = RuleArg::Block)]
    mu_rule: RuleArg,
    /// Include per-block OLS estimates.
    #[arg(long)]
    diagnostics: bool,
    /// Directory for `block_means.csv` and `block_sigma2.csv` traces.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct GexpArgs {
    /// linear | quadratic | neg-quadratic | quartic | capped-quadratic | call | constant
    #[arg(long, default_value = "quadratic")]
    payoff: String,
    /// Cap, strike or constant value for the parametrised payoffs.
    #[arg(long)]
    param: Option<f64>,
    /// Lower volatility (standard deviation).
    #[arg(long, default_value_t = 0.5)]
    sigma_lo: f64,
    /// Upper volatility (standard deviation).
    #[arg(long, default_value_t = 1.0)]
    sigma_hi: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Evaluation point x of u(horizon, x).
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    #[arg(long, default_value_t = DEFAULT_NX)]
    nx: usize,
    /// Time steps (default: smallest stable count with a 1/2 margin).
    #[arg(long)]
    nt: Option<usize>,
    /// Dynamic-programming oracle steps (0 disables).
    #[arg(long, default_value_t = 100)]
    dp_steps: usize,
    /// Spatial nodes of the dynamic-programming oracle.
    #[arg(long, default_value_t = DP_DEFAULT_NX)]
    dp_nx: usize,
    /// Monte Carlo draws for the constant-volatility bound (0 disables).
    #[arg(long, default_value_t = 0)]
    mc_draws: usize,
    /// Constant volatility of the Monte Carlo bound (default sigma-hi).
    #[arg(long)]
    mc_sigma: Option<f64>,
    /// Write the terminal profile (x, u) here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    /// table1 | table2 | scenarios | large-t | hetero | noiseless
    #[arg(long, default_value = "table1")]
    design: String,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Comma-separated T grid (default per design).
    #[arg(long = "T-grid", value_delimiter = ',')]
    t_grid: Option<Vec<usize>>,
    /// Comma-separated block lengths (grouped designs).
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    /// Comma-separated scenario indices.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<usize>>,
    /// Comma-separated clean fractions a_1..a_6.
    #[arg(long, value_delimiter = ',')]
    clean_fractions: Option<Vec<f64>>,
    /// Block length as a fraction of the clean count or group length.
    #[arg(long)]
    block_fraction: Option<f64>,
    /// Print the aligned table to stderr.
    #[arg(long)]
    table: bool,
    /// Directory for two-column plot traces.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct Sp500Args {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "Date")]
    date_col: String,
    #[arg(long, default_value = "Close")]
    price_col: String,
    /// Comma-separated START:END windows, e.g. 2015-07:2016-07.
    #[arg(long)]
    windows: Option<String>,
    /// FIRST:LAST years of July-to-July windows, used when --windows is absent.
    #[arg(long, default_value = "2000:2019")]
    yearly: String,
    #[arg(long, value_enum, default_value_t = PrepArg::LogReturns)]
    prep: PrepArg,
    /// Critical value for the significance flag.
    #[arg(long, default_value_t = 4.6921)]
    fcrit: f64,
    /// F degrees of freedom as NUM,DEN (default 1,n-2 per window).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    df: Option<Vec<usize>>,
    /// Robust-LSE block length (default per window).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_N1)]
    n1: usize,
    #[arg(long, default_value_t = 50)]
    min_obs: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PrepArg {
    LogReturns,
    Levels,
}

/// Writes to `path` via a sibling temporary file, or to stdout.
fn emit(path: Option<&Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, body),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write_atomic(path: &Path, body: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(body)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn trace_bytes(
    header: (&str, &str),
    points: impl IntoIterator<Item = (f64, f64)>,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace(&mut buf, header, points)?;
    Ok(buf)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let (data, truth, effective) = match a.design {
        GenDesign::Grouped => {
            let cfg = match &a.config {
                Some(p) => read_json(p)?,
                None => DgpConfig::simulation(a.t, a.n0, cli.seed, a.stream),
            };
            let (d, t) = generate_grouped(&cfg)?;
            (
                d,
                Some(serde_json::to_value(t)?),
                serde_json::to_value(cfg)?,
            )
        }
        GenDesign::Scenario => {
            let cfg = match &a.config {
                Some(p) => read_json(p)?,
                None => {
                    let base = ScenarioConfig::standard(a.scenario, a.t, cli.seed, a.stream)?;
                    ScenarioConfig {
                        a: a.a.unwrap_or(base.a),
                        ..base
                    }
                }
            };
            let d = generate_scenario(&cfg)?;
            let truth = serde_json::json!({ "clean_count": cfg.clean_count(), "beta": 1.0 });
            (d, Some(truth), serde_json::to_value(cfg)?)
        }
        GenDesign::Hetero => {
            let cfg = match &a.config {
                Some(p) => read_json(p)?,
                None => HeteroConfig {
                    n0: a.n0,
                    ..HeteroConfig::standard(a.t, cli.seed, a.stream)
                },
            };
            let (d, t) = generate_hetero(&cfg)?;
            (
                d,
                Some(serde_json::to_value(t)?),
                serde_json::to_value(cfg)?,
            )
        }
        GenDesign::Noiseless => {
            let cfg = match &a.config {
                Some(p) => read_json(p)?,
                None => NoiselessConfig {
                    beta: vec![1.0],
                    intercept: 2.0,
                    t: a.t,
                    x_rule: XRule::linear(0.005),
                    seed: cli.seed,
                    stream: a.stream,
                },
            };
            let d = generate_noiseless(&cfg)?;
            (d, None, serde_json::to_value(cfg)?)
        }
    };
    let mut csv = Vec::new();
    write_csv_to(&data, &mut csv, None)?;
    emit(cli.out.as_deref(), &csv)?;
    if let Some(path) = &a.truth {
        let rng_id = RngId {
            seed: effective["seed"].as_u64().unwrap_or(cli.seed),
            stream: effective["stream"].as_u64().unwrap_or(a.stream),
        };
        let report = Report::new("generate", &effective, &truth)?
            .with_rng(rng_id)
            .with_digest(data.digest());
        write_atomic(path, report.to_json().as_bytes())?;
    }
    log::info!("generated {} rows", data.len());
    Ok(())
}

#[derive(Serialize)]
struct FitEcho<'a> {
    #[serde(flatten)]
    args: &'a FitArgs,
    n: usize,
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> Result<()> {
    let schema = CsvSchema::new(a.x.iter().cloned(), a.y.clone());
    let data = load_csv(&a.csv, &schema)?;
    let default = RobustLseConfig::default_for(data.len(), data.q());
    let cfg = RobustLseConfig::new(a.n.unwrap_or(default.n), a.n1).with_diagnostics(a.diagnostics);
    cfg.validate(data.len(), data.q())?;
    let lse = ols_fit(&data)?;
    let fit = fit_with(&data, &cfg)?;
    let rule = MuRule::from(a.mu_rule);
    let r2 = r_squared(&fit, &data, rule)?;
    let first = predict(&fit, data.x_row(0), rule)?;
    let results = serde_json::json!({
        "T": data.len(),
        "q": data.q(),
        "lse": lse,
        "robust_lse": {
            "beta_hat": fit.beta_hat,
            "envelope": fit.envelope,
            "k_hat": fit.k_hat,
            "mu_block": fit.mu_block,
            "sigma2_hi_raw": fit.sigma2_hi_raw,
            "n": fit.n,
            "n1": fit.n1,
            "m": fit.m,
            "skipped_blocks": fit.skipped_blocks,
            "r2": r2,
            "mu_rule": rule,
            "first_prediction": first,
            "diagnostics": fit.diagnostics,
        },
    });
    let report = Report::new("fit", FitEcho { args: a, n: cfg.n }, results)?
        .with_digest(data.digest())
        .note("Robust-LSE R^2 uses the selected intercept rule; the block rule is the default.");
    if let Some(dir) = &a.trace_dir {
        std::fs::create_dir_all(dir)?;
        let idx = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(i, y)| ((i + 1) as f64, *y))
                .collect::<Vec<_>>()
        };
        write_atomic(
            &dir.join("block_means.csv"),
            &trace_bytes(("l", "mu_tilde"), idx(&fit.block_means))?,
        )?;
        write_atomic(
            &dir.join("block_sigma2.csv"),
            &trace_bytes(("l", "sigma2_centered"), idx(&fit.block_sigma2_centered))?,
        )?;
    }
    emit(cli.out.as_deref(), report.to_json().as_bytes())?;
    Ok(())
}

fn cmd_gexp(cli: &Cli, a: &GexpArgs) -> Result<()> {
    if !(a.sigma_lo >= 0.0) || !(a.sigma_hi >= a.sigma_lo) {
        return Err(ulse_core::Error::OutOfRange(format!(
            "need 0 <= sigma-lo <= sigma-hi, got {} and {}",
            a.sigma_lo, a.sigma_hi
        ))
        .into());
    }
    let kind = PayoffKind::from_name(&a.payoff, a.param)?;
    let problem = GexpProblem::new(kind, a.sigma_lo.powi(2), a.sigma_hi.powi(2))?
        .with_horizon(a.horizon)?
        .with_shift(a.shift);
    let mut grid = PdeGrid::with_nx(&problem, a.nx);
    if let Some(nt) = a.nt {
        grid.nt = nt;
    }
    let sol = gexp_pde_solution(&problem, &grid)?;
    let dp = if a.dp_steps > 0 {
        Some(gexp_dp(
            &problem,
            &DpConfig {
                steps: a.dp_steps,
                nx: a.dp_nx,
                ..DpConfig::default()
            },
        )?)
    } else {
        None
    };
    let mc_sigma = a.mc_sigma.unwrap_or(a.sigma_hi);
    let mut rng = SeededRng::new(cli.seed, 0);
    let mc = if a.mc_draws > 0 {
        Some(gexp_mc_lower_bound(
            &problem,
            mc_sigma * mc_sigma,
            a.mc_draws,
            &mut rng,
        )?)
    } else {
        None
    };
    let results = serde_json::json!({
        "payoff": kind,
        "sigma2_lo": problem.sigma2_lo,
        "sigma2_hi": problem.sigma2_hi,
        "horizon": problem.horizon,
        "shift": problem.shift,
        "value": sol.value,
        "dp_value": dp,
        "mc_lower_bound": mc,
        "grid": sol.grid,
    });
    let mut report = Report::new("gexp", a, results)?;
    if mc.is_some() {
        report = report.with_rng(rng.id());
    }
    if let Some(path) = &a.trace {
        write_atomic(
            path,
            &trace_bytes(
                ("x", "u"),
                sol.xs.iter().copied().zip(sol.u.iter().copied()),
            )?,
        )?;
    }
    emit(cli.out.as_deref(), report.to_json().as_bytes())
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> Result<()> {
    let design: Design = a.design.parse()?;
    let mut spec = ExperimentSpec::standard(design, a.reps, cli.seed);
    if let Some(v) = &a.t_grid {
        spec.t_grid = v.clone();
    }
    if let Some(v) = &a.n_grid {
        spec.n_grid = v.clone();
    }
    if let Some(v) = a.n0 {
        spec.n0 = v;
    }
    if let Some(v) = a.n1 {
        spec.n1 = v;
    }
    if let Some(v) = &a.scenarios {
        spec.scenarios = v.clone();
    }
    if let Some(v) = &a.clean_fractions {
        spec.clean_fractions = v.clone();
    }
    if let Some(v) = a.block_fraction {
        spec.block_fraction = v;
    }
    let start = std::time::Instant::now();
    let table = run_experiment(&spec)?;
    log::info!(
        "bench {} finished in {:.1?}",
        design.name(),
        start.elapsed()
    );
    if a.table {
        eprint!("{}", table.to_text());
    }
    if let Some(dir) = &a.trace_dir {
        std::fs::create_dir_all(dir)?;
        for tr in &table.traces {
            write_atomic(
                &dir.join(format!("{}.csv", tr.name)),
                &trace_bytes(("T", "mse"), tr.points.iter().copied())?,
            )?;
        }
    }
    let report = Report::new("bench", &spec, &table)?
        .with_rng(RngId {
            seed: cli.seed,
            stream: 0,
        })
        .note("replication r of cell c uses stream (c << 32) + r");
    emit(cli.out.as_deref(), report.to_json().as_bytes())
}

fn cmd_sp500(cli: &Cli, a: &Sp500Args) -> Result<()> {
    let prices = load_series(&a.csv, &a.price_col, Some(&a.date_col))?;
    let windows = match &a.windows {
        Some(w) => parse_windows(w)?,
        None => {
            let (f, l) = a.yearly.split_once(':').ok_or_else(|| {
                ulse_core::Error::Config(format!("--yearly `{}` is not FIRST:LAST", a.yearly))
            })?;
            yearly_windows(f.trim().parse()?, l.trim().parse()?, 7)
        }
    };
    let prep = match a.prep {
        PrepArg::LogReturns => Preprocessing::LogReturns,
        PrepArg::Levels => Preprocessing::Levels,
    };
    let mut cfg = Sp500Config::new(windows, prep, a.fcrit);
    cfg.df = match a.df.as_deref() {
        Some([n, d]) => Some((*n, *d)),
        Some(_) => bail!("--df takes NUM,DEN"),
        None => None,
    };
    cfg.n = a.n;
    cfg.n1 = a.n1;
    cfg.min_obs = a.min_obs;
    let rep = run_sp500(&prices, &cfg)?;
    let report = Report::new("sp500", &cfg, &rep)?
        .with_digest(prices.digest())
        .note("Robust-LSE R^2 and F are computed on the winning block with its own intercept")
        .note(format!("preprocessing: {:?}", prep));
    emit(cli.out.as_deref(), report.to_json().as_bytes())?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()?;
    }
    match &cli.command {
        Command::Generate(a) => cmd_generate(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Gexp(a) => cmd_gexp(cli, a),
        Command::Bench(a) => cmd_bench(cli, a),
        Command::Sp500(a) => cmd_sp500(cli, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ulse_core::Error>() {
        Some(e) if e.is_usage() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", msg.join(": ").replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}
