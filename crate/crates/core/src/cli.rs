//! Command-line front end: `ingest`, `fit`, `simulate`, `mcs`, `diagnose`, `report`.
//!
//! Exit codes: 0 on success, 2 on configuration or input errors, 1 on runtime
//! errors. Model settings come from flags or a TOML file with `[model]` and
//! `[fit]` sections; flags take precedence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::diagnostics::{self, TestFamily};
use crate::error::{Error, Result};
use crate::estimator::{self, FitOptions, FitResult, Layout, MeanSpec, ModelParams, ModelSpec, VolatilitySpec};
use crate::fgarch;
use crate::gas::ScaleLink;
use crate::innovations::Family;
use crate::market_data::{self, ReturnSeries};
use crate::mcs::{self, Scale};
use crate::beta_egarch;

#[derive(Debug, Parser)]
#[command(name = "vollab", version, about = "Conditional-volatility estimation, simulation and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a `date,close` price CSV into percent log returns.
    Ingest(IngestArgs),
    /// Fit a model to a returns CSV and print the estimation report.
    Fit(FitArgs),
    /// Simulate returns from the `[dgp]` section of a design file.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study.
    Mcs(McsArgs),
    /// Residual diagnostics (weighted Ljung-Box, ARCH LM, portmanteau Q).
    Diagnose(DiagnoseArgs),
    /// Fit a model and write the report, coefficient table, diagnostics and plot data.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct ModelArgs {
    /// TOML file with `[model]` and `[fit]` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// garch, fgarch, tgarch, cgarch, gas or betaegarch.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    innovation: Option<Family>,
    /// ARCH order of garch/fgarch.
    #[arg(long)]
    p: Option<usize>,
    /// GARCH order of garch/fgarch.
    #[arg(long)]
    q: Option<usize>,
    /// Beta-Skew-t-EGARCH components (1 or 2).
    #[arg(long)]
    components: Option<usize>,
    /// Let the GAS location vary over time.
    #[arg(long)]
    location_varies: bool,
    /// GAS scaling power: 0, 0.5 or 1.
    #[arg(long)]
    scaling_power: Option<f64>,
    /// Conditional mean: none or constant.
    #[arg(long)]
    mean: Option<String>,
    #[arg(long)]
    ar: Option<usize>,
    #[arg(long)]
    ma: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Compute QMLE sandwich standard errors.
    #[arg(long)]
    robust_se: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    returns: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coefficient table CSV.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Full fit result as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Directory for decay, news impact and conditional SD CSVs.
    #[arg(long)]
    plots: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    burn: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct McsArgs {
    #[arg(long)]
    design: PathBuf,
    /// base, desk or full.
    #[arg(long, default_value = "base")]
    scale: String,
    #[arg(long, env = "VOLLAB_JOBS")]
    jobs: Option<usize>,
    /// Report CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Failure log CSV.
    #[arg(long)]
    failures: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    lags: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "wlb,archlm,pq")]
    tests: Vec<TestFamily>,
    /// Treat the input as standardized residuals instead of fitting a model.
    #[arg(long)]
    residuals: bool,
    #[arg(long)]
    fitdf_sr: Option<usize>,
    #[arg(long)]
    fitdf_ssr: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    returns: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Length of the decay curve.
    #[arg(long, default_value_t = 100)]
    days: usize,
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    lags: Vec<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSection {
    starts: Option<usize>,
    seed: Option<u64>,
    robust_se: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    model: Option<ModelSpec>,
    #[serde(default)]
    fit: FitSection,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::InvalidParameter { .. } => 2,
        _ => 1,
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == 2 { "config" } else { "runtime" };
            let _ = writeln!(err, "error[{kind}]: {e}");
            code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(a, out),
        Command::Fit(a) => fit_cmd(a, out),
        Command::Simulate(a) => simulate_cmd(a, out),
        Command::Mcs(a) => mcs_cmd(a, out),
        Command::Diagnose(a) => diagnose_cmd(a, out),
        Command::Report(a) => report_cmd(a, out),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("input file `{}` does not exist", path.display())))
    }
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Result<()> {
    require_file(&a.input)?;
    let prices = market_data::read_prices_file(&a.input)?;
    let returns = market_data::to_log_returns(&prices);
    market_data::write_returns_file(&returns, &a.out)?;
    writeln!(out, "observations = {}", returns.len())?;
    if let Ok(s) = market_data::describe(returns.values()) {
        writeln!(out, "mean = {:.6}", s.mean)?;
        writeln!(out, "variance = {:.6}", s.variance)?;
        if let (Some(sk), Some(ku)) = (s.skewness, s.kurtosis) {
            writeln!(out, "skewness = {sk:.6}")?;
            writeln!(out, "kurtosis = {ku:.6}")?;
        }
        writeln!(out, "annualized_vol_pct = {:.4}", s.annualized_vol_pct)?;
    }
    Ok(())
}

fn parse_volatility(name: &str, m: &ModelArgs) -> Result<VolatilitySpec> {
    let p = m.p.unwrap_or(1);
    let q = m.q.unwrap_or(1);
    Ok(match name.trim().to_ascii_lowercase().as_str() {
        "garch" => VolatilitySpec::Garch { p, q },
        "fgarch" => VolatilitySpec::Fgarch { p, q },
        "tgarch" => VolatilitySpec::Tgarch,
        "cgarch" => VolatilitySpec::Cgarch,
        "gas" => VolatilitySpec::Gas {
            location_varies: m.location_varies,
            scaling_power: m.scaling_power.unwrap_or(0.0),
            link: ScaleLink::default(),
        },
        "betaegarch" | "beta-egarch" | "beta" => VolatilitySpec::Betaegarch {
            components: m.components.unwrap_or(1),
        },
        other => return Err(Error::Config(format!("unknown model `{other}`"))),
    })
}

fn resolve_model(m: &ModelArgs) -> Result<(ModelSpec, FitOptions)> {
    let file: ModelFile = match &m.config {
        Some(path) => {
            require_file(path)?;
            toml::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Config(e.to_string()))?
        }
        None => ModelFile::default(),
    };
    let base = file.model;
    let volatility = match (&m.model, &base) {
        (Some(name), _) => parse_volatility(name, m)?,
        (None, Some(b)) => b.volatility.clone(),
        (None, None) => VolatilitySpec::Fgarch { p: 1, q: 1 },
    };
    let default_family = if matches!(volatility, VolatilitySpec::Betaegarch { .. }) {
        Family::Sstd
    } else {
        Family::Norm
    };
    let innovation = m
        .innovation
        .or(base.as_ref().map(|b| b.innovation))
        .unwrap_or(default_family);
    let mut spec = ModelSpec::new(volatility, innovation);
    if let (None, Some(b)) = (&m.model, &base) {
        spec.mean = b.mean;
    }
    if let Some(mean) = &m.mean {
        spec.mean = match mean.trim().to_ascii_lowercase().as_str() {
            "none" | "zero" => MeanSpec::none(),
            "constant" => MeanSpec::constant(),
            other => return Err(Error::Config(format!("unknown mean `{other}`"))),
        };
    }
    if m.ar.is_some() || m.ma.is_some() {
        spec.mean.ar = m.ar.unwrap_or(0);
        spec.mean.ma = m.ma.unwrap_or(0);
    }
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    let opts = FitOptions {
        starts: m.starts.or(file.fit.starts).unwrap_or(5).max(1),
        seed: m.seed.or(file.fit.seed).unwrap_or(0),
        robust_se: m.robust_se || file.fit.robust_se.unwrap_or(false),
        ..FitOptions::default()
    };
    Ok((spec, opts))
}

fn load_returns(path: &Path) -> Result<ReturnSeries> {
    require_file(path)?;
    market_data::read_returns_file(path)
}

fn fit_returns(path: &Path, m: &ModelArgs) -> Result<(ReturnSeries, FitResult)> {
    let (spec, opts) = resolve_model(m)?;
    let returns = load_returns(path)?;
    let fit = estimator::fit(&spec, returns.values(), &opts)?;
    Ok((returns, fit))
}

fn fit_cmd(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let (returns, fit) = fit_returns(&a.returns, &a.model)?;
    let report = fit.report();
    match &a.out {
        Some(p) => fs::write(p, &report)?,
        None => out.write_all(report.as_bytes())?,
    }
    if let Some(p) = &a.table {
        fs::write(p, fit.table_csv()?)?;
    }
    if let Some(p) = &a.json {
        fs::write(p, serde_json::to_string_pretty(&fit)?)?;
    }
    if let Some(dir) = &a.plots {
        emit_plot_data(&fit, &returns, dir, 100)?;
    }
    Ok(())
}

fn simulate_cmd(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    require_file(&a.design)?;
    let (spec, truth) = mcs::parse_dgp(&fs::read_to_string(&a.design)?)?;
    let params = Layout::new(&spec)?.params(&truth)?;
    let mut rng = mcs::child_rng(a.seed, 0);
    let path = estimator::simulate(&params, a.n, a.burn, &mut rng)?;
    market_data::write_returns_file(&ReturnSeries::undated(path)?, &a.out)?;
    writeln!(out, "simulated = {}", a.n)?;
    Ok(())
}

fn mcs_cmd(a: McsArgs, out: &mut dyn Write) -> Result<()> {
    require_file(&a.design)?;
    let scale: Scale = a.scale.parse()?;
    let design = mcs::read_design(&a.design, scale)?;
    let report = mcs::run_study(&design, a.jobs)?;
    match &a.out {
        Some(p) => report.write_csv(fs::File::create(p)?)?,
        None => report.write_csv(&mut *out)?,
    }
    if let Some(p) = &a.failures {
        report.write_failures(fs::File::create(p)?)?;
    }
    Ok(())
}

/// Degrees of freedom removed from the SR and SSR weighted Ljung-Box tests.
fn fitdf(spec: &ModelSpec) -> (usize, usize) {
    let sr = spec.mean.ar + spec.mean.ma;
    let ssr = match spec.volatility {
        VolatilitySpec::Garch { p, q } | VolatilitySpec::Fgarch { p, q } => p + q,
        VolatilitySpec::Tgarch | VolatilitySpec::Cgarch | VolatilitySpec::Gas { .. } => 2,
        VolatilitySpec::Betaegarch { components } => 2 * components,
    };
    (sr, ssr)
}

fn diagnose_cmd(a: DiagnoseArgs, out: &mut dyn Write) -> Result<()> {
    let (z, (sr, ssr)) = if a.residuals {
        (load_returns(&a.input)?.values().to_vec(), (0, 0))
    } else {
        let (_, fit) = fit_returns(&a.input, &a.model)?;
        let df = fitdf(&fit.spec);
        (fit.residuals, df)
    };
    let results = diagnostics::diagnose(
        &z,
        &a.lags,
        &a.tests,
        a.fitdf_sr.unwrap_or(sr),
        a.fitdf_ssr.unwrap_or(ssr),
    )?;
    match &a.out {
        Some(p) => diagnostics::write_results(&results, fs::File::create(p)?)?,
        None => diagnostics::write_results(&results, &mut *out)?,
    }
    Ok(())
}

fn report_cmd(a: ReportArgs, out: &mut dyn Write) -> Result<()> {
    let (returns, fit) = fit_returns(&a.returns, &a.model)?;
    fs::create_dir_all(&a.out_dir)?;
    fs::write(a.out_dir.join("report.txt"), fit.report())?;
    fs::write(a.out_dir.join("coefficients.csv"), fit.table_csv()?)?;
    let (sr, ssr) = fitdf(&fit.spec);
    let results = diagnostics::diagnose(&fit.residuals, &a.lags, &[TestFamily::Wlb, TestFamily::ArchLm, TestFamily::Pq], sr, ssr)?;
    diagnostics::write_results(&results, fs::File::create(a.out_dir.join("diagnostics.csv"))?)?;
    let written = emit_plot_data(&fit, &returns, &a.out_dir, a.days)?;
    writeln!(out, "wrote report.txt, coefficients.csv, diagnostics.csv, {}", written.join(", "))?;
    Ok(())
}

/// Shock grid of `points` values spanning ±5 unconditional standard deviations.
fn shock_grid(sd: f64, points: usize) -> Vec<f64> {
    let half = (points / 2) as f64;
    (0..points).map(|i| 5.0 * sd * (i as f64 - half) / half).collect()
}

/// Next-period variance as a function of the current shock, with the state at
/// its unconditional level; `None` for models without a closed form.
pub fn news_impact(params: &ModelParams, points: usize) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    Ok(match params {
        ModelParams::Tgarch { vol, .. } => {
            let grid = shock_grid(fgarch::tgarch_unconditional_variance(vol)?.sqrt(), points);
            let v = fgarch::news_impact(vol, &grid)?;
            Some((grid, v))
        }
        ModelParams::Fgarch { vol, .. } => {
            let d = vol.density()?;
            let pers = fgarch::persistence_with(vol, &d)?;
            let rho = fgarch::rho_terms(vol, &d)?;
            let bar = vol.omega / (1.0 - pers);
            let sd = bar.powf(1.0 / vol.gamma);
            let grid = shock_grid(sd, points);
            let rest: f64 = (1..vol.alpha.len()).map(|j| vol.alpha[j] * rho[j] * bar).sum::<f64>()
                + vol.beta.iter().sum::<f64>() * bar;
            let v = grid
                .iter()
                .map(|e| {
                    let u = e / sd - vol.zeta2[0];
                    let g = u.abs() - vol.zeta1[0] * u;
                    let s = vol.omega + vol.alpha[0] * bar * g.powf(vol.gamma) + rest;
                    s.powf(2.0 / vol.gamma)
                })
                .collect();
            Some((grid, v))
        }
        ModelParams::Cgarch { vol, .. } => {
            let grid = shock_grid(vol.omega.sqrt(), points);
            let v = grid.iter().map(|e| vol.omega + vol.alpha * (e * e - vol.omega)).collect();
            Some((grid, v))
        }
        ModelParams::Beta { vol, .. } => {
            let grid = shock_grid(vol.omega.exp(), points);
            let mut v = Vec::with_capacity(points);
            for &e in &grid {
                let u = beta_egarch::conditional_score(e, vol.omega, vol.nu, vol.eta)?;
                let sign = if e < 0.0 {
                    1.0
                } else if e > 0.0 {
                    -1.0
                } else {
                    0.0
                };
                let lambda = vol.omega + (vol.kappa1 + vol.kappa2.unwrap_or(0.0)) * u + vol.kappa_star * sign * (u + 1.0);
                v.push((2.0 * lambda).exp());
            }
            Some((grid, v))
        }
        ModelParams::Gas(_) => None,
    })
}

/// Writes `decay.csv` (day,value), `news_impact.csv` (eps,sigma2) when the
/// model has one, and `conditional_sd.csv` (date,sigma). Returns the file names.
pub fn emit_plot_data(fit: &FitResult, returns: &ReturnSeries, dir: &Path, days: usize) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if let Some(p) = fit.persistence.first() {
        let mut w = csv::Writer::from_path(dir.join("decay.csv"))?;
        w.write_record(["day", "value"])?;
        for (d, v) in fgarch::decay_curve(p.value, days).iter().enumerate() {
            w.write_record([(d + 1).to_string(), format!("{v:.8}")])?;
        }
        w.flush()?;
        written.push("decay.csv".to_string());
    }
    let params = Layout::new(&fit.spec)?.params(&fit.params)?;
    if let Some((grid, v)) = news_impact(&params, 201)? {
        let mut w = csv::Writer::from_path(dir.join("news_impact.csv"))?;
        w.write_record(["eps", "sigma2"])?;
        for (e, s) in grid.iter().zip(&v) {
            w.write_record([format!("{e:.8}"), format!("{s:.8}")])?;
        }
        w.flush()?;
        written.push("news_impact.csv".to_string());
    }
    let mut w = csv::Writer::from_path(dir.join("conditional_sd.csv"))?;
    w.write_record(["date", "sigma"])?;
    for (i, s) in fit.sigma.iter().enumerate() {
        let d = match returns.dates().get(i) {
            Some(d) => d.format("%Y-%m-%d").to_string(),
            None => (i + 1).to_string(),
        };
        w.write_record([d, format!("{s:.8}")])?;
    }
    w.flush()?;
    written.push("conditional_sd.csv".to_string());
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("vollab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn ingest_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let prices = dir.path().join("prices.csv");
        let returns = dir.path().join("returns.csv");
        fs::write(&prices, "date,close\n2020-01-02,100\n2020-01-03,101\n2020-01-06,99.5\n").unwrap();
        let (code, out, _) = run_capture(&["ingest", "--in", prices.to_str().unwrap(), "--out", returns.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.contains("observations = 2"));
        let r = market_data::read_returns_file(&returns).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["fit", "/nonexistent/returns.csv"]).0, 2);
        let dir = tempfile::tempdir().unwrap();
        let r = dir.path().join("r.csv");
        fs::write(&r, "date,return_pct\n1,0.1\n2,-0.2\n3,0.3\n").unwrap();
        assert_eq!(run_capture(&["fit", r.to_str().unwrap(), "--model", "nope"]).0, 2);
        assert_eq!(run_capture(&["fit", r.to_str().unwrap()]).0, 2);
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn tgarch_news_impact_symmetric_without_leverage() {
        let vol = fgarch::TGarchParams {
            omega: 0.05,
            alpha: 0.1,
            beta: 0.85,
            leverage: 0.0,
            innovation: crate::innovations::InnovationSpec::normal(),
        };
        let p = ModelParams::Tgarch {
            mean: crate::mean_filter::ArmaParams::default(),
            vol,
        };
        let (grid, v) = news_impact(&p, 201).unwrap().unwrap();
        for i in 0..grid.len() {
            assert!((grid[i] + grid[grid.len() - 1 - i]).abs() < 1e-12);
            assert!((v[i] - v[grid.len() - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_row_27() {
        let d = fgarch::decay_curve(0.9749, 30);
        assert!((d[26] - 0.504).abs() < 1e-3);
    }
}
