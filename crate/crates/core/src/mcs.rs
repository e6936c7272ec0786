//! Monte Carlo simulation studies: DGP execution with burn-in, replication
//! management and meta-statistics.
//!
//! Each replication simulates one path of `n_total` observations; sample size
//! `N_i` keeps the observations after discarding the first `burn_ins[i]`. Every
//! assumed innovation is fitted to every trimmed sample and the target estimand
//! is extracted. Per (innovation, N) cell the report holds the mean estimate,
//! `bias = mean − truth`, the mean robust standard error, the Monte Carlo
//! standard deviation of the estimates and the true parameter recovery
//! `TPR = K − ((ϑ − ϑ̂)/ϑ)·K` evaluated at the mean estimate.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{self, FitOptions, Layout, MeanSpec, ModelSpec, VolatilitySpec};
use crate::innovations::Family;

/// Largest tolerated share of failed fits per cell.
pub const MAX_FAILURE_SHARE: f64 = 0.2;

/// True parameter recovery in percent.
pub fn tpr(truth: f64, estimate: f64, k: f64) -> Result<f64> {
    if !(truth > 0.0) {
        return Err(Error::InvalidInput(format!("TPR needs a positive true value, got {truth}")));
    }
    Ok(k - (truth - estimate) / truth * k)
}

pub fn bias(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidInput("bias of an empty estimate list".into()));
    }
    Ok(estimates.iter().sum::<f64>() / estimates.len() as f64 - truth)
}

/// Generator of replication `index`: one ChaCha8 stream per replication.
pub fn child_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsDesign {
    pub dgp: ModelSpec,
    /// True parameters in the layout order of `dgp`.
    pub truth: Vec<f64>,
    pub seed: u64,
    pub n_total: usize,
    pub burn_ins: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub assumed_innovations: Vec<Family>,
    /// Fitted volatility and mean equations; the innovation varies over `assumed_innovations`.
    pub fit_volatility: VolatilitySpec,
    pub fit_mean: MeanSpec,
    pub target: String,
    /// True value of the target; derived from `truth` when `None`.
    pub target_truth: Option<f64>,
    pub k: f64,
    pub fit: FitOptions,
}

impl McsDesign {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.replications == 0 {
            return cfg("replications must be at least 1".into());
        }
        if self.sample_sizes.is_empty() {
            return cfg("at least one sample size is required".into());
        }
        if self.burn_ins.len() != self.sample_sizes.len() {
            return cfg(format!(
                "{} burn-ins for {} sample sizes",
                self.burn_ins.len(),
                self.sample_sizes.len()
            ));
        }
        for (b, n) in self.burn_ins.iter().zip(&self.sample_sizes) {
            if b + n != self.n_total {
                return cfg(format!("burn-in {b} plus sample size {n} differs from n_total {}", self.n_total));
            }
        }
        if self.assumed_innovations.is_empty() {
            return cfg("at least one assumed innovation is required".into());
        }
        if !(0.0..=100.0).contains(&self.k) {
            return cfg(format!("K must lie in [0, 100], got {}", self.k));
        }
        let layout = Layout::new(&self.dgp)?;
        if self.truth.len() != layout.dim() {
            return cfg(format!("expected {} true parameters, got {}", layout.dim(), self.truth.len()));
        }
        layout.params(&self.truth)?;
        for fam in &self.assumed_innovations {
            let spec = self.fit_spec(*fam);
            let l = Layout::new(&spec)?;
            for term in self.target.split('+').map(str::trim) {
                if l.resolve_term(term).is_none() {
                    return cfg(format!("target term `{term}` matches no parameter of the {fam} fit"));
                }
            }
        }
        self.truth_value()?;
        Ok(())
    }

    pub fn fit_spec(&self, innovation: Family) -> ModelSpec {
        ModelSpec {
            volatility: self.fit_volatility.clone(),
            innovation,
            mean: self.fit_mean,
        }
    }

    /// True value of the target estimand.
    pub fn truth_value(&self) -> Result<f64> {
        if let Some(t) = self.target_truth {
            return Ok(t);
        }
        let layout = Layout::new(&self.dgp)?;
        let mut sum = 0.0;
        for term in self.target.split('+').map(str::trim) {
            let idx = layout.resolve_term(term).ok_or_else(|| {
                Error::Config(format!("target term `{term}` is not a DGP parameter; set `truth` explicitly"))
            })?;
            sum += idx.iter().map(|&i| self.truth[i]).sum::<f64>();
        }
        Ok(sum)
    }
}

/// Study size presets selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// The `[study]` values as written.
    Base,
    /// `[study]` overridden by `[study.desk]`.
    Desk,
    /// `[study]` overridden by `[study.full]` when present.
    Full,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "base" => Ok(Scale::Base),
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(Error::Config(format!("unknown scale `{other}`"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DgpSection {
    volatility: VolatilitySpec,
    innovation: Family,
    mean: Option<MeanSpec>,
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Preset {
    n_total: Option<usize>,
    burn_ins: Option<Vec<usize>>,
    sample_sizes: Option<Vec<usize>>,
    replications: Option<usize>,
    assumed: Option<Vec<Family>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudySection {
    seed: u64,
    n_total: usize,
    burn_ins: Option<Vec<usize>>,
    sample_sizes: Vec<usize>,
    replications: usize,
    target: String,
    truth: Option<f64>,
    #[serde(default = "default_k")]
    k: f64,
    #[serde(default = "default_starts")]
    starts: usize,
    fit: Option<VolatilitySpec>,
    fit_mean: Option<MeanSpec>,
    desk: Option<Preset>,
    full: Option<Preset>,
}

fn default_k() -> f64 {
    95.0
}

fn default_starts() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InnovationsSection {
    assumed: Vec<Family>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFile {
    dgp: DgpSection,
    study: StudySection,
    innovations: InnovationsSection,
}

fn dgp_from_section(section: DgpSection) -> Result<(ModelSpec, Vec<f64>)> {
    let mut dgp = ModelSpec::new(section.volatility, section.innovation);
    if let Some(m) = section.mean {
        dgp = dgp.with_mean(m);
    }
    let layout = Layout::new(&dgp).map_err(|e| Error::Config(e.to_string()))?;
    let mut params = section.params;
    let mut truth = Vec::with_capacity(layout.dim());
    for name in &layout.names {
        let bare = name.strip_prefix("dist_").unwrap_or(name);
        let v = params
            .remove(name)
            .or_else(|| params.remove(bare))
            .ok_or_else(|| Error::Config(format!("dgp.params is missing `{name}`")))?;
        truth.push(v);
    }
    if let Some(extra) = params.keys().next() {
        return Err(Error::Config(format!(
            "dgp.params has unknown parameter `{extra}` (expected {})",
            layout.names.join(", ")
        )));
    }
    layout.params(&truth).map_err(|e| Error::Config(e.to_string()))?;
    Ok((dgp, truth))
}

#[derive(Debug, Deserialize)]
struct DgpOnly {
    dgp: DgpSection,
}

/// Parses the `[dgp]` section of a design; other sections are ignored.
pub fn parse_dgp(text: &str) -> Result<(ModelSpec, Vec<f64>)> {
    let file: DgpOnly = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    dgp_from_section(file.dgp)
}

/// Parses a TOML design with sections `dgp`, `study` and `innovations`.
pub fn parse_design(text: &str, scale: Scale) -> Result<McsDesign> {
    let file: DesignFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let (dgp, truth) = dgp_from_section(file.dgp)?;
    let s = file.study;
    let preset = match scale {
        Scale::Base => Preset::default(),
        Scale::Desk => s
            .desk
            .clone()
            .ok_or_else(|| Error::Config("design has no [study.desk] preset".into()))?,
        Scale::Full => s.full.clone().unwrap_or_default(),
    };
    let resized = preset.n_total.is_some() || preset.sample_sizes.is_some();
    let n_total = preset.n_total.unwrap_or(s.n_total);
    let sample_sizes = preset.sample_sizes.unwrap_or(s.sample_sizes);
    let base_burn = if resized { None } else { s.burn_ins };
    let burn_ins = match preset.burn_ins.or(base_burn) {
        Some(b) => b,
        None => sample_sizes.iter().map(|n| n_total.saturating_sub(*n)).collect(),
    };
    let fit_volatility = s.fit.unwrap_or_else(|| dgp.volatility.clone());
    let fit_mean = s
        .fit_mean
        .unwrap_or_else(|| ModelSpec::new(fit_volatility.clone(), Family::Norm).mean);
    let design = McsDesign {
        truth,
        seed: s.seed,
        n_total,
        burn_ins,
        sample_sizes,
        replications: preset.replications.unwrap_or(s.replications),
        assumed_innovations: preset.assumed.unwrap_or(file.innovations.assumed),
        fit_volatility,
        fit_mean,
        target: s.target,
        target_truth: s.truth,
        k: s.k,
        fit: FitOptions {
            starts: s.starts.max(1),
            ..FitOptions::default()
        },
        dgp,
    };
    design.validate().map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(other.to_string()),
    })?;
    Ok(design)
}

pub fn read_design(path: &Path, scale: Scale) -> Result<McsDesign> {
    let text = std::fs::read_to_string(path)?;
    parse_design(&text, scale)
}

/// One fit that produced no usable estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub replication: usize,
    pub innovation: Family,
    pub n: usize,
    pub error: String,
}

/// Aggregates of one (innovation, N) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsRow {
    pub innovation: Family,
    pub n: usize,
    pub successes: usize,
    pub failures: usize,
    pub mean_estimate: f64,
    pub bias: f64,
    /// Mean robust standard error across replications.
    pub se: f64,
    /// Standard deviation of the estimates across replications.
    pub mc_sd: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsReport {
    pub target: String,
    pub truth: f64,
    pub k: f64,
    pub replications: usize,
    pub rows: Vec<McsRow>,
    pub failures: Vec<FailureRecord>,
}

impl McsReport {
    pub fn row(&self, innovation: Family, n: usize) -> Option<&McsRow> {
        self.rows.iter().find(|r| r.innovation == innovation && r.n == n)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "innovation",
            "n",
            "target",
            "truth",
            "estimate",
            "bias",
            "se",
            "mc_sd",
            "tpr",
            "successes",
            "failures",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.innovation.code().to_string(),
                r.n.to_string(),
                self.target.clone(),
                format!("{:.6}", self.truth),
                format!("{:.6}", r.mean_estimate),
                format!("{:.6}", r.bias),
                format!("{:.6}", r.se),
                format!("{:.6}", r.mc_sd),
                format!("{:.4}", r.tpr),
                r.successes.to_string(),
                r.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_failures<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["replication", "innovation", "n", "error"])?;
        for f in &self.failures {
            w.write_record([f.replication.to_string(), f.innovation.code().to_string(), f.n.to_string(), f.error.clone()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Starts used to refit a replication whose first fit did not converge.
pub const RETRY_STARTS: usize = 5;

/// Result of one fit within a replication.
type Outcome = std::result::Result<(f64, f64), String>;

fn replicate(d: &McsDesign, index: usize) -> Result<Vec<Outcome>> {
    let mut rng = child_rng(d.seed, index);
    let fit_seed: u64 = rng.random();
    let params = Layout::new(&d.dgp)?.params(&d.truth)?;
    let path = estimator::simulate(&params, d.n_total, 0, &mut rng)?;
    let mut out = Vec::with_capacity(d.assumed_innovations.len() * d.sample_sizes.len());
    for fam in &d.assumed_innovations {
        let spec = d.fit_spec(*fam);
        for &burn in &d.burn_ins {
            let sample = &path[burn..];
            let opts = FitOptions {
                seed: fit_seed,
                robust_se: true,
                ..d.fit.clone()
            };
            let outcome = estimator::fit(&spec, sample, &opts)
                .and_then(|f| {
                    if f.convergence.converged || opts.starts >= RETRY_STARTS {
                        return Ok(f);
                    }
                    log::info!("replication {index}: {fam} fit did not converge, retrying with {RETRY_STARTS} starts");
                    estimator::fit(&spec, sample, &FitOptions { starts: RETRY_STARTS, ..opts.clone() })
                })
                .map_err(|e| e.to_string())
                .and_then(|f| {
                    if !f.convergence.converged {
                        return Err(format!("did not converge (gradient norm {:.3e})", f.convergence.grad_norm));
                    }
                    let t = f.target(&d.target).map_err(|e| e.to_string())?;
                    match t.se_robust {
                        Some(se) if t.value.is_finite() && se.is_finite() => Ok((t.value, se)),
                        _ => Err(f.se_error.unwrap_or_else(|| "robust standard error unavailable".into())),
                    }
                });
            out.push(outcome);
        }
    }
    log::info!("replication {index} done");
    Ok(out)
}

/// Runs a study; `jobs` worker threads (all cores when `None`). The report is
/// identical for any thread count.
pub fn run_study(d: &McsDesign, jobs: Option<usize>) -> Result<McsReport> {
    d.validate()?;
    let truth = d.truth_value()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Vec<Outcome>> = pool.install(|| {
        (0..d.replications)
            .into_par_iter()
            .map(|i| replicate(d, i))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let cells = d
        .assumed_innovations
        .iter()
        .flat_map(|f| d.sample_sizes.iter().map(move |n| (*f, *n)));
    for (c, (fam, n)) in cells.enumerate() {
        let mut est = Vec::new();
        let mut ses = Vec::new();
        for (rep, o) in outcomes.iter().enumerate() {
            match &o[c] {
                Ok((v, se)) => {
                    est.push(*v);
                    ses.push(*se);
                }
                Err(msg) => failures.push(FailureRecord {
                    replication: rep,
                    innovation: fam,
                    n,
                    error: msg.clone(),
                }),
            }
        }
        let failed = d.replications - est.len();
        if failed as f64 > MAX_FAILURE_SHARE * d.replications as f64 || est.is_empty() {
            return Err(Error::TooManyFailures {
                failures: failed,
                replications: d.replications,
            });
        }
        let m = est.len() as f64;
        let mean = est.iter().sum::<f64>() / m;
        let mc_sd = if est.len() > 1 {
            (est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        } else {
            0.0
        };
        rows.push(McsRow {
            innovation: fam,
            n,
            successes: est.len(),
            failures: failed,
            mean_estimate: mean,
            bias: bias(&est, truth)?,
            se: ses.iter().sum::<f64>() / m,
            mc_sd,
            tpr: tpr(truth, mean, d.k)?,
        });
    }
    Ok(McsReport {
        target: d.target.clone(),
        truth,
        k: d.k,
        replications: d.replications,
        rows,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DESIGN: &str = r#"
[dgp]
volatility = { model = "garch" }
innovation = "norm"
[dgp.params]
mu = 0.0
omega = 0.1
alpha1 = 0.1
beta1 = 0.8

[study]
seed = 7
n_total = 1400
sample_sizes = [800, 1200]
replications = 3
target = "alpha+beta"

[study.desk]
replications = 2

[innovations]
assumed = ["norm"]
"#;

    #[test]
    fn tpr_examples() {
        assert_eq!(tpr(0.5, 0.5, 95.0).unwrap(), 95.0);
        assert!((tpr(0.9739, 0.9327, 95.0).unwrap() - 90.98).abs() < 0.01);
        assert!((tpr(0.9739, 0.9428, 95.0).unwrap() - 91.97).abs() < 0.01);
        assert!(tpr(0.0, 0.1, 95.0).is_err());
        assert_eq!(tpr(0.3, 0.0, 80.0).unwrap(), 0.0);
    }

    #[test]
    fn bias_examples() {
        assert_eq!(bias(&[0.4, 0.4], 0.4).unwrap(), 0.0);
        assert!((bias(&[0.9008], 0.8999).unwrap() - 0.0009).abs() < 1e-12);
        assert!(bias(&[], 1.0).is_err());
    }

    #[test]
    fn design_parsing() {
        let d = parse_design(DESIGN, Scale::Base).unwrap();
        assert_eq!(d.burn_ins, vec![600, 200]);
        assert_eq!(d.replications, 3);
        assert!((d.truth_value().unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(parse_design(DESIGN, Scale::Desk).unwrap().replications, 2);
        assert_eq!(parse_design(DESIGN, Scale::Full).unwrap().replications, 3);
        let bad = DESIGN.replace("beta1 = 0.8", "beta1 = 0.8\ngamma = 1.0");
        assert!(matches!(parse_design(&bad, Scale::Base), Err(Error::Config(_))));
        let bad = DESIGN.replace("replications = 3", "replications = 0");
        assert!(matches!(parse_design(&bad, Scale::Base), Err(Error::Config(_))));
        let bad = DESIGN.replace("sample_sizes = [800, 1200]", "sample_sizes = [800, 1200]\nburn_ins = [1, 2]");
        assert!(matches!(parse_design(&bad, Scale::Base), Err(Error::Config(_))));
    }

    #[test]
    fn child_seeds_differ_and_repeat() {
        let a: u64 = child_rng(1, 0).random();
        let b: u64 = child_rng(1, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, child_rng(1, 0).random::<u64>());
    }

    #[test]
    fn single_replication_equals_single_fit() {
        let mut d = parse_design(DESIGN, Scale::Base).unwrap();
        d.replications = 1;
        let report = run_study(&d, Some(1)).unwrap();
        let mut rng = child_rng(d.seed, 0);
        let fit_seed: u64 = rng.random();
        let params = Layout::new(&d.dgp).unwrap().params(&d.truth).unwrap();
        let path = estimator::simulate(&params, d.n_total, 0, &mut rng).unwrap();
        let opts = FitOptions {
            seed: fit_seed,
            ..d.fit.clone()
        };
        let fit = estimator::fit(&d.fit_spec(Family::Norm), &path[600..], &opts).unwrap();
        let t = fit.target("alpha+beta").unwrap();
        let row = report.row(Family::Norm, 800).unwrap();
        assert_eq!(row.mean_estimate, t.value);
        assert_eq!(row.se, t.se_robust.unwrap());
        assert_eq!(row.mc_sd, 0.0);
        assert!((row.bias - (t.value - 0.9)).abs() < 1e-15);
    }

    #[test]
    fn deterministic_across_jobs() {
        let d = parse_design(DESIGN, Scale::Base).unwrap();
        let a = run_study(&d, Some(1)).unwrap();
        let b = run_study(&d, Some(3)).unwrap();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
    }

    proptest! {
        #[test]
        fn tpr_is_linear(truth in 0.01f64..5.0, a in -2.0f64..2.0, b in -2.0f64..2.0, k in 0.0f64..100.0) {
            let mid = tpr(truth, 0.5 * (a + b), k).unwrap();
            let avg = 0.5 * (tpr(truth, a, k).unwrap() + tpr(truth, b, k).unwrap());
            prop_assert!((mid - avg).abs() < 1e-9 * (1.0 + mid.abs()));
        }

        #[test]
        fn constant_estimator_bias(c in -3.0f64..3.0, truth in -3.0f64..3.0, n in 1usize..20) {
            let est = vec![c; n];
            prop_assert!((bias(&est, truth).unwrap() - (c - truth)).abs() < 1e-12);
        }
    }
}
