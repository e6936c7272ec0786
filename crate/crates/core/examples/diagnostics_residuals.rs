//! Residual diagnostics before and after a volatility fit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vollab::diagnostics::{self, TestFamily};
use vollab::estimator::{self, FitOptions, Layout, ModelSpec};
use vollab::innovations::Family;

fn main() -> vollab::Result<()> {
    let spec = ModelSpec::garch(Family::Norm);
    let params = Layout::new(&spec)?.params(&[0.0, 0.05, 0.1, 0.85])?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let r = estimator::simulate(&params, 3_000, 500, &mut rng)?;

    let tests = [TestFamily::Wlb, TestFamily::ArchLm, TestFamily::Pq];
    println!("raw returns:");
    let raw = diagnostics::diagnose(&r, &[5, 10], &tests, 0, 0)?;
    diagnostics::write_results(&raw, std::io::stdout())?;

    let fit = estimator::fit(&spec, &r, &FitOptions::default())?;
    println!("standardized residuals:");
    let res = diagnostics::diagnose(&fit.residuals, &[5, 10], &tests, 0, 2)?;
    diagnostics::write_results(&res, std::io::stdout())?;
    Ok(())
}
