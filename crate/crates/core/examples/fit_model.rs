//! Maximum-likelihood fit of an fGARCH-t model to simulated returns.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vollab::estimator::{self, FitOptions, Layout, ModelSpec};
use vollab::innovations::Family;

fn main() -> vollab::Result<()> {
    let truth = ModelSpec::garch(Family::Std);
    let layout = Layout::new(&truth)?;
    println!("parameters: {}", layout.names.join(", "));
    let params = layout.params(&[0.05, 0.05, 0.09, 0.88, 5.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let data = estimator::simulate(&params, 4_000, 1_000, &mut rng)?;

    let opts = FitOptions {
        robust_se: true,
        ..FitOptions::default()
    };
    let fit = estimator::fit(&ModelSpec::garch(Family::Std), &data, &opts)?;
    print!("{}", fit.report());
    let ab = fit.target("alpha+beta")?;
    println!("alpha + beta = {:.4} (robust se {:.4})", ab.value, ab.se_robust.unwrap_or(f64::NAN));
    Ok(())
}
