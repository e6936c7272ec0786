//! fGARCH persistence, half-life, unconditional variance and decay curve.

use vollab::fgarch::{self, FGarchParams};
use vollab::innovations::{Family, InnovationSpec};

fn main() -> vollab::Result<()> {
    let nig = InnovationSpec::default_for(Family::Nig);
    let p = FGarchParams {
        omega: 0.0443,
        alpha: vec![0.0900],
        beta: vec![0.8113],
        gamma: 1.9993,
        zeta1: vec![-0.1919],
        zeta2: vec![1.3191],
        innovation: nig,
    };
    let pers = fgarch::persistence(&p)?;
    println!("persistence = {pers:.4}");
    println!("half-life = {:.2} days", fgarch::half_life(pers)?);
    println!("unconditional variance = {:.4}", fgarch::unconditional_variance(&p)?);
    println!("rho terms = {:?}", fgarch::rho_terms(&p, &p.density()?)?);

    let printed = fgarch::unconditional_variance_from(0.0443, 0.9749, 1.9993)?;
    println!("variance at the printed persistence 0.9749 = {printed:.4}");
    for (d, v) in fgarch::decay_curve(0.9749, 30).iter().enumerate().skip(24) {
        println!("day {:>2}: {v:.4}", d + 1);
    }

    let sim = fgarch::simulate(&p, 20_000, 2_000, 42)?;
    let n = sim.eps.len() as f64;
    let var = sim.eps.iter().map(|e| e * e).sum::<f64>() / n;
    println!("sample variance of 20,000 simulated residuals = {var:.4}");
    Ok(())
}
