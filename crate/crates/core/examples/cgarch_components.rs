//! Component GARCH: permanent and transitory variance components.

use vollab::cgarch::{self, CGarchParams};
use vollab::innovations::InnovationSpec;

fn main() -> vollab::Result<()> {
    let p = CGarchParams {
        omega: 1.2,
        rho: 0.995,
        phi: 0.02,
        alpha: 0.08,
        beta: 0.85,
        innovation: InnovationSpec::student_t(6.0)?,
    };
    p.validate()?;
    let (permanent, transitory) = cgarch::component_persistence(&p);
    println!("permanent persistence rho = {permanent:.4}, transitory alpha + beta = {transitory:.4}");

    let sim = cgarch::simulate(&p, 5_000, 1_000, 3)?;
    let path = cgarch::filter_components(&sim.eps, &p)?;
    let n = path.m.len() as f64;
    println!("mean permanent component = {:.4}", path.m.iter().sum::<f64>() / n);
    println!("mean transitory component = {:.4}", path.q.iter().sum::<f64>() / n);
    println!("last conditional sd = {:.4}", path.sigma().last().copied().unwrap_or(f64::NAN));
    Ok(())
}
