//! Score-driven (GAS) scale filter: update equation, simulation and martingale check.

use vollab::gas::{self, GasParams};
use vollab::innovations::InnovationSpec;

fn main() -> vollab::Result<()> {
    let p = GasParams::scale_only(0.8867, 0.2061, 0.9739, 0.0, InnovationSpec::student_t(4.1)?);
    println!("{}", p.scale_update());
    println!("scale persistence b_sigma = {:.4}", p.scale_persistence());

    let sim = gas::gas_simulate(&p, 10_000, 1_000, 11)?;
    let path = gas::gas_filter(&sim.r, &p)?;
    println!("log-likelihood of the simulated path = {:.2}", path.loglik_total());

    let check = gas::scaled_score_md_check(&p, 200_000, 5)?;
    println!(
        "scaled score mean |E[s]| = {:.2e} (se {:.2e}), within 3 se: {}",
        check.abs_mean[1],
        check.se[1],
        check.within(3.0)
    );
    Ok(())
}
