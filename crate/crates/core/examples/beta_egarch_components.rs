//! Beta-Skew-t-EGARCH: half-lives, shock shares, simulation and filtering.

use vollab::beta_egarch::{self, BetaEgarchParams};

fn main() -> vollab::Result<()> {
    let two = BetaEgarchParams::two(0.0529, 0.9988, 0.9550, 0.0076, 0.0301, 0.0379, 6.3534, 0.8742);
    two.validate()?;
    println!("half-lives = {:?}", two.half_lives());
    if let Some((long, short)) = beta_egarch::shock_response_shares(&two) {
        println!("shock shares: long-run {:.1}%, short-run {:.1}%", 100.0 * long, 100.0 * short);
    }

    let one = BetaEgarchParams::one(0.0142, 0.9721, 0.0402, 0.0337, 6.2102, 0.8709);
    let sim = beta_egarch::simulate_beta(&one, 5_000, 1_000, 12345)?;
    let path = beta_egarch::filter(&sim.r, &one)?;
    let sigma = path.sigma();
    println!("log-likelihood = {:.2}", path.loglik_total());
    println!("mean conditional scale = {:.4}", sigma.iter().sum::<f64>() / sigma.len() as f64);
    println!("score at r = -2, lambda = 0: {:.5}", beta_egarch::conditional_score(-2.0, 0.0, 6.2102, 0.8709)?);
    Ok(())
}
