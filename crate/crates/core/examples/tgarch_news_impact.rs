//! TGARCH leverage: news impact curve and the equivalent fGARCH rotation.

use vollab::fgarch::{self, TGarchParams};
use vollab::innovations::{Family, InnovationSpec};

fn main() -> vollab::Result<()> {
    let t = TGarchParams {
        omega: 0.02,
        alpha: 0.03,
        beta: 0.88,
        leverage: 0.12,
        innovation: InnovationSpec::default_for(Family::Nig),
    };
    println!("bad-news slope alpha + leverage = {:.4}", t.bad_news_coefficient());
    println!("persistence = {:.4}", fgarch::tgarch_persistence(&t)?);
    let f = t.to_fgarch()?;
    println!("as fGARCH: alpha = {:.4}, zeta1 = {:.4}", f.alpha[0], f.zeta1[0]);

    let grid: Vec<f64> = (-4..=4).map(|i| i as f64).collect();
    let nic = fgarch::news_impact(&t, &grid)?;
    println!("{:>6} {:>10}", "eps", "sigma2");
    for (e, v) in grid.iter().zip(&nic) {
        println!("{e:>6.1} {v:>10.4}");
    }
    Ok(())
}
