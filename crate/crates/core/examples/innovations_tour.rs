//! Standardized innovation densities: moments, skewing, sampling and scores.

use vollab::innovations::{fs_skew, Family, InnovationSpec, ScoreParam, StandardizedDensity};

fn main() -> vollab::Result<()> {
    for fam in [Family::Norm, Family::Std, Family::Ged, Family::Nig, Family::Jsu, Family::Ald] {
        let d = StandardizedDensity::new(InnovationSpec::default_for(fam))?;
        let mass = d.expect(|_| 1.0, &[], 1e-10)?;
        let var = d.expect(|z| z * z, &[], 1e-10)?;
        let kurt = d.expect(|z| z.powi(4), &[], 1e-10)?;
        println!("{fam:>5}: mass {mass:.8}  mean {:+.2e}  var {var:.8}  E[z^4] {kurt:.3}", d.mean());
    }

    let t = StandardizedDensity::new(InnovationSpec::student_t(6.21)?)?;
    let left = fs_skew(&t, 0.87)?;
    println!("skew-t(eta=0.87): pdf(-3) = {:.5}  pdf(3) = {:.5}", left.pdf(-3.0)?, left.pdf(3.0)?);

    let draws = t.sample(100_000, 7)?;
    let m2 = draws.iter().map(|z| z * z).sum::<f64>() / draws.len() as f64;
    println!("t(6.21) sample variance from 1e5 draws: {m2:.4}");
    println!("score d ln f / d log-scale at z = 2: {:.5}", t.score(2.0, ScoreParam::LogScale)?);
    Ok(())
}
