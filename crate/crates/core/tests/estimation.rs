use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vollab::estimator::{self, loglik_at, FitOptions, Layout, ModelSpec};
use vollab::innovations::{Family, StandardizedDensity};
use vollab::mcs::{self, Scale};

fn one_start(seed: u64) -> FitOptions {
    FitOptions {
        starts: 1,
        seed,
        ..FitOptions::default()
    }
}

fn design_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("designs").join(name)
}

fn simulate_design(name: &str, n: usize, burn: usize, seed: u64) -> (ModelSpec, Vec<f64>) {
    let (spec, truth) = mcs::parse_dgp(&std::fs::read_to_string(design_path(name)).unwrap()).unwrap();
    let params = Layout::new(&spec).unwrap().params(&truth).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (spec, estimator::simulate(&params, n, burn, &mut rng).unwrap())
}

fn garch_path(family: Family, shape: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let spec = ModelSpec::garch(family);
    let mut x = vec![0.0, 0.05, 0.1, 0.85];
    x.extend_from_slice(shape);
    let params = Layout::new(&spec).unwrap().params(&x).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    estimator::simulate(&params, n, 1000, &mut rng).unwrap()
}

#[test]
fn fgarch_t_recovers_table1_persistence() {
    let (spec, data) = simulate_design("table1.toml", 15_000, 7_000, 1);
    let fit = estimator::fit(&spec, &data, &one_start(1)).unwrap();
    let ab = fit.target("alpha+beta").unwrap().value;
    assert!((ab - 0.8999).abs() < 0.02, "alpha+beta = {ab}");
}

#[test]
fn gas_t_recovers_table3_persistence() {
    let (spec, data) = simulate_design("table3.toml", 24_000, 11_000, 2);
    let fit = estimator::fit(&spec, &data, &one_start(2)).unwrap();
    let b = fit.param("b_sigma").unwrap();
    assert!((b - 0.9690).abs() < 0.01, "b_sigma = {b}");
}

#[test]
fn iid_normal_gives_negligible_arch_response() {
    let mut small = 0;
    for seed in 0..20u64 {
        let x = StandardizedDensity::normal().sample(2000, seed).unwrap();
        let fit = estimator::fit(&ModelSpec::garch(Family::Norm), &x, &FitOptions { seed, ..FitOptions::default() }).unwrap();
        if fit.param("alpha1").unwrap() < 0.1 {
            small += 1;
        }
    }
    assert!(small >= 18, "{small} of 20");
}

#[test]
fn robust_and_plain_agree_when_correctly_specified() {
    let data = garch_path(Family::Norm, &[], 10_000, 3);
    let fit = estimator::fit(&ModelSpec::garch(Family::Norm), &data, &one_start(3)).unwrap();
    let plain = fit.se_plain.as_ref().unwrap();
    let robust = fit.se_robust.as_ref().unwrap();
    for (name, (p, r)) in fit.names.iter().zip(plain.iter().zip(robust)) {
        assert!((r / p - 1.0).abs() < 0.15, "{name}: plain {p} robust {r}");
    }
}

#[test]
fn robust_exceeds_plain_under_misspecification() {
    let mut larger = 0;
    for seed in 0..20u64 {
        let data = garch_path(Family::Std, &[4.1], 3000, 100 + seed);
        let fit = estimator::fit(&ModelSpec::garch(Family::Norm), &data, &one_start(seed)).unwrap();
        let t = fit.target("alpha+beta").unwrap();
        if t.se_robust.unwrap() >= t.se_plain.unwrap() {
            larger += 1;
        }
    }
    assert!(larger >= 16, "{larger} of 20");
}

#[test]
fn se_decreases_along_sample_ladder() {
    let data = garch_path(Family::Std, &[5.0], 16_000, 4);
    let spec = ModelSpec::garch(Family::Std);
    let ses: Vec<f64> = [14_000, 15_000, 16_000]
        .iter()
        .map(|&n| {
            let fit = estimator::fit(&spec, &data[16_000 - n..], &one_start(4)).unwrap();
            fit.target("alpha+beta").unwrap().se_robust.unwrap()
        })
        .collect();
    assert!(ses[0] > ses[1] && ses[1] > ses[2], "{ses:?}");
}

#[test]
fn bic_prefers_true_family() {
    let mut hits = 0;
    for seed in 0..20u64 {
        let data = garch_path(Family::Std, &[4.1], 2000, 200 + seed);
        let bic = |fam| estimator::fit(&ModelSpec::garch(fam), &data, &one_start(seed)).unwrap().criteria.bic;
        if bic(Family::Std) < bic(Family::Norm) {
            hits += 1;
        }
    }
    assert!(hits >= 12, "{hits} of 20");
}

#[test]
fn likelihood_invariant_to_coordinates_and_reproducible() {
    let data = garch_path(Family::Std, &[6.0], 2000, 5);
    let spec = ModelSpec::garch(Family::Std);
    let a = estimator::fit(&spec, &data, &FitOptions::default()).unwrap();
    let b = estimator::fit(&spec, &data, &FitOptions::default()).unwrap();
    assert_eq!(a, b);
    let direct = loglik_at(&spec, &data, &a.params).unwrap();
    assert!((direct - a.loglik).abs() < 1e-6);
}

#[test]
fn desk_designs_parse() {
    for (name, scale) in [
        ("table1.toml", Scale::Desk),
        ("table1.toml", Scale::Full),
        ("table3.toml", Scale::Desk),
        ("table3.toml", Scale::Full),
        ("beta_egarch_one.toml", Scale::Base),
        ("beta_egarch_two.toml", Scale::Base),
    ] {
        let d = mcs::read_design(&design_path(name), scale).unwrap();
        assert!(d.truth_value().unwrap() > 0.0);
    }
    let d = mcs::read_design(&design_path("table1.toml"), Scale::Full).unwrap();
    assert_eq!(d.sample_sizes, vec![14_000, 15_000, 16_000]);
    assert_eq!(d.assumed_innovations.len(), 10);
    assert!((d.truth_value().unwrap() - 0.8999).abs() < 1e-12);
}
