//! Monte Carlo oracles for the Brownian and Ornstein-Uhlenbeck functionals.

use ivxboot::harness::{ks_distance, KsTarget};
use ivxboot::limitdist::{
    cauchy_cdf, reference_distribution, simulate_brownian, simulate_ou, ReferenceKind, ReferenceSpec,
};
use ivxboot::rng::{StreamKey, StreamSource};

fn spec(kind: ReferenceKind, n_steps: usize, draws: usize) -> ReferenceSpec {
    ReferenceSpec { kind, n_steps, draws }
}

#[test]
fn brownian_endpoint_variance() {
    let ends: Vec<f64> = (0..50_000)
        .map(|i| simulate_brownian(1, &mut StreamSource::new(StreamKey::root(1).child(i))).unwrap().end())
        .collect();
    let m = ends.iter().sum::<f64>() / ends.len() as f64;
    let var = ends.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (ends.len() - 1) as f64;
    assert!((0.97..=1.03).contains(&var), "{var}");
}

#[test]
fn ou_endpoint_second_moment() {
    let target = ((-2.0f64).exp() - 1.0) / -2.0;
    assert!((target - 0.43233).abs() < 1e-5);
    let m: f64 = (0..50_000)
        .map(|i| {
            let p = simulate_brownian(200, &mut StreamSource::new(StreamKey::root(2).child(i))).unwrap();
            simulate_ou(-1.0, &p).last().unwrap().powi(2)
        })
        .sum::<f64>()
        / 50_000.0;
    assert!((m - target).abs() < 0.01, "{m}");
}

#[test]
fn int_w2_mean() {
    let d = reference_distribution(&spec(ReferenceKind::IntW2, 500, 50_000), StreamKey::root(3)).unwrap();
    assert!((d.mean() - 0.5).abs() < 0.01, "{}", d.mean());
}

#[test]
fn df_xi_sign_probability() {
    let d = reference_distribution(&spec(ReferenceKind::DfXi, 500, 50_000), StreamKey::root(4)).unwrap();
    assert!((d.cdf(0.0) - 0.6827).abs() < 0.01, "{}", d.cdf(0.0));
}

#[test]
fn v_over_u_is_cauchy() {
    let d = reference_distribution(&spec(ReferenceKind::VOverU, 16, 50_000), StreamKey::root(5)).unwrap();
    assert!(d.quantile(0.5).abs() < 0.03);
    assert!((d.quantile(0.25) + 1.0).abs() < 0.03);
    assert!((d.quantile(0.75) - 1.0).abs() < 0.03);
    let cauchy = reference_distribution(&spec(ReferenceKind::ExplosiveCauchy, 16, 50_000), StreamKey::root(6)).unwrap();
    assert!(ks_distance(&cauchy, KsTarget::Analytic(&cauchy_cdf)) < 0.01);
    assert!(ks_distance(&d, KsTarget::Sample(&cauchy)) < 0.02);
}

#[test]
fn df_ratio_two_ways() {
    let df = reference_distribution(&spec(ReferenceKind::DfRatio, 1000, 20_000), StreamKey::root(7)).unwrap();
    let ou =
        reference_distribution(&spec(ReferenceKind::OuRatio { c: 0.0 }, 1000, 20_000), StreamKey::root(8)).unwrap();
    assert!(ks_distance(&df, KsTarget::Sample(&ou)) <= 0.02);
}

#[test]
fn psi_gamma_infinite_limit_is_finite() {
    let d =
        reference_distribution(&spec(ReferenceKind::PsiGamma { gamma: None }, 500, 2000), StreamKey::root(9)).unwrap();
    assert!(d.draws().iter().all(|v| v.is_finite()));
    let g = reference_distribution(&spec(ReferenceKind::PsiGamma { gamma: Some(0.0) }, 500, 2000), StreamKey::root(9))
        .unwrap();
    // At gamma = 0 the weight is 1 and the functional is the DF t-type ratio.
    let xi = reference_distribution(&spec(ReferenceKind::DfXi, 500, 2000), StreamKey::root(9)).unwrap();
    assert!(ks_distance(&g, KsTarget::Sample(&xi)) < 0.06);
}
