//! Monte Carlo oracles for the data-generating process and the estimators.

use ivxboot::dgp::{simulate_innovation_pair, simulate_predictive_system, DgpSpec, InnovationSpec, PersistenceSpec};
use ivxboot::estimators::{fm_ols_fit, ivx_estimator, ols_beta, ols_fit, Bandwidth, IvxParams};
use ivxboot::rng::{StreamKey, StreamSource};
use ivxboot::statistics::{selfnorm_ols_stat, Power};
use nalgebra::DMatrix;

fn src(seed: u64) -> StreamSource {
    StreamSource::new(StreamKey::root(seed))
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn spec(beta: f64, c: f64, sigma_uv: f64, n: usize) -> DgpSpec {
    DgpSpec {
        beta,
        persistence: PersistenceSpec::LocalToUnity { c, gamma: 1.0 },
        innovations: InnovationSpec::correlated(sigma_uv),
        n,
        x0: 0.0,
    }
}

#[test]
fn identity_covariance_gives_uncorrelated_pair() {
    let (u, v) = simulate_innovation_pair(&InnovationSpec::default(), 10_000, &mut src(1)).unwrap();
    assert!(corr(&u, &v).abs() < 0.05);
}

#[test]
fn correlated_pair_matches_sigma() {
    let (u, v) = simulate_innovation_pair(&InnovationSpec::correlated(-0.9), 20_000, &mut src(2)).unwrap();
    assert!((corr(&u, &v) + 0.9).abs() < 0.02);
}

#[test]
fn ar_error_autocorrelation() {
    let spec = InnovationSpec { error_ar: 0.6, ..InnovationSpec::default() };
    let (u, _) = simulate_innovation_pair(&spec, 50_000, &mut src(3)).unwrap();
    let r1 = corr(&u[1..], &u[..u.len() - 1]);
    assert!((r1 - 0.6).abs() < 0.03, "{r1}");
    // Stationary start: variance 1/(1-rho^2) from the first observation on.
    let head: Vec<f64> =
        (0..4000).map(|s| simulate_innovation_pair(&spec, 4, &mut src(100 + s)).unwrap().0[0]).collect();
    let (_, se) = mean_se(&head);
    let var = se * se * head.len() as f64;
    assert!((var - 1.0 / (1.0 - 0.36)).abs() < 0.1, "{var}");
}

#[test]
fn ols_consistent_at_local_to_unity() {
    let est: Vec<f64> = (0..2000)
        .map(|r| {
            let d = simulate_predictive_system(&spec(0.05, -5.0, 0.0, 500), &mut src(10_000 + r)).unwrap();
            ols_beta(&d.y, &d.x, d.x0).unwrap()
        })
        .collect();
    let (m, se) = mean_se(&est);
    assert!((m - 0.05).abs() < 3.0 * se, "{m} +- {se}");
}

#[test]
fn ivx_unbiased_under_null() {
    let p = IvxParams::default();
    let est: Vec<f64> = (0..5000)
        .map(|r| {
            let d = simulate_predictive_system(&spec(0.0, -5.0, 0.0, 500), &mut src(20_000 + r)).unwrap();
            ivx_estimator(&d.y, &d.x, d.x0, &p).unwrap().beta_hat
        })
        .collect();
    let (m, se) = mean_se(&est);
    assert!(m.abs() < 3.0 * se, "{m} +- {se}");
}

/// Cointegrating regression y_t = beta x_t + u_t with x a random walk.
fn cointegrated(seed: u64, sigma_uv: f64, n: usize, beta: f64) -> (Vec<f64>, DMatrix<f64>) {
    let (u, v) = simulate_innovation_pair(&InnovationSpec::correlated(sigma_uv), n, &mut src(seed)).unwrap();
    let mut x = Vec::with_capacity(n);
    let mut level = 0.0;
    for vt in &v {
        level += vt;
        x.push(level);
    }
    let y = x.iter().zip(&u).map(|(x, u)| beta * x + u).collect();
    (y, DMatrix::from_column_slice(n, 1, &x))
}

fn ols_slope(y: &[f64], x: &DMatrix<f64>) -> f64 {
    let xs = x.column(0);
    xs.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / xs.iter().map(|a| a * a).sum::<f64>()
}

#[test]
fn fm_ols_correction_second_order_under_exogeneity() {
    let (mut gap, mut err) = (0.0, 0.0);
    for r in 0..1000 {
        let (y, x) = cointegrated(30_000 + r, 0.0, 2000, 1.0);
        let ols = ols_slope(&y, &x);
        let fm = fm_ols_fit(&y, &x, Bandwidth::Auto).unwrap().beta[0];
        gap += (fm - ols).abs();
        err += (ols - 1.0).abs();
    }
    assert!(gap < 0.5 * err, "{gap} vs {err}");
}

#[test]
fn fm_ols_reduces_endogeneity_bias() {
    let mut fm_err = Vec::new();
    let mut ols_err = Vec::new();
    for r in 0..1000 {
        let (y, x) = cointegrated(40_000 + r, 0.8, 500, 1.0);
        ols_err.push((ols_slope(&y, &x) - 1.0).abs());
        fm_err.push((fm_ols_fit(&y, &x, Bandwidth::Auto).unwrap().beta[0] - 1.0).abs());
    }
    let med = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (f, o) = (med(&mut fm_err), med(&mut ols_err));
    assert!(f < o, "{f} vs {o}");
}

#[test]
fn selfnormalized_unit_root_sign_probability() {
    let below = (0..20_000)
        .filter(|&r| {
            let d = simulate_predictive_system(&spec(0.0, 0.0, 0.0, 1000), &mut src(50_000 + r)).unwrap();
            selfnorm_ols_stat(&d.x, d.x0, 1.0, Power::Half, true).unwrap() < 0.0
        })
        .count();
    let p = below as f64 / 20_000.0;
    assert!((p - 0.683).abs() < 0.01, "{p}");
}

#[test]
fn ols_fit_and_ivx_agree_on_rho() {
    let d = simulate_predictive_system(&spec(0.1, -10.0, -0.5, 300), &mut src(7)).unwrap();
    let a = ols_fit(&d.y, &d.x, d.x0).unwrap();
    let b = ivx_estimator(&d.y, &d.x, d.x0, &IvxParams::default()).unwrap();
    assert_eq!(a.rho_hat, b.rho_hat);
}
