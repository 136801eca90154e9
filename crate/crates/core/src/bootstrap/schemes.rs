use crate::dgp::{lagged, simulate_ar1, TimeSeriesPair};
use crate::error::{Error, Result};
use crate::estimators::{center, FitResult};
use crate::rng::{Channel, DrawSource};

use super::Recenter;

/// Builds (y*, x*) from bootstrap shocks: x*_t = rho x*_{t-1} + v*_t from
/// x*_0 = 0 and y*_t = beta x*_{t-1} + u*_t, optionally pinning y*_1.
pub(crate) fn assemble(u: Vec<f64>, v: Vec<f64>, rho: f64, beta: f64, first_y: Option<f64>) -> TimeSeriesPair {
    let x = simulate_ar1(rho, &v, 0.0);
    let mut y: Vec<f64> = lagged(&x, 0.0).iter().zip(&u).map(|(xl, ut)| beta * xl + ut).collect();
    if let (Some(y1), Some(first)) = (first_y, y.first_mut()) {
        *first = y1;
    }
    TimeSeriesPair { y, x, x0: 0.0, u: Some(u), v: Some(v) }
}

fn generating_beta(fit: &FitResult, recenter: Recenter) -> (f64, Option<f64>) {
    match recenter {
        Recenter::NullImposed(b0) => (b0, None),
        Recenter::EstimateCentered => (fit.beta_hat, Some(fit.y1)),
    }
}

/// Gaussian multipliers e_t scale both centered residuals at time t.
pub(crate) fn wild_shocks(fit: &FitResult, source: &mut dyn DrawSource) -> Result<(Vec<f64>, Vec<f64>)> {
    let e = source.normals(Channel::Multiplier, fit.n)?;
    let u = e.iter().zip(&fit.u_resid).map(|(e, u)| e * u).collect();
    let v = e.iter().zip(&fit.v_resid).map(|(e, v)| e * v).collect();
    Ok((u, v))
}

/// Residual pairs drawn jointly with replacement.
pub(crate) fn iid_shocks(fit: &FitResult, source: &mut dyn DrawSource) -> Result<(Vec<f64>, Vec<f64>)> {
    let idx = source.indices(Channel::Resample, fit.n, fit.n)?;
    let u = idx.iter().map(|&i| fit.u_resid[i]).collect();
    let v = idx.iter().map(|&i| fit.v_resid[i]).collect();
    Ok((u, v))
}

/// Wild-bootstrap resample of the predictive system.
///
/// Under `EstimateCentered` the slope is beta_hat and y*_1 is pinned to Y_1.
pub fn wild_bootstrap_sample(
    fit: &FitResult,
    recenter: Recenter,
    source: &mut dyn DrawSource,
) -> Result<TimeSeriesPair> {
    let (u, v) = wild_shocks(fit, source)?;
    let (beta, first) = generating_beta(fit, recenter);
    Ok(assemble(u, v, fit.rho_hat, beta, first))
}

/// I.i.d. resample of centered residual pairs.
pub fn iid_residual_bootstrap_sample(
    fit: &FitResult,
    recenter: Recenter,
    source: &mut dyn DrawSource,
) -> Result<TimeSeriesPair> {
    let (u, v) = iid_shocks(fit, source)?;
    let (beta, first) = generating_beta(fit, recenter);
    Ok(assemble(u, v, fit.rho_hat, beta, first))
}

/// Centered residuals X_t - rho X_{t-1}, t = 2..n.
pub fn rbb_residuals(x: &[f64], rho_tilde: f64) -> Vec<f64> {
    center(&x.windows(2).map(|w| w[1] - rho_tilde * w[0]).collect::<Vec<_>>())
}

/// Residual-based block bootstrap pseudo-series.
///
/// With k = floor((n-1)/b) blocks the output has length l = kb + 1, starts
/// at X_1 and accumulates `mu_hat` plus the resampled centered residuals
/// at the unit root.
pub fn rbb_sample(x: &[f64], rho_tilde: f64, b: usize, mu_hat: f64, source: &mut dyn DrawSource) -> Result<Vec<f64>> {
    let n = x.len();
    if b == 0 || b >= n {
        return Err(Error::Domain(format!("block length must satisfy 1 <= b < n, got b={b}, n={n}")));
    }
    let resid = rbb_residuals(x, rho_tilde);
    let k = (n - 1) / b;
    // Start i is uniform on 1..=n-b; residual v_{i+s} sits at resid[i+s-2].
    let starts = source.indices(Channel::Resample, k, n - b)?;
    let l = k * b + 1;
    let mut out = Vec::with_capacity(l);
    let mut level = x[0];
    out.push(level);
    for t in 2..=l {
        let m = (t - 2) / b;
        let s = t - m * b - 1;
        let i = starts[m] + 1;
        level += mu_hat + resid[i + s - 2];
        out.push(level);
    }
    Ok(out)
}
