use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Kernel long-run covariance of a stationary vector series.
///
/// `omega = lambda + lambda^T + sigma` and `delta = lambda + sigma` hold
/// exactly; both are assembled from the stored `lambda` and `sigma`.
#[derive(Clone, Debug, PartialEq)]
pub struct LongRunCov {
    pub omega: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub bandwidth: usize,
}

impl LongRunCov {
    /// Builds the matrix from its one-sided sum and contemporaneous part.
    pub fn from_parts(lambda: DMatrix<f64>, sigma: DMatrix<f64>, bandwidth: usize) -> Self {
        let delta = &lambda + &sigma;
        let omega = lambda.transpose() + &delta;
        LongRunCov { omega, lambda, sigma, delta, bandwidth }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bandwidth {
    Fixed(usize),
    /// floor(4 (n/100)^(2/9)), at least 1.
    Auto,
}

pub fn auto_bandwidth(n: usize) -> usize {
    ((4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize).max(1)
}

/// Parzen lag window.
pub fn parzen(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 {
        1.0 - 6.0 * a * a + 6.0 * a * a * a
    } else if a <= 1.0 {
        2.0 * (1.0 - a).powi(3)
    } else {
        0.0
    }
}

/// n^{-1} sum_t eta_t eta_{t+j}^T (rows of `eta` are observations).
fn autocov(eta: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    let (n, d) = eta.shape();
    let mut g = DMatrix::zeros(d, d);
    for t in 0..n - j {
        for a in 0..d {
            let ea = eta[(t, a)];
            for b in 0..d {
                g[(a, b)] += ea * eta[(t + j, b)];
            }
        }
    }
    g / n as f64
}

fn resolve(bandwidth: Bandwidth, n: usize) -> Result<usize> {
    let m = match bandwidth {
        Bandwidth::Fixed(m) => m,
        Bandwidth::Auto => auto_bandwidth(n),
    };
    if m >= n {
        return Err(Error::Domain(format!("bandwidth {m} must be below the sample size {n}")));
    }
    Ok(m)
}

fn lambda_hat(eta: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let d = eta.ncols();
    let mut lambda = DMatrix::zeros(d, d);
    for j in 1..=m {
        let w = parzen(j as f64 / m as f64);
        if w != 0.0 {
            lambda += autocov(eta, j) * w;
        }
    }
    lambda
}

/// Parzen-window estimate with no prewhitening.
pub fn longrun_covariance(eta: &DMatrix<f64>, bandwidth: Bandwidth) -> Result<LongRunCov> {
    longrun_covariance_with(eta, bandwidth, false)
}

/// Parzen-window estimate, optionally prewhitened by a VAR(1).
///
/// With prewhitening the kernel runs on the VAR(1) residuals and the result
/// is recoloured through (I - A)^{-1}. The contemporaneous part stays the raw
/// sample covariance and the one-sided sum absorbs the recolouring, split
/// evenly, so the identities between the four matrices still hold exactly.
pub fn longrun_covariance_with(eta: &DMatrix<f64>, bandwidth: Bandwidth, prewhiten: bool) -> Result<LongRunCov> {
    let (n, d) = eta.shape();
    if n == 0 || d == 0 {
        return Err(Error::Domain("long-run covariance needs a nonempty series".into()));
    }
    if eta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("long-run covariance input is not finite".into()));
    }
    let sigma = autocov(eta, 0);
    if !prewhiten {
        let m = resolve(bandwidth, n)?;
        return Ok(LongRunCov::from_parts(lambda_hat(eta, m), sigma, m));
    }
    if n < 3 {
        return Err(Error::Domain("prewhitening needs at least 3 observations".into()));
    }
    let lead = eta.rows(1, n - 1).into_owned();
    let lag = eta.rows(0, n - 1).into_owned();
    let sxx = lag.transpose() * &lag;
    let syx = lead.transpose() * &lag;
    let sxx_inv = sxx.try_inverse().ok_or_else(|| Error::Singular("prewhitening moment matrix".into()))?;
    let a = syx * sxx_inv;
    let resid = &lead - &lag * a.transpose();
    let m = resolve(bandwidth, n - 1)?;
    let lam_e = lambda_hat(&resid, m);
    let sig_e = autocov(&resid, 0);
    let omega_e = lam_e.transpose() + &lam_e + sig_e;
    let i_minus_a = DMatrix::<f64>::identity(d, d) - &a;
    let inv = i_minus_a.try_inverse().ok_or_else(|| Error::Singular("I - A in prewhitening".into()))?;
    let omega_star = &inv * omega_e * inv.transpose();
    let omega_star = (&omega_star + omega_star.transpose()) * 0.5;
    let lam_raw = lambda_hat(eta, m);
    let omega_raw = lam_raw.transpose() + &lam_raw + &sigma;
    let lambda = lam_raw + (omega_star - omega_raw) * 0.5;
    Ok(LongRunCov::from_parts(lambda, sigma, m))
}
