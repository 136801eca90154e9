//! Point estimators: OLS for the autoregression and the predictive slope,
//! the IVX instrument and estimator, kernel long-run covariance and FM-OLS.

mod fmols;
mod longrun;

pub use fmols::{fm_ols, fm_ols_fit, FmOlsFit};
pub use longrun::{auto_bandwidth, longrun_covariance, longrun_covariance_with, parzen, Bandwidth, LongRunCov};

use serde::{Deserialize, Serialize};

use crate::dgp::{lagged, TimeSeriesPair};
use crate::error::{Error, Result};

/// Instrument persistence rho_z = 1 + c_z / n^gamma_z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvxParams {
    pub c_z: f64,
    pub gamma_z: f64,
}

impl Default for IvxParams {
    fn default() -> Self {
        IvxParams { c_z: -1.0, gamma_z: 0.95 }
    }
}

impl IvxParams {
    pub fn new(c_z: f64, gamma_z: f64) -> Result<Self> {
        let p = IvxParams { c_z, gamma_z };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_z < 0.0 && self.c_z.is_finite()) {
            return Err(Error::Domain(format!("c_z must be negative, got {}", self.c_z)));
        }
        if !(self.gamma_z > 0.0 && self.gamma_z < 1.0) {
            return Err(Error::Domain(format!("gamma_z must lie in (0, 1), got {}", self.gamma_z)));
        }
        Ok(())
    }

    pub fn rho_z(&self, n: usize) -> f64 {
        1.0 + self.c_z / (n as f64).powf(self.gamma_z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    Ivx,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Ivx => "ivx",
        }
    }
}

/// Output of fitting the predictive system to one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub method: Method,
    pub beta_hat: f64,
    pub rho_hat: f64,
    /// Centered predictive residuals.
    pub u_resid: Vec<f64>,
    /// Centered autoregression residuals.
    pub v_resid: Vec<f64>,
    pub ivx: Option<IvxParams>,
    /// Instrument Z_1..Z_n.
    pub z: Option<Vec<f64>>,
    pub n: usize,
    /// First observation Y_1.
    pub y1: f64,
    /// Sum of X_{t-1}^2.
    pub sxx: f64,
    /// Sum of Z_{t-1} X_{t-1} (equals `sxx` for OLS).
    pub szx: f64,
    /// Sum of Z_{t-1}^2 (equals `sxx` for OLS).
    pub szz: f64,
    /// Mean of squared uncentered predictive residuals.
    pub sigma2_u: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sum_sq_lagged(x: &[f64], x0: f64) -> Result<(Vec<f64>, f64)> {
    let xl = lagged(x, x0);
    let sxx = dot(&xl, &xl);
    if !(sxx > 0.0 && sxx.is_finite()) {
        return Err(Error::Degenerate(format!("sum of squared lagged regressor is {sxx}")));
    }
    Ok((xl, sxx))
}

/// Subtracts the sample mean.
pub fn center(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

/// OLS autoregressive coefficient sum(X_{t-1} X_t) / sum(X_{t-1}^2).
pub fn ols_ar1(x: &[f64], x0: f64) -> Result<f64> {
    let (xl, sxx) = sum_sq_lagged(x, x0)?;
    Ok(dot(&xl, x) / sxx)
}

/// OLS predictive slope sum(X_{t-1} Y_t) / sum(X_{t-1}^2).
pub fn ols_beta(y: &[f64], x: &[f64], x0: f64) -> Result<f64> {
    check_lengths(y, x)?;
    let (xl, sxx) = sum_sq_lagged(x, x0)?;
    Ok(dot(&xl, y) / sxx)
}

fn check_lengths(y: &[f64], x: &[f64]) -> Result<()> {
    if y.len() != x.len() || x.is_empty() {
        return Err(Error::Domain(format!("y and x must be nonempty and aligned ({} vs {})", y.len(), x.len())));
    }
    Ok(())
}

/// Z_t = rho_z Z_{t-1} + (X_t - X_{t-1}), Z_0 = 0.
pub fn ivx_instrument(x: &[f64], x0: f64, params: &IvxParams) -> Vec<f64> {
    ivx_instrument_with_rho(x, x0, params.rho_z(x.len()))
}

/// Instrument recursion with an explicit rho_z, bypassing parameter checks.
pub fn ivx_instrument_with_rho(x: &[f64], x0: f64, rho_z: f64) -> Vec<f64> {
    let mut prev_x = x0;
    let mut z = 0.0;
    x.iter()
        .map(|&xt| {
            z = rho_z * z + (xt - prev_x);
            prev_x = xt;
            z
        })
        .collect()
}

fn residuals(y: &[f64], xl: &[f64], beta: f64) -> Vec<f64> {
    y.iter().zip(xl).map(|(y, x)| y - beta * x).collect()
}

/// Predictive regression and autoregression by OLS.
pub fn ols_fit(y: &[f64], x: &[f64], x0: f64) -> Result<FitResult> {
    check_lengths(y, x)?;
    let (xl, sxx) = sum_sq_lagged(x, x0)?;
    let beta_hat = dot(&xl, y) / sxx;
    let rho_hat = dot(&xl, x) / sxx;
    let u = residuals(y, &xl, beta_hat);
    let v = residuals(x, &xl, rho_hat);
    let n = x.len();
    Ok(FitResult {
        method: Method::Ols,
        beta_hat,
        rho_hat,
        sigma2_u: dot(&u, &u) / n as f64,
        u_resid: center(&u),
        v_resid: center(&v),
        ivx: None,
        z: None,
        n,
        y1: y[0],
        sxx,
        szx: sxx,
        szz: sxx,
    })
}

/// IVX estimate sum(Z_{t-1} Y_t) / sum(Z_{t-1} X_{t-1}), with rho_hat from
/// OLS on the autoregression.
pub fn ivx_estimator(y: &[f64], x: &[f64], x0: f64, params: &IvxParams) -> Result<FitResult> {
    check_lengths(y, x)?;
    params.validate()?;
    let n = x.len();
    let rho_z = params.rho_z(n);
    if !(rho_z > 0.0 && rho_z < 1.0) {
        return Err(Error::Domain(format!("rho_z = {rho_z} outside (0, 1) at n = {n}")));
    }
    let z = ivx_instrument_with_rho(x, x0, rho_z);
    let zl = lagged(&z, 0.0);
    let (xl, sxx) = sum_sq_lagged(x, x0)?;
    let szx = dot(&zl, &xl);
    if szx == 0.0 || !szx.is_finite() {
        return Err(Error::InstrumentDegenerate(format!("sum of Z_(t-1) X_(t-1) is {szx}")));
    }
    let beta_hat = dot(&zl, y) / szx;
    let rho_hat = dot(&xl, x) / sxx;
    let u = residuals(y, &xl, beta_hat);
    let v = residuals(x, &xl, rho_hat);
    Ok(FitResult {
        method: Method::Ivx,
        beta_hat,
        rho_hat,
        sigma2_u: dot(&u, &u) / n as f64,
        u_resid: center(&u),
        v_resid: center(&v),
        ivx: Some(*params),
        szz: dot(&zl, &zl),
        z: Some(z),
        n,
        y1: y[0],
        sxx,
        szx,
    })
}

/// Fits `data` with the given method.
pub fn fit(data: &TimeSeriesPair, method: Method, params: &IvxParams) -> Result<FitResult> {
    match method {
        Method::Ols => ols_fit(&data.y, &data.x, data.x0),
        Method::Ivx => ivx_estimator(&data.y, &data.x, data.x0, params),
    }
}
