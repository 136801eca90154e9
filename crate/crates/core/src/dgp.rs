//! Data-generating processes: correlated innovations, AR(1) regressors in
//! every persistence regime, and the predictive system
//!
//! ```text
//! y_t = beta * x_{t-1} + u_t
//! x_t = rho_n * x_{t-1} + v_t
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Channel, DrawSource};

/// Persistence of the regressor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PersistenceSpec {
    /// rho_n = 1 + c / n^gamma, gamma in (0, 1].
    LocalToUnity {
        c: f64,
        gamma: f64,
    },
    Fixed {
        rho: f64,
    },
    /// rho = 1 + c m / n with n = m k and c < 0.
    BlockModerate {
        c: f64,
        m: usize,
        k: usize,
    },
}

impl PersistenceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PersistenceSpec::LocalToUnity { c, gamma } => {
                check_gamma(gamma)?;
                if !c.is_finite() {
                    return Err(Error::Domain(format!("c must be finite, got {c}")));
                }
            }
            PersistenceSpec::Fixed { rho } => {
                if !rho.is_finite() {
                    return Err(Error::Domain(format!("rho must be finite, got {rho}")));
                }
            }
            PersistenceSpec::BlockModerate { c, m, k } => {
                if !(c < 0.0) {
                    return Err(Error::Domain(format!("block-moderate c must be negative, got {c}")));
                }
                if m == 0 || k == 0 {
                    return Err(Error::Domain("block sizes m and K must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Autoregressive root for a sample of size `n`.
    pub fn rho(&self, n: usize) -> Result<f64> {
        self.validate()?;
        match *self {
            PersistenceSpec::LocalToUnity { c, gamma } => lur_coefficient(c, gamma, n),
            PersistenceSpec::Fixed { rho } => Ok(rho),
            PersistenceSpec::BlockModerate { c, m, k } => {
                if m * k != n {
                    return Err(Error::Domain(format!("block-moderate needs n = m*K, got n={n}, m={m}, K={k}")));
                }
                Ok(1.0 + c * m as f64 / n as f64)
            }
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("gamma must lie in (0, 1], got {gamma}")))
    }
}

/// rho_n = 1 + c / n^gamma.
pub fn lur_coefficient(c: f64, gamma: f64, n: usize) -> Result<f64> {
    check_gamma(gamma)?;
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    Ok(1.0 + c / (n as f64).powf(gamma))
}

/// Joint law of (u, v).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnovationSpec {
    /// [[s_uu, s_uv], [s_uv, s_vv]].
    pub sigma: [[f64; 2]; 2],
    /// Weights c_0..c_L of the linear filter applied to the v base draws.
    pub ma_weights: Vec<f64>,
    /// AR(1) coefficient of u.
    pub error_ar: f64,
}

impl Default for InnovationSpec {
    fn default() -> Self {
        InnovationSpec { sigma: [[1.0, 0.0], [0.0, 1.0]], ma_weights: vec![1.0], error_ar: 0.0 }
    }
}

impl InnovationSpec {
    /// Unit variances with covariance `sigma_uv`.
    pub fn correlated(sigma_uv: f64) -> Self {
        InnovationSpec { sigma: [[1.0, sigma_uv], [sigma_uv, 1.0]], ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.sigma;
        if s.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("sigma entries must be finite".into()));
        }
        if s[0][1] != s[1][0] {
            return Err(Error::Domain("sigma must be symmetric".into()));
        }
        if !(s[0][0] > 0.0 && s[1][1] > 0.0) {
            return Err(Error::Domain("innovation variances must be positive".into()));
        }
        self.cholesky()?;
        if self.ma_weights.is_empty() || self.ma_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("ma_weights must be a nonempty finite sequence".into()));
        }
        if self.ma_weights.len() > 1 && self.ma_weights.iter().sum::<f64>() == 0.0 {
            return Err(Error::Domain("ma_weights must not sum to zero".into()));
        }
        if !(self.error_ar > -1.0 && self.error_ar < 1.0) {
            return Err(Error::Domain(format!("error_ar must lie in (-1, 1), got {}", self.error_ar)));
        }
        Ok(())
    }

    /// Lower Cholesky factor (l11, l21, l22), allowing rank one.
    fn cholesky(&self) -> Result<(f64, f64, f64)> {
        let s = self.sigma;
        let l11 = s[0][0].sqrt();
        let l21 = s[0][1] / l11;
        let rem = s[1][1] - l21 * l21;
        let tol = 1e-12 * s[1][1];
        if rem < -tol {
            return Err(Error::Domain("sigma is not positive semi-definite".into()));
        }
        Ok((l11, l21, rem.max(0.0).sqrt()))
    }

    fn burn_in(&self) -> usize {
        self.ma_weights.len() - 1
    }
}

/// Draws `n` innovation pairs. Consumes `n + L` normals from each of the
/// `InnovationU` and `InnovationV` channels, L being the MA order.
pub fn simulate_innovation_pair(
    spec: &InnovationSpec,
    n: usize,
    source: &mut dyn DrawSource,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let burn = spec.burn_in();
    let total = n + burn;
    let zu = source.normals(Channel::InnovationU, total)?;
    let zv = source.normals(Channel::InnovationV, total)?;
    let (l11, l21, l22) = spec.cholesky()?;
    let a: Vec<f64> = zu.iter().map(|z| l11 * z).collect();
    let eps: Vec<f64> = zu.iter().zip(&zv).map(|(zu, zv)| l21 * zu + l22 * zv).collect();

    let v: Vec<f64> =
        (burn..total).map(|t| spec.ma_weights.iter().enumerate().map(|(j, c)| c * eps[t - j]).sum()).collect();

    let rho_u = spec.error_ar;
    let mut u = Vec::with_capacity(n);
    if n > 0 {
        if rho_u == 0.0 {
            u.extend_from_slice(&a[burn..]);
        } else {
            let mut prev = a[burn] / (1.0 - rho_u * rho_u).sqrt();
            u.push(prev);
            for &at in &a[burn + 1..] {
                prev = rho_u * prev + at;
                u.push(prev);
            }
        }
    }
    Ok((u, v))
}

/// X_t = rho X_{t-1} + v_t with X_0 = x0.
pub fn simulate_ar1(rho: f64, v: &[f64], x0: f64) -> Vec<f64> {
    let mut prev = x0;
    v.iter()
        .map(|vt| {
            prev = rho * prev + vt;
            prev
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub beta: f64,
    pub persistence: PersistenceSpec,
    pub innovations: InnovationSpec,
    pub n: usize,
    pub x0: f64,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::Domain(format!("n must be at least 4, got {}", self.n)));
        }
        if !self.beta.is_finite() || !self.x0.is_finite() {
            return Err(Error::Domain("beta and x0 must be finite".into()));
        }
        self.persistence.validate()?;
        self.innovations.validate()
    }
}

/// Aligned observations (Y_t, X_t), t = 1..n, with the pre-sample X_0.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesPair {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub x0: f64,
    /// True innovations, kept when the pair was simulated.
    pub u: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
}

impl TimeSeriesPair {
    pub fn new(y: Vec<f64>, x: Vec<f64>, x0: f64) -> Result<Self> {
        if y.len() != x.len() {
            return Err(Error::Domain(format!("y has {} values but x has {}", y.len(), x.len())));
        }
        if y.is_empty() {
            return Err(Error::Domain("series must be nonempty".into()));
        }
        Ok(TimeSeriesPair { y, x, x0, u: None, v: None })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// X_{t-1} for t = 1..n.
    pub fn x_lagged(&self) -> Vec<f64> {
        lagged(&self.x, self.x0)
    }
}

/// The series shifted one step with `x0` prepended, same length as `x`.
pub fn lagged(x: &[f64], x0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    if !x.is_empty() {
        out.push(x0);
        out.extend_from_slice(&x[..x.len() - 1]);
    }
    out
}

pub fn simulate_predictive_system(spec: &DgpSpec, source: &mut dyn DrawSource) -> Result<TimeSeriesPair> {
    spec.validate()?;
    let rho = spec.persistence.rho(spec.n)?;
    let (u, v) = simulate_innovation_pair(&spec.innovations, spec.n, source)?;
    let x = simulate_ar1(rho, &v, spec.x0);
    let y: Vec<f64> = lagged(&x, spec.x0).iter().zip(&u).map(|(xl, ut)| spec.beta * xl + ut).collect();
    Ok(TimeSeriesPair { y, x, x0: spec.x0, u: Some(u), v: Some(v) })
}

/// Regressor path of length m*K with rho = 1 + c m / n and X_0 = 0.
pub fn simulate_block_moderate(
    c: f64,
    m: usize,
    k: usize,
    innov: &InnovationSpec,
    source: &mut dyn DrawSource,
) -> Result<Vec<f64>> {
    let persistence = PersistenceSpec::BlockModerate { c, m, k };
    let rho = persistence.rho(m * k)?;
    let (_, v) = simulate_innovation_pair(innov, m * k, source)?;
    Ok(simulate_ar1(rho, &v, 0.0))
}
