use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Channel, DrawSource};

/// How the sieve autoregression order is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SieveOrder {
    Fixed(usize),
    /// Minimize AIC over 1..=floor(n^{1/3}).
    Aic,
}

/// Yule-Walker VAR(p) fit. Rows of `eta` are observations.
#[derive(Clone, Debug, PartialEq)]
pub struct VarFit {
    /// Phi_1..Phi_p, each k x k.
    pub coefs: Vec<DMatrix<f64>>,
    /// Centered residuals for t = p+1..n, (n-p) x k.
    pub resid: DMatrix<f64>,
    /// Residual covariance with divisor n - p (before centering).
    pub sigma: DMatrix<f64>,
}

impl VarFit {
    pub fn order(&self) -> usize {
        self.coefs.len()
    }
}

/// Biased sample autocovariance n^{-1} sum_t (eta_t - m)(eta_{t-h} - m)^T.
fn autocov(eta: &DMatrix<f64>, mean: &[f64], h: usize) -> DMatrix<f64> {
    let (n, k) = eta.shape();
    let mut g = DMatrix::zeros(k, k);
    for t in h..n {
        for a in 0..k {
            let ea = eta[(t, a)] - mean[a];
            for b in 0..k {
                g[(a, b)] += ea * (eta[(t - h, b)] - mean[b]);
            }
        }
    }
    g / n as f64
}

pub fn fit_var_yule_walker(eta: &DMatrix<f64>, p: usize) -> Result<VarFit> {
    let (n, k) = eta.shape();
    if p == 0 {
        return Err(Error::Domain("sieve order must be at least 1".into()));
    }
    if n <= p * k + 1 {
        return Err(Error::Domain(format!("sieve needs n > p*d + 1, got n={n}, p={p}, d={k}")));
    }
    let mean: Vec<f64> = (0..k).map(|j| eta.column(j).sum() / n as f64).collect();
    let gammas: Vec<DMatrix<f64>> = (0..=p).map(|h| autocov(eta, &mean, h)).collect();
    // Block (i, j) of G is Gamma(j - i), with Gamma(-h) = Gamma(h)^T.
    let mut g = DMatrix::zeros(k * p, k * p);
    for i in 0..p {
        for j in 0..p {
            let block = if j >= i { gammas[j - i].clone() } else { gammas[i - j].transpose() };
            g.view_mut((i * k, j * k), (k, k)).copy_from(&block);
        }
    }
    let mut rhs = DMatrix::zeros(k * p, k);
    for h in 0..p {
        rhs.view_mut((h * k, 0), (k, k)).copy_from(&gammas[h + 1].transpose());
    }
    // [Phi_1 .. Phi_p] G = [Gamma(1) .. Gamma(p)]; solve the transposed system.
    let chol = g.cholesky().ok_or_else(|| Error::Singular("Yule-Walker autocovariance matrix".into()))?;
    let phi_t = chol.solve(&rhs);
    let coefs: Vec<DMatrix<f64>> = (0..p).map(|j| phi_t.view((j * k, 0), (k, k)).transpose()).collect();

    let m = n - p;
    let mut resid = DMatrix::zeros(m, k);
    for t in p..n {
        let mut e = eta.row(t).transpose();
        for (j, phi) in coefs.iter().enumerate() {
            e -= phi * eta.row(t - j - 1).transpose();
        }
        resid.set_row(t - p, &e.transpose());
    }
    let sigma = resid.transpose() * &resid / m as f64;
    for j in 0..k {
        let mu = resid.column(j).sum() / m as f64;
        resid.column_mut(j).add_scalar_mut(-mu);
    }
    Ok(VarFit { coefs, resid, sigma })
}

/// Order minimizing ln det Sigma_e(p) + 2 p d^2 / n.
pub fn select_order_aic(eta: &DMatrix<f64>) -> Result<usize> {
    let (n, k) = eta.shape();
    let pmax = ((n as f64).cbrt().floor() as usize).max(1);
    let mut best: Option<(f64, usize)> = None;
    for p in 1..=pmax {
        if n <= p * k + 1 {
            break;
        }
        let fit = fit_var_yule_walker(eta, p)?;
        let det = fit.sigma.determinant();
        if !(det > 0.0) {
            continue;
        }
        let aic = det.ln() + 2.0 * (p * k * k) as f64 / n as f64;
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, p));
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| Error::Singular("no sieve order has a nonsingular residual covariance".into()))
}

pub fn resolve_order(eta: &DMatrix<f64>, order: SieveOrder) -> Result<usize> {
    match order {
        SieveOrder::Fixed(p) => Ok(p),
        SieveOrder::Aic => select_order_aic(eta),
    }
}

/// Spectral radius of the VAR companion matrix.
pub fn companion_spectral_radius(coefs: &[DMatrix<f64>]) -> f64 {
    let p = coefs.len();
    if p == 0 {
        return 0.0;
    }
    let k = coefs[0].nrows();
    let mut c = DMatrix::zeros(k * p, k * p);
    for (j, phi) in coefs.iter().enumerate() {
        c.view_mut((0, j * k), (k, k)).copy_from(phi);
    }
    for i in 1..p {
        c.view_mut((i * k, (i - 1) * k), (k, k)).fill_with_identity();
    }
    c.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Runs the fitted recursion on resampled residuals from zero initial
/// values, discarding the first `burn_in` steps; returns n x k shocks.
pub(crate) fn sieve_shocks(
    fit: &VarFit,
    n: usize,
    burn_in: usize,
    source: &mut dyn DrawSource,
) -> Result<DMatrix<f64>> {
    let (m, k) = fit.resid.shape();
    let total = n + burn_in;
    let idx = source.indices(Channel::Resample, total, m)?;
    let p = fit.order();
    let mut eta = DMatrix::zeros(total, k);
    for (t, &i) in idx.iter().enumerate() {
        let mut e = fit.resid.row(i).transpose();
        for (j, phi) in fit.coefs.iter().enumerate().take(p.min(t)) {
            e += phi * eta.row(t - j - 1).transpose();
        }
        eta.set_row(t, &e.transpose());
    }
    Ok(eta.rows(burn_in, n).into_owned())
}

/// Sieve-bootstrap resample of a cointegrating regression.
///
/// `eta` holds (u_t, dx_t^T) in its columns. The regressors x* integrate the
/// dx* block from zero and y*_t = beta0^T x*_t + u*_t.
pub fn sieve_bootstrap_sample(
    eta: &DMatrix<f64>,
    order: SieveOrder,
    burn_in: usize,
    beta0: &[f64],
    source: &mut dyn DrawSource,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let fit = fit_var_yule_walker(eta, resolve_order(eta, order)?)?;
    sieve_from_fit(&fit, eta.nrows(), burn_in, beta0, source)
}

pub(crate) fn sieve_from_fit(
    fit: &VarFit,
    n: usize,
    burn_in: usize,
    beta0: &[f64],
    source: &mut dyn DrawSource,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let k = fit.resid.ncols();
    let d = k - 1;
    if beta0.len() != d {
        return Err(Error::Contract(format!("beta0 has {} entries for {d} regressors", beta0.len())));
    }
    let shocks = sieve_shocks(fit, n, burn_in, source)?;
    let mut x = DMatrix::zeros(n, d);
    let mut level = vec![0.0; d];
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        let mut yt = shocks[(t, 0)];
        for j in 0..d {
            level[j] += shocks[(t, j + 1)];
            x[(t, j)] = level[j];
            yt += beta0[j] * level[j];
        }
        y.push(yt);
    }
    Ok((y, x))
}
