//! Resampling schemes and bootstrap tests.

mod distribution;
mod schemes;
mod sieve;

pub use distribution::{bootstrap_pvalue, EmpiricalDistribution};
pub use schemes::{iid_residual_bootstrap_sample, rbb_residuals, rbb_sample, wild_bootstrap_sample};
pub use sieve::{
    companion_spectral_radius, fit_var_yule_walker, resolve_order, select_order_aic, sieve_bootstrap_sample,
    SieveOrder, VarFit,
};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::TimeSeriesPair;
use crate::error::{Error, Result};
use crate::estimators::{fit, fm_ols_fit, Bandwidth, FitResult};
use crate::rng::{StreamKey, StreamSource};
use crate::statistics::{evaluate_at, StatKind, StatSpec, Target};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeKind {
    Wild,
    IidResidual,
    /// Residual-based block bootstrap with block length `b` and drift `mu_hat`.
    ResidualBlock {
        b: usize,
        #[serde(default)]
        mu_hat: f64,
    },
    Sieve {
        #[serde(default = "aic")]
        order: SieveOrder,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
    },
}

fn aic() -> SieveOrder {
    SieveOrder::Aic
}

fn default_burn_in() -> usize {
    100
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Wild => "wild",
            SchemeKind::IidResidual => "iid",
            SchemeKind::ResidualBlock { .. } => "rbb",
            SchemeKind::Sieve { .. } => "sieve",
        }
    }
}

/// Where bootstrap samples are centered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Recenter {
    /// Generate under the null value of the parameter the statistic is
    /// about (beta for predictive-slope statistics, rho for autoregressive
    /// ones) and evaluate the statistic at that value.
    NullImposed(f64),
    /// Generate from the estimates and evaluate at the estimate.
    EstimateCentered,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapScheme {
    pub kind: SchemeKind,
    pub recenter: Recenter,
}

impl BootstrapScheme {
    pub fn new(kind: SchemeKind, recenter: Recenter) -> Self {
        BootstrapScheme { kind, recenter }
    }
}

/// Fraction of B at or above which excluded replications abort the run.
pub const EXCLUSION_CAP: f64 = 0.01;

/// Fails when `excluded` reaches the 1% cap.
pub fn check_exclusions(excluded: usize, total: usize) -> Result<()> {
    if excluded > 0 && excluded as f64 >= EXCLUSION_CAP * total as f64 {
        return Err(Error::TooManyExcluded { excluded, total });
    }
    Ok(())
}

/// Undefined statistic on a resample: dropped and counted, not fatal.
pub(crate) fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::Degenerate(_) | Error::InstrumentDegenerate(_) | Error::Singular(_))
}

enum Plan {
    Pair { fit: FitResult, rho: f64, beta: f64, first_y: Option<f64>, wild: bool },
    Block { x: Vec<f64>, rho_tilde: f64, b: usize, mu_hat: f64 },
    Sieve { fit: VarFit, n: usize, burn_in: usize, beta: f64 },
}

/// Step-1 fit on the data plus the null value statistics are evaluated at.
fn plan(data: &TimeSeriesPair, stat: &StatSpec, scheme: &BootstrapScheme) -> Result<(Plan, f64)> {
    let target = stat.kind.target();
    match scheme.kind {
        SchemeKind::Wild | SchemeKind::IidResidual => {
            if stat.kind == StatKind::FmT {
                return Err(Error::Contract("the FM-OLS statistic is bootstrapped with the sieve scheme".into()));
            }
            let f = fit(data, stat.kind.method(), &stat.ivx)?;
            let wild = scheme.kind == SchemeKind::Wild;
            let (rho, beta, first_y, null) = match (scheme.recenter, target) {
                (Recenter::NullImposed(b0), Target::Beta) => (f.rho_hat, b0, None, b0),
                (Recenter::NullImposed(r0), Target::Rho) => (r0, f.beta_hat, None, r0),
                (Recenter::EstimateCentered, Target::Beta) => (f.rho_hat, f.beta_hat, Some(f.y1), f.beta_hat),
                (Recenter::EstimateCentered, Target::Rho) => (f.rho_hat, f.beta_hat, Some(f.y1), f.rho_hat),
            };
            Ok((Plan::Pair { fit: f, rho, beta, first_y, wild }, null))
        }
        SchemeKind::ResidualBlock { b, mu_hat } => {
            if target != Target::Rho {
                return Err(Error::Contract("the block bootstrap applies to autoregressive statistics".into()));
            }
            let rho_tilde = crate::estimators::ols_ar1(&data.x, data.x0)?;
            let null = match scheme.recenter {
                Recenter::NullImposed(r0) => r0,
                Recenter::EstimateCentered => rho_tilde,
            };
            Ok((Plan::Block { x: data.x.clone(), rho_tilde, b, mu_hat }, null))
        }
        SchemeKind::Sieve { order, burn_in } => {
            if stat.kind != StatKind::FmT {
                return Err(Error::Contract("the sieve scheme bootstraps the FM-OLS statistic".into()));
            }
            let n = data.len();
            let beta = match scheme.recenter {
                Recenter::NullImposed(b0) => b0,
                Recenter::EstimateCentered => {
                    fm_ols_fit(&data.y, &DMatrix::from_column_slice(n, 1, &data.x), Bandwidth::Auto)?.beta[0]
                }
            };
            let mut eta = DMatrix::zeros(n, 2);
            let mut prev = data.x0;
            for t in 0..n {
                eta[(t, 0)] = data.y[t] - beta * data.x[t];
                eta[(t, 1)] = data.x[t] - prev;
                prev = data.x[t];
            }
            let p = resolve_order(&eta, order)?;
            Ok((Plan::Sieve { fit: fit_var_yule_walker(&eta, p)?, n, burn_in, beta }, beta))
        }
    }
}

fn resample(plan: &Plan, source: &mut StreamSource) -> Result<TimeSeriesPair> {
    match plan {
        Plan::Pair { fit, rho, beta, first_y, wild } => {
            let (u, v) = if *wild { schemes::wild_shocks(fit, source)? } else { schemes::iid_shocks(fit, source)? };
            Ok(schemes::assemble(u, v, *rho, *beta, *first_y))
        }
        Plan::Block { x, rho_tilde, b, mu_hat } => {
            // Regressing the full pseudo-series on its lag from X*_0 = 0
            // leaves the sums over t = 2..l unchanged and scales by l.
            let pseudo = rbb_sample(x, *rho_tilde, *b, *mu_hat, source)?;
            let y = vec![0.0; pseudo.len()];
            TimeSeriesPair::new(y, pseudo, 0.0)
        }
        Plan::Sieve { fit, n, burn_in, beta } => {
            let (y, x) = sieve::sieve_from_fit(fit, *n, *burn_in, &[*beta], source)?;
            TimeSeriesPair::new(y, x.column(0).iter().copied().collect(), 0.0)
        }
    }
}

/// B bootstrap draws of `stat`; replication b uses the substream
/// `key.child(b)`, so the result does not depend on the thread count.
pub fn bootstrap_distribution(
    data: &TimeSeriesPair,
    stat: &StatSpec,
    scheme: &BootstrapScheme,
    b: usize,
    key: StreamKey,
) -> Result<EmpiricalDistribution> {
    if b == 0 {
        return Err(Error::Domain("bootstrap needs B >= 1".into()));
    }
    let (plan, null) = plan(data, stat, scheme)?;
    let draws: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut src = StreamSource::new(key.child(i as u64));
            let sample = resample(&plan, &mut src)?;
            match evaluate_at(stat, &sample, null) {
                Ok(e) if e.statistic.is_finite() => Ok(Some(e.statistic)),
                Ok(_) => Ok(None),
                Err(e) if is_degenerate(&e) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let kept: Vec<f64> = draws.iter().flatten().copied().collect();
    let excluded = b - kept.len();
    check_exclusions(excluded, b)?;
    let meta = format!("{}/{} B={b}", scheme.kind.name(), stat.kind.name());
    Ok(EmpiricalDistribution::try_new(kept, meta)?.with_excluded(excluded))
}
