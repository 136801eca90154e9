//! Test statistics built on estimator output.

use serde::{Deserialize, Serialize};

use crate::dgp::TimeSeriesPair;
use crate::error::{Error, Result};
use crate::estimators::{fm_ols_fit, ivx_estimator, ols_ar1, Bandwidth, FitResult, IvxParams, Method};

/// Exponent of a self-normalizing moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Power {
    Half,
    One,
    Two,
}

impl Power {
    pub fn value(self) -> f64 {
        match self {
            Power::Half => 0.5,
            Power::One => 1.0,
            Power::Two => 2.0,
        }
    }

    fn apply(self, m: f64) -> f64 {
        match self {
            Power::Half => m.sqrt(),
            Power::One => m,
            Power::Two => m * m,
        }
    }
}

impl TryFrom<f64> for Power {
    type Error = String;
    fn try_from(v: f64) -> std::result::Result<Self, String> {
        match v {
            0.5 => Ok(Power::Half),
            1.0 => Ok(Power::One),
            2.0 => Ok(Power::Two),
            _ => Err(format!("power must be one of 0.5, 1, 2; got {v}")),
        }
    }
}

impl From<Power> for f64 {
    fn from(p: Power) -> f64 {
        p.value()
    }
}

/// Normalization of rho_hat - rho_0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoScale {
    /// sqrt(n), stationary regime.
    SqrtN,
    /// n, unit root.
    N,
    /// n / sqrt(m), block-moderate regime with m blocks.
    NOverSqrtM(usize),
    /// (rho_hat^2 - 1)^{-1} |rho_hat|^n, explosive regime.
    Explosive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StatKind {
    /// (sum X_{t-1}^2)^a (rho_hat - rho_0), optionally divided by s_n.
    SelfNormOls {
        power: Power,
        studentize: bool,
    },
    /// n^{(1+gamma_z)/2} (beta_ivx - beta_0).
    PsiIvx,
    /// (sum Z_{t-1} X_{t-1})^a (beta_ivx - beta_0).
    JnIvx {
        #[serde(default = "one")]
        power: Power,
    },
    /// Studentized IVX Wald statistic.
    WaldIvx,
    /// Signed square root of the IVX Wald statistic.
    IvxT,
    /// s_n^{-1} (sum X_{t-1}^2)^{1/2} (rho_hat - rho_0).
    TnUnitRoot,
    RhoScaled {
        scale: RhoScale,
    },
    /// FM-OLS t-ratio in the cointegrating regression y_t = beta x_t + u_t.
    FmT,
}

fn one() -> Power {
    Power::One
}

/// Parameter a statistic is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Beta,
    Rho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Large values are extreme.
    Right,
    /// Small values are extreme.
    Left,
    /// Large absolute values are extreme.
    TwoSidedAbs,
}

impl StatKind {
    pub fn target(&self) -> Target {
        match self {
            StatKind::SelfNormOls { .. } | StatKind::TnUnitRoot | StatKind::RhoScaled { .. } => Target::Rho,
            _ => Target::Beta,
        }
    }

    pub fn default_tail(&self) -> Tail {
        match self {
            StatKind::WaldIvx => Tail::Right,
            StatKind::PsiIvx | StatKind::JnIvx { .. } | StatKind::IvxT | StatKind::FmT => Tail::TwoSidedAbs,
            _ => Tail::Left,
        }
    }

    /// Estimator the statistic is built on.
    pub fn method(&self) -> Method {
        match self {
            StatKind::PsiIvx | StatKind::JnIvx { .. } | StatKind::WaldIvx | StatKind::IvxT => Method::Ivx,
            _ => Method::Ols,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StatKind::SelfNormOls { .. } => "self_norm_ols",
            StatKind::PsiIvx => "psi_ivx",
            StatKind::JnIvx { .. } => "jn_ivx",
            StatKind::WaldIvx => "wald_ivx",
            StatKind::IvxT => "ivx_t",
            StatKind::TnUnitRoot => "tn_unit_root",
            StatKind::RhoScaled { .. } => "rho_scaled",
            StatKind::FmT => "fm_t",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatSpec {
    pub kind: StatKind,
    pub null_beta: f64,
    pub null_rho: f64,
    pub ivx: IvxParams,
}

impl StatSpec {
    pub fn new(kind: StatKind) -> Self {
        StatSpec { kind, null_beta: 0.0, null_rho: 1.0, ivx: IvxParams::default() }
    }

    pub fn with_null_beta(mut self, b: f64) -> Self {
        self.null_beta = b;
        self
    }

    pub fn with_null_rho(mut self, r: f64) -> Self {
        self.null_rho = r;
        self
    }

    pub fn with_ivx(mut self, p: IvxParams) -> Self {
        self.ivx = p;
        self
    }

    /// Null value of the parameter the statistic targets.
    pub fn null(&self) -> f64 {
        match self.kind.target() {
            Target::Beta => self.null_beta,
            Target::Rho => self.null_rho,
        }
    }
}

/// Point estimate and statistic from one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluated {
    pub estimate: f64,
    pub statistic: f64,
}

/// Evaluates the statistic at the spec's own null.
pub fn evaluate(spec: &StatSpec, data: &TimeSeriesPair) -> Result<Evaluated> {
    evaluate_at(spec, data, spec.null())
}

/// Evaluates the statistic with `null` in place of the spec's null value.
pub fn evaluate_at(spec: &StatSpec, data: &TimeSeriesPair, null: f64) -> Result<Evaluated> {
    let (x, x0) = (&data.x[..], data.x0);
    match spec.kind {
        StatKind::SelfNormOls { power, studentize } => {
            let rho = ols_ar1(x, x0)?;
            Ok(Evaluated { estimate: rho, statistic: selfnorm_ols_stat(x, x0, null, power, studentize)? })
        }
        StatKind::TnUnitRoot => {
            let rho = ols_ar1(x, x0)?;
            Ok(Evaluated { estimate: rho, statistic: selfnorm_ols_stat(x, x0, null, Power::Half, true)? })
        }
        StatKind::RhoScaled { scale } => {
            let rho = ols_ar1(x, x0)?;
            Ok(Evaluated { estimate: rho, statistic: rho_scaled(rho, null, x.len(), scale)? })
        }
        StatKind::FmT => {
            let xm = nalgebra::DMatrix::from_column_slice(x.len(), 1, x);
            let fm = fm_ols_fit(&data.y, &xm, Bandwidth::Auto)?;
            Ok(Evaluated { estimate: fm.beta[0], statistic: fm.t_stat(null)? })
        }
        StatKind::PsiIvx | StatKind::JnIvx { .. } | StatKind::WaldIvx | StatKind::IvxT => {
            let fit = ivx_estimator(&data.y, x, x0, &spec.ivx)?;
            Ok(Evaluated { estimate: fit.beta_hat, statistic: statistic_from_fit(&spec.kind, &fit, null)? })
        }
    }
}

/// Statistic for the IVX kinds computed from an existing fit.
pub fn statistic_from_fit(kind: &StatKind, fit: &FitResult, beta0: f64) -> Result<f64> {
    match *kind {
        StatKind::PsiIvx => psi_stat(fit, fit.n, beta0),
        StatKind::JnIvx { power } => jn_stat(fit, beta0, power),
        StatKind::WaldIvx => ivx_wald(fit, beta0),
        StatKind::IvxT => ivx_t(fit, beta0),
        other => Err(Error::Contract(format!("{} is not computed from an IVX fit", other.name()))),
    }
}

/// (sum X_{t-1}^2)^a (rho_hat - rho0), divided by s_n when `studentize`.
pub fn selfnorm_ols_stat(x: &[f64], x0: f64, rho0: f64, power: Power, studentize: bool) -> Result<f64> {
    let rho = ols_ar1(x, x0)?;
    let xl = crate::dgp::lagged(x, x0);
    let sxx: f64 = xl.iter().map(|v| v * v).sum();
    let mut stat = power.apply(sxx) * (rho - rho0);
    if studentize {
        let ss: f64 = x.iter().zip(&xl).map(|(xt, xp)| (xt - rho * xp).powi(2)).sum();
        let s = (ss / x.len() as f64).sqrt();
        if !(s > 0.0) {
            return Err(Error::Degenerate("residual scale s_n is zero".into()));
        }
        stat /= s;
    }
    Ok(stat)
}

/// Scaled autoregressive estimation error.
pub fn rho_scaled(rho_hat: f64, rho0: f64, n: usize, scale: RhoScale) -> Result<f64> {
    let diff = rho_hat - rho0;
    let nf = n as f64;
    Ok(match scale {
        RhoScale::SqrtN => nf.sqrt() * diff,
        RhoScale::N => nf * diff,
        RhoScale::NOverSqrtM(m) => nf / (m as f64).sqrt() * diff,
        RhoScale::Explosive => explosive_normalized(rho_hat, rho0, n)?,
    })
}

/// (rho_hat^2 - 1)^{-1} |rho_hat|^n (rho_hat - rho0), evaluated in logs.
pub fn explosive_normalized(rho_hat: f64, rho0: f64, n: usize) -> Result<f64> {
    let diff = rho_hat - rho0;
    if diff == 0.0 {
        return Ok(0.0);
    }
    let denom = rho_hat * rho_hat - 1.0;
    if denom == 0.0 || rho_hat == 0.0 {
        return Err(Error::Degenerate(format!("explosive normalization undefined at rho_hat = {rho_hat}")));
    }
    let log_mag = n as f64 * rho_hat.abs().ln() - denom.abs().ln() + diff.abs().ln();
    Ok(denom.signum() * diff.signum() * log_mag.exp())
}

fn require_ivx(fit: &FitResult) -> Result<IvxParams> {
    match (fit.method, fit.ivx) {
        (Method::Ivx, Some(p)) => Ok(p),
        _ => Err(Error::Contract("statistic requires an IVX fit".into())),
    }
}

/// n^{(1+gamma_z)/2} (beta_hat - beta0).
pub fn psi_stat(fit: &FitResult, n: usize, beta0: f64) -> Result<f64> {
    let p = require_ivx(fit)?;
    Ok((n as f64).powf((1.0 + p.gamma_z) / 2.0) * (fit.beta_hat - beta0))
}

/// (sum Z_{t-1} X_{t-1})^a (beta_hat - beta0).
pub fn jn_stat(fit: &FitResult, beta0: f64, power: Power) -> Result<f64> {
    require_ivx(fit)?;
    let m = match power {
        Power::Half => fit.szx.abs().sqrt() * fit.szx.signum(),
        _ => power.apply(fit.szx),
    };
    Ok(m * (fit.beta_hat - beta0))
}

/// (beta_hat - beta0)^2 (sum ZX)^2 / (sigma_u^2 sum Z^2).
pub fn ivx_wald(fit: &FitResult, beta0: f64) -> Result<f64> {
    let t = ivx_t(fit, beta0)?;
    Ok(t * t)
}

/// Signed root of [`ivx_wald`].
pub fn ivx_t(fit: &FitResult, beta0: f64) -> Result<f64> {
    require_ivx(fit)?;
    let denom = fit.sigma2_u * fit.szz;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::Degenerate(format!("instrument energy times residual variance is {denom}")));
    }
    Ok((fit.beta_hat - beta0) * fit.szx / denom.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{lagged, simulate_predictive_system, DgpSpec, InnovationSpec, PersistenceSpec};
    use crate::estimators::{ivx_instrument, ols_fit};
    use crate::rng::{StreamKey, StreamSource};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sample(seed: u64, beta: f64, c: f64, n: usize) -> TimeSeriesPair {
        let spec = DgpSpec {
            beta,
            persistence: PersistenceSpec::LocalToUnity { c, gamma: 1.0 },
            innovations: InnovationSpec::correlated(-0.4),
            n,
            x0: 0.0,
        };
        simulate_predictive_system(&spec, &mut StreamSource::new(StreamKey::root(seed))).unwrap()
    }

    #[test]
    fn selfnorm_examples() {
        assert_eq!(selfnorm_ols_stat(&[1.0, 1.0], 0.0, 1.0, Power::Half, false).unwrap(), 0.0);
        assert_eq!(selfnorm_ols_stat(&[2.0, 4.0, 8.0], 1.0, 2.0, Power::Two, false).unwrap(), 0.0);
        // x=[1,3], x0=1: rho_hat = (1 + 3)/(1 + 1) = 2, sum x^2 = 2.
        let s = selfnorm_ols_stat(&[1.0, 3.0], 1.0, 1.0, Power::One, false).unwrap();
        assert_relative_eq!(s, 2.0);
        assert!(selfnorm_ols_stat(&[2.0, 4.0, 8.0], 1.0, 1.0, Power::One, true).is_err());
    }

    #[test]
    fn power_parsing() {
        assert_eq!(Power::try_from(0.5).unwrap(), Power::Half);
        assert!(Power::try_from(1.5).is_err());
    }

    fn ivx_fit(d: &TimeSeriesPair) -> FitResult {
        ivx_estimator(&d.y, &d.x, d.x0, &IvxParams::default()).unwrap()
    }

    #[test]
    fn psi_example() {
        let d = sample(1, 0.0, -5.0, 100);
        let mut fit = ivx_fit(&d);
        fit.beta_hat = 0.51;
        let v = psi_stat(&fit, 100, 0.5).unwrap();
        // 100^0.975 = exp(0.975 ln 100).
        let expected = (0.975 * 100f64.ln()).exp() * 0.01;
        assert_relative_eq!(v, expected, max_relative = 1e-12);
        assert!((v - 0.891).abs() < 5e-4);
        fit.beta_hat = 0.52;
        assert_relative_eq!(psi_stat(&fit, 100, 0.5).unwrap(), 2.0 * v, max_relative = 1e-12);
        fit.beta_hat = 0.5;
        assert_eq!(psi_stat(&fit, 100, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn jn_example() {
        let d = sample(2, 0.0, -5.0, 50);
        let mut fit = ivx_fit(&d);
        fit.szx = 2.0;
        fit.beta_hat = 1.5;
        assert_eq!(jn_stat(&fit, 1.0, Power::One).unwrap(), 1.0);
        assert_eq!(jn_stat(&fit, 1.5, Power::Two).unwrap(), 0.0);
        assert_eq!(jn_stat(&fit, 1.0, Power::Two).unwrap(), 2.0);
    }

    #[test]
    fn jn_equals_instrumented_true_errors() {
        for seed in 0..5 {
            let beta = 0.3;
            let d = sample(seed, beta, -3.0, 200);
            let fit = ivx_fit(&d);
            let jn = jn_stat(&fit, beta, Power::One).unwrap();
            let zl = lagged(fit.z.as_ref().unwrap(), 0.0);
            let u = d.u.as_ref().unwrap();
            let direct: f64 = zl.iter().zip(u).map(|(z, u)| z * u).sum();
            let rearranged: f64 =
                zl.iter().zip(d.y.iter().zip(d.x_lagged())).map(|(z, (y, xl))| z * (y - beta * xl)).sum();
            let scale: f64 = zl.iter().zip(u).map(|(z, u)| (z * u).abs()).sum();
            assert!((jn - direct).abs() <= 1e-9 * scale);
            assert!((jn - rearranged).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn ivx_requires_ivx_fit() {
        let d = sample(3, 0.0, -5.0, 50);
        let ols = ols_fit(&d.y, &d.x, d.x0).unwrap();
        assert!(matches!(psi_stat(&ols, 50, 0.0), Err(Error::Contract(_))));
        assert!(matches!(ivx_wald(&ols, 0.0), Err(Error::Contract(_))));
        assert!(matches!(jn_stat(&ols, 0.0, Power::One), Err(Error::Contract(_))));
    }

    #[test]
    fn wald_zero_at_estimate_and_instrument_scale_invariant() {
        let d = sample(4, 0.1, -10.0, 150);
        let fit = ivx_fit(&d);
        assert_eq!(ivx_wald(&fit, fit.beta_hat).unwrap(), 0.0);
        let w = ivx_wald(&fit, 0.0).unwrap();
        let lam = -3.7;
        let mut scaled = fit.clone();
        scaled.szx *= lam;
        scaled.szz *= lam * lam;
        assert_relative_eq!(ivx_wald(&scaled, 0.0).unwrap(), w, max_relative = 1e-12);
        let t = ivx_t(&fit, 0.0).unwrap();
        assert_relative_eq!(t * t, w, max_relative = 1e-12);
        assert_eq!(t.signum(), (fit.beta_hat * fit.szx).signum());
    }

    #[test]
    fn wald_matches_definition() {
        let d = sample(5, 0.0, -5.0, 120);
        let p = IvxParams::default();
        let fit = ivx_fit(&d);
        let z = ivx_instrument(&d.x, d.x0, &p);
        let zl = lagged(&z, 0.0);
        let xl = d.x_lagged();
        let szx: f64 = zl.iter().zip(&xl).map(|(a, b)| a * b).sum();
        let szz: f64 = zl.iter().map(|a| a * a).sum();
        let b: f64 = zl.iter().zip(&d.y).map(|(a, b)| a * b).sum::<f64>() / szx;
        let s2: f64 = d.y.iter().zip(&xl).map(|(y, x)| (y - b * x).powi(2)).sum::<f64>() / 120.0;
        let w = (b - 0.02).powi(2) * szx * szx / (s2 * szz);
        assert_relative_eq!(ivx_wald(&fit, 0.02).unwrap(), w, max_relative = 1e-10);
    }

    #[test]
    fn wald_invariant_to_joint_units() {
        let d = sample(6, 0.2, -5.0, 150);
        let w = ivx_wald(&ivx_fit(&d), 0.2).unwrap();
        let (a, b) = (3.0, 0.25);
        let ys: Vec<f64> = d.y.iter().map(|v| v * a).collect();
        let xs: Vec<f64> = d.x.iter().map(|v| v * b).collect();
        let fit = ivx_estimator(&ys, &xs, 0.0, &IvxParams::default()).unwrap();
        assert_relative_eq!(ivx_wald(&fit, 0.2 * a / b).unwrap(), w, max_relative = 1e-9);
    }

    #[test]
    fn explosive_normalization_in_logs() {
        // Direct evaluation where it does not overflow.
        let (r, r0, n): (f64, f64, usize) = (1.05, 1.04, 50);
        let direct = r.powi(n as i32) / (r * r - 1.0) * (r - r0);
        assert_relative_eq!(explosive_normalized(r, r0, n).unwrap(), direct, max_relative = 1e-12);
        // 1.2^4000 overflows on its own; the product does not.
        assert!(1.2f64.powi(4000).is_infinite());
        let v = explosive_normalized(1.2, 1.2 - 1e-10, 4000).unwrap();
        let expected_log = 4000.0 * 1.2f64.ln() - 0.44f64.ln() + (1.2f64 - (1.2 - 1e-10)).ln();
        assert!(v.is_finite() && v > 0.0);
        assert_relative_eq!(v.ln(), expected_log, max_relative = 1e-12);
        assert_eq!(explosive_normalized(1.2, 1.2, 100).unwrap(), 0.0);
        assert!(explosive_normalized(1.0, 0.9, 100).is_err());
    }

    #[test]
    fn rho_scaled_examples() {
        assert_relative_eq!(rho_scaled(0.9, 1.0, 100, RhoScale::N).unwrap(), -10.0, max_relative = 1e-12);
        assert_relative_eq!(rho_scaled(0.6, 0.5, 400, RhoScale::SqrtN).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(rho_scaled(0.99, 1.0, 400, RhoScale::NOverSqrtM(4)).unwrap(), -2.0, max_relative = 1e-10);
    }

    #[test]
    fn stat_kind_json() {
        let k: StatKind = serde_json::from_str(r#"{"kind":"jn_ivx"}"#).unwrap();
        assert_eq!(k, StatKind::JnIvx { power: Power::One });
        let k: StatKind = serde_json::from_str(r#"{"kind":"self_norm_ols","power":0.5,"studentize":true}"#).unwrap();
        assert_eq!(k, StatKind::SelfNormOls { power: Power::Half, studentize: true });
        let k: StatKind = serde_json::from_str(r#"{"kind":"rho_scaled","scale":{"n_over_sqrt_m":64}}"#).unwrap();
        assert_eq!(k, StatKind::RhoScaled { scale: RhoScale::NOverSqrtM(64) });
        assert!(serde_json::from_str::<StatKind>(r#"{"kind":"jn_ivx","power":3}"#).is_err());
    }

    proptest! {
        #[test]
        fn statistics_vanish_at_estimate(seed in 0u64..300) {
            let d = sample(seed, 0.05, -5.0, 80);
            let fit = ivx_fit(&d);
            prop_assert_eq!(psi_stat(&fit, 80, fit.beta_hat).unwrap(), 0.0);
            prop_assert_eq!(jn_stat(&fit, fit.beta_hat, Power::Two).unwrap(), 0.0);
            prop_assert_eq!(ivx_wald(&fit, fit.beta_hat).unwrap(), 0.0);
            let rho = ols_ar1(&d.x, d.x0).unwrap();
            for p in [Power::Half, Power::One, Power::Two] {
                prop_assert_eq!(selfnorm_ols_stat(&d.x, d.x0, rho, p, true).unwrap(), 0.0);
            }
            for s in [RhoScale::SqrtN, RhoScale::N, RhoScale::NOverSqrtM(3), RhoScale::Explosive] {
                prop_assert_eq!(rho_scaled(rho, rho, 80, s).unwrap(), 0.0);
            }
        }
    }
}
