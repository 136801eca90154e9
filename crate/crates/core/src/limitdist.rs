//! Brownian motion, Ornstein-Uhlenbeck paths and the limit functionals of
//! the autoregressive and predictive-regression statistics.
//!
//! Stochastic integrals are left-point (Ito) sums and time integrals are
//! left Riemann sums on the same grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::rng::{Channel, DrawSource, StreamKey, StreamSource};

/// Brownian path on {0, 1/N, ..., 1}.
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrid {
    pub dt: f64,
    /// Increments W(t_{i+1}) - W(t_i), length N.
    pub dw: Vec<f64>,
    /// Levels W(t_i), length N + 1, starting at 0.
    pub w: Vec<f64>,
}

impl PathGrid {
    pub fn from_increments(dw: Vec<f64>) -> Self {
        let n = dw.len();
        let mut w = Vec::with_capacity(n + 1);
        let mut level = 0.0;
        w.push(level);
        for d in &dw {
            level += d;
            w.push(level);
        }
        PathGrid { dt: 1.0 / n as f64, dw, w }
    }

    pub fn steps(&self) -> usize {
        self.dw.len()
    }

    pub fn quadratic_variation(&self) -> f64 {
        self.dw.iter().map(|d| d * d).sum()
    }

    pub fn end(&self) -> f64 {
        *self.w.last().unwrap_or(&0.0)
    }
}

/// Brownian path with `n_steps` Gaussian increments of variance 1/N.
pub fn simulate_brownian(n_steps: usize, source: &mut dyn DrawSource) -> Result<PathGrid> {
    if n_steps == 0 {
        return Err(Error::Domain("a Brownian grid needs at least one step".into()));
    }
    let sd = (1.0 / n_steps as f64).sqrt();
    let z = source.normals(Channel::Brownian, n_steps)?;
    Ok(PathGrid::from_increments(z.into_iter().map(|v| v * sd).collect()))
}

/// Variance of the exact one-step OU innovation, (e^{2c dt} - 1) / (2c).
pub fn ou_step_variance(c: f64, dt: f64) -> f64 {
    let x = c * dt;
    if x.abs() < 1e-8 {
        dt * (1.0 + x + 2.0 / 3.0 * x * x)
    } else {
        (2.0 * x).exp_m1() / (2.0 * c)
    }
}

/// OU levels J_c(t_i), i = 0..N, driven by the increments of `path`.
///
/// Each exact-discretization shock is the path increment rescaled to the
/// exact variance, so c = 0 reproduces the Brownian levels exactly.
pub fn simulate_ou(c: f64, path: &PathGrid) -> Vec<f64> {
    let dt = path.dt;
    let a = (c * dt).exp();
    let scale = (ou_step_variance(c, dt) / dt).sqrt();
    let mut j = Vec::with_capacity(path.steps() + 1);
    let mut level = 0.0;
    j.push(level);
    for d in &path.dw {
        level = a * level + scale * d;
        j.push(level);
    }
    j
}

/// sum_i f(t_i) (W(t_{i+1}) - W(t_i)); `integrand` is given on the N + 1
/// grid points and its last value is unused.
pub fn ito_left_sum(path: &PathGrid, integrand: &[f64]) -> Result<f64> {
    check_grid(path, integrand)?;
    Ok(integrand.iter().zip(&path.dw).map(|(f, d)| f * d).sum())
}

/// sum_i f(t_i) dt over the first N grid points.
pub fn riemann_left(path: &PathGrid, integrand: &[f64]) -> Result<f64> {
    check_grid(path, integrand)?;
    Ok(integrand[..path.steps()].iter().sum::<f64>() * path.dt)
}

fn check_grid(path: &PathGrid, f: &[f64]) -> Result<()> {
    if f.len() != path.steps() + 1 {
        return Err(Error::Domain(format!("integrand has {} points but the grid has {}", f.len(), path.steps() + 1)));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceKind {
    /// (W(1)^2 - 1) / 2 / sqrt(int W^2).
    DfXi,
    /// int W dW / int W^2.
    DfRatio,
    /// int J_c dW / int J_c^2.
    OuRatio { c: f64 },
    /// Weighted unit-root functional with weight (1 - t + t e^{-2 gamma})^{-1};
    /// `gamma: null` is the infinite limit with weight (1 - t)^{-1}.
    PsiGamma { gamma: Option<f64> },
    /// Limit of the IVX estimator. Studentized, it is standard normal.
    /// Otherwise the limit of n^{(1+gamma_z)/2}(beta_ivx - beta) with
    /// sigma_uu = 1 and long-run regressor variance `omega_xx`.
    MixedGaussianIvx { c: f64, c_z: f64, omega_xx: f64, studentized: bool },
    /// Standard Cauchy by inversion.
    ExplosiveCauchy,
    /// Ratio of two independent standard normals.
    VOverU,
    /// int W^2.
    IntW2,
}

impl ReferenceKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReferenceKind::DfXi => "df_xi",
            ReferenceKind::DfRatio => "df_ratio",
            ReferenceKind::OuRatio { .. } => "ou_ratio",
            ReferenceKind::PsiGamma { .. } => "psi_gamma",
            ReferenceKind::MixedGaussianIvx { .. } => "mixed_gaussian_ivx",
            ReferenceKind::ExplosiveCauchy => "explosive_cauchy",
            ReferenceKind::VOverU => "v_over_u",
            ReferenceKind::IntW2 => "int_w2",
        }
    }

    /// Closed-form CDF when the functional has one.
    pub fn analytic_cdf(&self) -> Option<fn(f64) -> f64> {
        match self {
            ReferenceKind::ExplosiveCauchy | ReferenceKind::VOverU => Some(cauchy_cdf),
            ReferenceKind::MixedGaussianIvx { studentized: true, .. } => Some(normal_cdf),
            _ => None,
        }
    }
}

pub fn cauchy_cdf(x: f64) -> f64 {
    0.5 + x.atan() / std::f64::consts::PI
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    #[serde(flatten)]
    pub kind: ReferenceKind,
    /// Grid steps N.
    #[serde(rename = "N", default = "default_steps")]
    pub n_steps: usize,
    /// Number of draws M.
    #[serde(rename = "M", default = "default_draws")]
    pub draws: usize,
}

fn default_steps() -> usize {
    2000
}

fn default_draws() -> usize {
    20_000
}

impl ReferenceSpec {
    pub fn new(kind: ReferenceKind) -> Self {
        ReferenceSpec { kind, n_steps: default_steps(), draws: default_draws() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 16 {
            return Err(Error::Domain(format!("grid needs N >= 16, got {}", self.n_steps)));
        }
        if self.draws == 0 {
            return Err(Error::Domain("reference needs M >= 1".into()));
        }
        if let ReferenceKind::MixedGaussianIvx { c_z, omega_xx, .. } = self.kind {
            if !(c_z < 0.0) || !(omega_xx > 0.0) {
                return Err(Error::Domain("mixed Gaussian reference needs c_z < 0 and omega_xx > 0".into()));
            }
        }
        if let ReferenceKind::PsiGamma { gamma: Some(g) } = self.kind {
            if !(g >= 0.0) {
                return Err(Error::Domain(format!("psi gamma must be nonnegative, got {g}")));
            }
        }
        Ok(())
    }
}

fn squares(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x * x).collect()
}

fn uniform_open(source: &mut dyn DrawSource) -> Result<f64> {
    const SPAN: usize = 1 << 53;
    let k = source.indices(Channel::Auxiliary, 1, SPAN)?[0];
    Ok((k as f64 + 0.5) / SPAN as f64)
}

/// One draw of the functional named by `spec`.
pub fn functional_draw(spec: &ReferenceSpec, source: &mut dyn DrawSource) -> Result<f64> {
    spec.validate()?;
    let n = spec.n_steps;
    match spec.kind {
        ReferenceKind::DfXi => {
            let p = simulate_brownian(n, source)?;
            let iw2 = riemann_left(&p, &squares(&p.w))?;
            Ok(0.5 * (p.end() * p.end() - 1.0) / iw2.sqrt())
        }
        ReferenceKind::DfRatio => {
            let p = simulate_brownian(n, source)?;
            Ok(ito_left_sum(&p, &p.w)? / riemann_left(&p, &squares(&p.w))?)
        }
        ReferenceKind::OuRatio { c } => {
            let p = simulate_brownian(n, source)?;
            let j = simulate_ou(c, &p);
            Ok(ito_left_sum(&p, &j)? / riemann_left(&p, &squares(&j))?)
        }
        ReferenceKind::PsiGamma { gamma } => {
            let p = simulate_brownian(n, source)?;
            let decay = gamma.map_or(0.0, |g| (-2.0 * g).exp());
            // The infinite-gamma weight blows up at t = 1; drop the last cell.
            let cells = if gamma.is_none() { n - 1 } else { n };
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..cells {
                let t = i as f64 * p.dt;
                let g = 1.0 / (1.0 - t + t * decay);
                num += g * p.w[i] * p.dw[i];
                den += g * g * p.w[i] * p.w[i] * p.dt;
            }
            Ok(num / den.sqrt())
        }
        ReferenceKind::MixedGaussianIvx { c, c_z, omega_xx, studentized } => {
            if studentized {
                return Ok(source.normals(Channel::Auxiliary, 1)?[0]);
            }
            let p = simulate_brownian(n, source)?;
            let j1 = *simulate_ou(c, &p).last().unwrap();
            let w2 = omega_xx;
            let denom = -(w2 * (j1 * j1 - 1.0) / 2.0 + w2) / c_z;
            let z = source.normals(Channel::Auxiliary, 1)?[0];
            Ok(z * (-w2 / (2.0 * c_z)).sqrt() / denom)
        }
        ReferenceKind::ExplosiveCauchy => {
            let u = uniform_open(source)?;
            Ok((std::f64::consts::PI * (u - 0.5)).tan())
        }
        ReferenceKind::VOverU => {
            let z = source.normals(Channel::Auxiliary, 2)?;
            Ok(z[0] / z[1])
        }
        ReferenceKind::IntW2 => {
            let p = simulate_brownian(n, source)?;
            riemann_left(&p, &squares(&p.w))
        }
    }
}

/// M independent draws; draw i uses the substream `key.child(i)`.
pub fn reference_distribution(spec: &ReferenceSpec, key: StreamKey) -> Result<EmpiricalDistribution> {
    spec.validate()?;
    let draws = (0..spec.draws)
        .into_par_iter()
        .map(|i| functional_draw(spec, &mut StreamSource::new(key.child(i as u64))))
        .collect::<Result<Vec<f64>>>()?;
    Ok(EmpiricalDistribution::new(draws, spec.kind.name()))
}

/// Quantile levels used for exported tables.
pub const TABLE_LEVELS: [f64; 15] =
    [0.001, 0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.975, 0.99, 0.995, 0.999];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::FixedDraws;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn path(seed: u64, n: usize) -> PathGrid {
        simulate_brownian(n, &mut StreamSource::new(StreamKey::root(seed))).unwrap()
    }

    #[test]
    fn zero_increments_give_zero_paths() {
        let mut src = FixedDraws::new().constant_normals(Channel::Brownian, 0.0);
        let p = simulate_brownian(50, &mut src).unwrap();
        assert!(p.w.iter().all(|&v| v == 0.0));
        assert!(simulate_ou(-3.0, &p).iter().all(|&v| v == 0.0));
        assert_eq!(p.w.len(), 51);
        assert_eq!(p.w[0], 0.0);
    }

    #[test]
    fn ou_at_zero_is_brownian() {
        let p = path(1, 500);
        assert_eq!(simulate_ou(0.0, &p), p.w);
    }

    #[test]
    fn ou_step_variance_analytic() {
        for &(c, dt) in &[(-1.0f64, 0.01f64), (2.0, 0.5), (-20.0, 1e-3), (-5.0, 1.0)] {
            let exact = ((2.0 * c * dt).exp() - 1.0) / (2.0 * c);
            assert_relative_eq!(ou_step_variance(c, dt), exact, max_relative = 1e-12);
        }
        // Continuity through c = 0.
        assert_eq!(ou_step_variance(0.0, 0.01), 0.01);
        for &c in &[1e-7, -1e-7, 1e-9] {
            let dt = 0.05;
            let series = ou_step_variance(c, dt);
            let x: f64 = 2.0 * c * dt;
            let reference = x.exp_m1() / (2.0 * c);
            assert_relative_eq!(series, reference, max_relative = 1e-12);
        }
        let below = ou_step_variance(-1e-6 / 0.01 * 0.999, 0.01);
        let above = ou_step_variance(-1e-6 / 0.01 * 1.001, 0.01);
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn ito_sum_examples() {
        let p = path(2, 1000);
        assert_eq!(ito_left_sum(&p, &vec![0.0; 1001]).unwrap(), 0.0);
        assert_relative_eq!(ito_left_sum(&p, &vec![1.0; 1001]).unwrap(), p.end(), max_relative = 1e-12);
        let lhs = ito_left_sum(&p, &p.w).unwrap();
        let rhs = (p.end() * p.end() - p.quadratic_variation()) / 2.0;
        assert!((lhs - rhs).abs() < 1e-10);
        assert!(ito_left_sum(&p, &[0.0; 10]).is_err());
    }

    #[test]
    fn quadratic_variation_concentrates() {
        let qv = path(3, 10_000).quadratic_variation();
        assert!((0.96..=1.04).contains(&qv), "{qv}");
    }

    #[test]
    fn ou_ratio_at_zero_equals_df_ratio() {
        let key = StreamKey::root(4);
        let df = functional_draw(
            &ReferenceSpec { kind: ReferenceKind::DfRatio, n_steps: 300, draws: 1 },
            &mut StreamSource::new(key),
        );
        let ou = functional_draw(
            &ReferenceSpec { kind: ReferenceKind::OuRatio { c: 0.0 }, n_steps: 300, draws: 1 },
            &mut StreamSource::new(key),
        );
        assert_eq!(df.unwrap(), ou.unwrap());
    }

    #[test]
    fn single_draw_reference() {
        let spec = ReferenceSpec { kind: ReferenceKind::DfXi, n_steps: 64, draws: 1 };
        let d = reference_distribution(&spec, StreamKey::root(5)).unwrap();
        assert_eq!(d.len(), 1);
        let again = reference_distribution(&spec, StreamKey::root(5)).unwrap();
        assert_eq!(d.draws(), again.draws());
    }

    #[test]
    fn spec_validation() {
        assert!(ReferenceSpec { kind: ReferenceKind::DfXi, n_steps: 8, draws: 10 }.validate().is_err());
        assert!(ReferenceSpec { kind: ReferenceKind::DfXi, n_steps: 16, draws: 0 }.validate().is_err());
        let json = r#"{"kind":"ou_ratio","c":-5,"N":100}"#;
        let spec: ReferenceSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind, ReferenceKind::OuRatio { c: -5.0 });
        assert_eq!((spec.n_steps, spec.draws), (100, 20_000));
    }

    #[test]
    fn analytic_cdfs() {
        assert_eq!(cauchy_cdf(0.0), 0.5);
        assert_relative_eq!(cauchy_cdf(1.0), 0.75, max_relative = 1e-15);
        assert_relative_eq!(normal_cdf(1.959963984540054), 0.975, max_relative = 1e-10);
    }

    proptest! {
        #[test]
        fn ito_identity_holds_on_every_path(seed in 0u64..10_000, n in 16usize..3000) {
            let p = path(seed, n);
            let lhs = ito_left_sum(&p, &p.w).unwrap();
            let rhs = (p.end() * p.end() - p.quadratic_variation()) / 2.0;
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }
    }
}
