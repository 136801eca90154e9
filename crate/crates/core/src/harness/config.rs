use serde::{Deserialize, Serialize};

use crate::bootstrap::{BootstrapScheme, Recenter, SchemeKind};
use crate::dgp::{DgpSpec, InnovationSpec, PersistenceSpec};
use crate::error::{Error, Result};
use crate::estimators::{IvxParams, Method};
use crate::limitdist::{ReferenceKind, ReferenceSpec};
use crate::statistics::{StatKind, StatSpec, Tail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Rejection rates under the null or local alternatives.
    Size,
    /// KS distance of bootstrap p-values to Uniform[0, 1].
    PvalueUniformity,
    /// KS distance of a finite-sample statistic to its limit.
    LimitMatch,
    /// Dispersion of a bootstrap quantile across samples.
    Invalidity,
    /// Block bootstrap of the unit-root statistic against its limit.
    Rbb,
    /// Bootstrap distribution against the Monte Carlo law of the statistic.
    BootstrapAgreement,
    /// Block-moderate autoregression against N(0, -2c).
    BlockSmoothing,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Size => "size",
            ExperimentKind::PvalueUniformity => "pvalue_uniformity",
            ExperimentKind::LimitMatch => "limit_match",
            ExperimentKind::Invalidity => "invalidity",
            ExperimentKind::Rbb => "rbb",
            ExperimentKind::BootstrapAgreement => "bootstrap_agreement",
            ExperimentKind::BlockSmoothing => "block_smoothing",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecenterMode {
    NullImposed,
    EstimateCentered,
}

/// Reference limit distribution as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_xx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub studentized: Option<bool>,
    #[serde(rename = "N", default = "default_steps")]
    pub n_steps: usize,
    #[serde(rename = "M", default = "default_draws")]
    pub draws: usize,
}

fn default_steps() -> usize {
    2000
}
fn default_draws() -> usize {
    20_000
}

impl ReferenceConfig {
    pub fn named(kind: &str) -> Self {
        ReferenceConfig {
            kind: kind.into(),
            c: None,
            gamma: None,
            omega_xx: None,
            studentized: None,
            n_steps: default_steps(),
            draws: default_draws(),
        }
    }

    pub fn to_spec(&self, c_z: f64) -> Result<ReferenceSpec> {
        let kind = reference_kind(&self.kind, self.c, self.gamma, c_z, self.omega_xx, self.studentized)
            .map_err(|msg| Error::config("reference.kind", msg))?;
        let spec = ReferenceSpec { kind, n_steps: self.n_steps, draws: self.draws };
        spec.validate().map_err(|e| Error::config("reference", e.to_string()))?;
        Ok(spec)
    }
}

/// Resolves a functional name and its optional parameters.
pub fn reference_kind(
    name: &str,
    c: Option<f64>,
    gamma: Option<f64>,
    c_z: f64,
    omega_xx: Option<f64>,
    studentized: Option<bool>,
) -> std::result::Result<ReferenceKind, String> {
    Ok(match name.replace('-', "_").as_str() {
        "df_xi" | "dfxi" => ReferenceKind::DfXi,
        "df_ratio" | "dfratio" => ReferenceKind::DfRatio,
        "ou_ratio" | "ouratio" => ReferenceKind::OuRatio { c: c.ok_or("ou_ratio needs c")? },
        "psi_gamma" | "psigamma" => ReferenceKind::PsiGamma { gamma },
        "mixed_gaussian_ivx" | "mixed_gaussian" => ReferenceKind::MixedGaussianIvx {
            c: c.unwrap_or(0.0),
            c_z,
            omega_xx: omega_xx.unwrap_or(1.0),
            studentized: studentized.unwrap_or(true),
        },
        "explosive_cauchy" | "cauchy" => ReferenceKind::ExplosiveCauchy,
        "v_over_u" | "voveru" => ReferenceKind::VOverU,
        "int_w2" | "intw2" => ReferenceKind::IntW2,
        other => return Err(format!("unknown reference functional `{other}`")),
    })
}

fn zeros() -> Vec<f64> {
    vec![0.0]
}
fn ones() -> Vec<f64> {
    vec![1.0]
}
fn one() -> f64 {
    1.0
}
fn default_r() -> usize {
    1000
}
fn default_alpha() -> f64 {
    0.05
}
fn default_cz() -> f64 {
    -1.0
}
fn default_gz() -> f64 {
    0.95
}
fn default_samples() -> usize {
    100
}
fn default_quantile() -> f64 {
    0.05
}
fn wald() -> StatKind {
    StatKind::WaldIvx
}

/// Default bootstrap size when a scheme is given without B.
pub const DEFAULT_B: usize = 399;

/// A Monte Carlo experiment. List-valued keys span a grid of cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "zeros")]
    pub c: Vec<f64>,
    #[serde(default = "ones")]
    pub gamma: Vec<f64>,
    /// Fixed autoregressive roots; replaces the c/gamma grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    #[serde(default = "zeros")]
    pub beta: Vec<f64>,
    /// Local alternatives beta = delta / n^{(1+gamma_z)/2}; replaces `beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    #[serde(default = "zeros")]
    pub sigma_uv: Vec<f64>,
    #[serde(default = "zeros")]
    pub rho_u: Vec<f64>,
    #[serde(default = "one")]
    pub sigma_u: f64,
    #[serde(default = "one")]
    pub sigma_v: f64,
    #[serde(default = "ones")]
    pub ma_weights: Vec<f64>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "wald")]
    pub stat: StatKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default)]
    pub null_beta: f64,
    /// Null autoregressive root; defaults to each cell's true root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Tail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recenter: Option<RecenterMode>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(rename = "R", default = "default_r")]
    pub r: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
    #[serde(default = "default_cz")]
    pub c_z: f64,
    #[serde(default = "default_gz")]
    pub gamma_z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceConfig>,
    /// Outer samples S for experiments that bootstrap each sample.
    #[serde(rename = "S", default = "default_samples")]
    pub samples: usize,
    /// Quantile level tracked by the invalidity experiment.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    /// Block counts m for block smoothing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,
    /// Block length K for block smoothing.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

/// One point of the parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub n: usize,
    /// Reported c; for fixed roots n(rho - 1).
    pub c: f64,
    pub gamma: f64,
    pub rho: f64,
    pub beta: f64,
    pub sigma_uv: f64,
    pub rho_u: f64,
    pub persistence: PersistenceSpec,
    /// Number of blocks for block smoothing.
    pub m: Option<usize>,
}

impl ExperimentConfig {
    /// Minimal config for `experiment` with every other key at its default.
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            n: Vec::new(),
            c: zeros(),
            gamma: ones(),
            rho: None,
            beta: zeros(),
            delta: None,
            sigma_uv: zeros(),
            rho_u: zeros(),
            sigma_u: 1.0,
            sigma_v: 1.0,
            ma_weights: ones(),
            x0: 0.0,
            stat: wald(),
            method: None,
            null_beta: 0.0,
            null_rho: None,
            tail: None,
            scheme: None,
            recenter: None,
            b: None,
            r: default_r(),
            alpha: default_alpha(),
            seed,
            c_z: default_cz(),
            gamma_z: default_gz(),
            reference: None,
            samples: default_samples(),
            quantile: default_quantile(),
            m: None,
            k: None,
        }
    }

    pub fn ivx(&self) -> IvxParams {
        IvxParams { c_z: self.c_z, gamma_z: self.gamma_z }
    }

    pub fn method(&self) -> Method {
        self.method.unwrap_or_else(|| self.stat.method())
    }

    pub fn tail(&self) -> Tail {
        self.tail.unwrap_or_else(|| self.stat.default_tail())
    }

    pub fn bootstrap_size(&self) -> usize {
        self.b.unwrap_or(DEFAULT_B)
    }

    pub fn recenter_mode(&self) -> RecenterMode {
        self.recenter.unwrap_or(match self.experiment {
            ExperimentKind::Invalidity => RecenterMode::EstimateCentered,
            _ => RecenterMode::NullImposed,
        })
    }

    pub fn stat_spec(&self, cell: &Cell) -> StatSpec {
        StatSpec {
            kind: self.stat,
            null_beta: self.null_beta,
            null_rho: self.null_rho.unwrap_or(cell.rho),
            ivx: self.ivx(),
        }
    }

    /// Scheme for `cell`, or `None` for asymptotic tests.
    pub fn scheme_for(&self, cell: &Cell) -> Option<BootstrapScheme> {
        let kind = self.scheme?;
        let recenter = match self.recenter_mode() {
            RecenterMode::NullImposed => Recenter::NullImposed(self.stat_spec(cell).null()),
            RecenterMode::EstimateCentered => Recenter::EstimateCentered,
        };
        Some(BootstrapScheme { kind, recenter })
    }

    pub fn reference_spec(&self) -> Result<Option<ReferenceSpec>> {
        self.reference.as_ref().map(|r| r.to_spec(self.c_z)).transpose()
    }

    pub fn innovations(&self, sigma_uv: f64, rho_u: f64) -> InnovationSpec {
        InnovationSpec {
            sigma: [[self.sigma_u * self.sigma_u, sigma_uv], [sigma_uv, self.sigma_v * self.sigma_v]],
            ma_weights: self.ma_weights.clone(),
            error_ar: rho_u,
        }
    }

    pub fn dgp(&self, cell: &Cell) -> DgpSpec {
        DgpSpec {
            beta: cell.beta,
            persistence: cell.persistence,
            innovations: self.innovations(cell.sigma_uv, cell.rho_u),
            n: cell.n,
            x0: self.x0,
        }
    }

    /// Checks every key against its domain; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::config(path, msg));
        if !(self.gamma_z > 0.0 && self.gamma_z < 1.0) {
            return bad("gamma_z", format!("must lie in (0, 1), got {}", self.gamma_z));
        }
        if !(self.c_z < 0.0 && self.c_z.is_finite()) {
            return bad("c_z", format!("must be negative, got {}", self.c_z));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", format!("must lie in (0, 1), got {}", self.alpha));
        }
        if self.r == 0 {
            return bad("R", "must be at least 1".into());
        }
        if self.samples == 0 {
            return bad("S", "must be at least 1".into());
        }
        if !(self.quantile >= 0.0 && self.quantile <= 1.0) {
            return bad("quantile", format!("must lie in [0, 1], got {}", self.quantile));
        }
        if self.b.is_some() && self.scheme.is_none() {
            return bad("B", "given without a bootstrap scheme".into());
        }
        if self.b == Some(0) {
            return bad("B", "must be at least 1".into());
        }
        for (i, g) in self.gamma.iter().enumerate() {
            if !(*g > 0.0 && *g <= 1.0) {
                return bad(&format!("gamma[{i}]"), format!("must lie in (0, 1], got {g}"));
            }
        }
        for (i, r) in self.rho_u.iter().enumerate() {
            if !(*r > -1.0 && *r < 1.0) {
                return bad(&format!("rho_u[{i}]"), format!("must lie in (-1, 1), got {r}"));
            }
        }
        if !(self.sigma_u > 0.0 && self.sigma_v > 0.0) {
            return bad("sigma_u", "innovation scales must be positive".into());
        }
        for (i, s) in self.sigma_uv.iter().enumerate() {
            if let Err(e) = self.innovations(*s, 0.0).validate() {
                return bad(&format!("sigma_uv[{i}]"), e.to_string());
            }
        }
        if let Err(e) = self.innovations(0.0, 0.0).validate() {
            return bad("ma_weights", e.to_string());
        }
        if let Some(r) = &self.reference {
            r.to_spec(self.c_z)?;
        }
        if let Some(SchemeKind::ResidualBlock { b, .. }) = self.scheme {
            if b == 0 {
                return bad("scheme.b", "block length must be positive".into());
            }
        }
        let needs_scheme = matches!(
            self.experiment,
            ExperimentKind::PvalueUniformity
                | ExperimentKind::Invalidity
                | ExperimentKind::Rbb
                | ExperimentKind::BootstrapAgreement
        );
        if needs_scheme && self.scheme.is_none() {
            return bad("scheme", format!("experiment `{}` needs a bootstrap scheme", self.experiment.as_str()));
        }
        if self.experiment == ExperimentKind::Rbb && !matches!(self.scheme, Some(SchemeKind::ResidualBlock { .. })) {
            return bad("scheme", "the rbb experiment uses the residual_block scheme".into());
        }
        if self.experiment == ExperimentKind::BlockSmoothing {
            match (&self.m, self.k) {
                (Some(m), Some(k)) if !m.is_empty() && k > 0 && m.iter().all(|&v| v > 0) => {}
                _ => return bad("m", "block smoothing needs a nonempty m list and K > 0".into()),
            }
            for (i, c) in self.c.iter().enumerate() {
                if !(*c < 0.0) {
                    return bad(&format!("c[{i}]"), format!("block smoothing needs c < 0, got {c}"));
                }
            }
        } else {
            if self.n.is_empty() {
                return bad("n", "grid is empty".into());
            }
            for (i, n) in self.n.iter().enumerate() {
                if *n < 4 {
                    return bad(&format!("n[{i}]"), format!("must be at least 4, got {n}"));
                }
            }
        }
        let empty = [
            ("c", self.c.is_empty()),
            ("gamma", self.gamma.is_empty()),
            ("beta", self.beta.is_empty()),
            ("sigma_uv", self.sigma_uv.is_empty()),
            ("rho_u", self.rho_u.is_empty()),
            ("rho", self.rho.as_ref().is_some_and(|r| r.is_empty())),
            ("delta", self.delta.as_ref().is_some_and(|d| d.is_empty())),
        ];
        if let Some((key, _)) = empty.iter().find(|(_, e)| *e) {
            return bad(key, "grid is empty".into());
        }
        Ok(())
    }

    /// Grid cells in a fixed order: n, persistence, beta, sigma_uv, rho_u.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut persist: Vec<(Option<usize>, PersistenceSpec, f64, f64)> = Vec::new();
        let mut ns: Vec<Option<usize>> = self.n.iter().map(|&n| Some(n)).collect();
        if self.experiment == ExperimentKind::BlockSmoothing {
            let k = self.k.unwrap_or(0);
            ns = vec![None];
            for &c in &self.c {
                for &m in self.m.as_deref().unwrap_or(&[]) {
                    persist.push((Some(m * k), PersistenceSpec::BlockModerate { c, m, k }, c, 1.0));
                }
            }
        } else if let Some(rhos) = &self.rho {
            for &rho in rhos {
                persist.push((None, PersistenceSpec::Fixed { rho }, f64::NAN, 1.0));
            }
        } else {
            for &c in &self.c {
                for &gamma in &self.gamma {
                    persist.push((None, PersistenceSpec::LocalToUnity { c, gamma }, c, gamma));
                }
            }
        }
        let mut cells = Vec::new();
        for n_opt in &ns {
            for (n_fixed, p, c, gamma) in &persist {
                let n = n_opt.or(*n_fixed).unwrap_or(0);
                let rho = p.rho(n).map_err(|e| Error::config("c", e.to_string()))?;
                let c = if c.is_nan() { n as f64 * (rho - 1.0) } else { *c };
                let m = match p {
                    PersistenceSpec::BlockModerate { m, .. } => Some(*m),
                    _ => None,
                };
                let betas: Vec<f64> = match &self.delta {
                    Some(ds) => ds.iter().map(|d| d / (n as f64).powf((1.0 + self.gamma_z) / 2.0)).collect(),
                    None => self.beta.clone(),
                };
                for &beta in &betas {
                    for &sigma_uv in &self.sigma_uv {
                        for &rho_u in &self.rho_u {
                            cells.push(Cell {
                                id: cells.len(),
                                n,
                                c,
                                gamma: *gamma,
                                rho,
                                beta,
                                sigma_uv,
                                rho_u,
                                persistence: *p,
                                m,
                            });
                        }
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::config("n", "grid is empty"));
        }
        Ok(cells)
    }
}
