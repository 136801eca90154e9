use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Cell, ExperimentConfig};
use crate::rng::GENERATOR_NAME;

/// Fixed CSV column order for rows.
pub const ROW_COLUMNS: [&str; 15] = [
    "experiment",
    "cell_id",
    "n",
    "c",
    "gamma",
    "beta",
    "sigma_uv",
    "rho_u",
    "method",
    "scheme",
    "rep",
    "estimate",
    "statistic",
    "pvalue",
    "reject",
];

/// Fixed CSV column order for aggregates.
pub const AGGREGATE_COLUMNS: [&str; 10] =
    ["cell_id", "rejection_rate", "se", "ks", "excluded", "mean", "variance", "count", "label", "n"];

/// One replication (or one outer sample) of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub cell_id: usize,
    pub n: usize,
    pub c: f64,
    pub gamma: f64,
    pub beta: f64,
    pub sigma_uv: f64,
    pub rho_u: f64,
    pub method: String,
    pub scheme: String,
    pub rep: usize,
    pub estimate: Option<f64>,
    pub statistic: Option<f64>,
    pub pvalue: Option<f64>,
    pub reject: Option<bool>,
}

impl Row {
    pub(crate) fn blank(cfg: &ExperimentConfig, cell: &Cell, rep: usize) -> Self {
        Row {
            experiment: cfg.experiment.as_str().into(),
            cell_id: cell.id,
            n: cell.n,
            c: cell.c,
            gamma: cell.gamma,
            beta: cell.beta,
            sigma_uv: cell.sigma_uv,
            rho_u: cell.rho_u,
            method: cfg.method().as_str().into(),
            scheme: cfg.scheme.map_or("", |s| s.name()).into(),
            rep,
            estimate: None,
            statistic: None,
            pvalue: None,
            reject: None,
        }
    }
}

/// Per-cell summary. Which fields are filled depends on the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub cell_id: usize,
    /// Mean of the reject flags.
    pub rejection_rate: Option<f64>,
    /// Binomial standard error sqrt(p(1-p)/R).
    pub se: Option<f64>,
    pub ks: Option<f64>,
    pub excluded: usize,
    /// Mean and sample variance of the column named by `label`.
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    /// Rows that entered the summary.
    pub count: usize,
    pub label: String,
    pub n: usize,
}

impl Aggregate {
    pub(crate) fn new(cell: &Cell, label: &str) -> Self {
        Aggregate {
            cell_id: cell.id,
            rejection_rate: None,
            se: None,
            ks: None,
            excluded: 0,
            mean: None,
            variance: None,
            count: 0,
            label: label.into(),
            n: cell.n,
        }
    }

    pub fn sd(&self) -> Option<f64> {
        self.variance.map(f64::sqrt)
    }
}

/// Everything needed to reproduce a run. Timestamps live elsewhere so data
/// files stay byte-identical across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub seed: u64,
    pub generator: String,
    pub version: String,
    /// Output bytes depend only on the config, never on thread count or host.
    pub deterministic: bool,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        RunManifest {
            config_digest: config_digest(cfg),
            seed: cfg.seed,
            generator: GENERATOR_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            deterministic: true,
            config: cfg.clone(),
        }
    }
}

/// SHA-256 of the canonical JSON encoding (fields in declaration order).
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
    pub manifest: RunManifest,
}

impl ExperimentReport {
    pub fn aggregate(&self, cell_id: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.cell_id == cell_id)
    }

    pub fn rows_for(&self, cell_id: usize) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.cell_id == cell_id)
    }
}

/// Mean of the flags, with its binomial standard error.
pub fn rejection_rate(flags: &[bool]) -> Option<(f64, f64)> {
    if flags.is_empty() {
        return None;
    }
    let r = flags.len() as f64;
    let p = flags.iter().filter(|&&f| f).count() as f64 / r;
    Some((p, (p * (1.0 - p) / r).sqrt()))
}

/// Mean and unbiased variance; the variance needs two values. Deviations
/// are taken from the first value, so constant input gives exactly zero.
pub fn mean_variance(v: &[f64]) -> (Option<f64>, Option<f64>) {
    let Some(&shift) = v.first() else {
        return (None, None);
    };
    let n = v.len() as f64;
    let (s1, s2) = v.iter().fold((0.0, 0.0), |(a, b), x| (a + (x - shift), b + (x - shift) * (x - shift)));
    let mean = shift + s1 / n;
    if v.len() < 2 {
        return (Some(mean), None);
    }
    let var = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0);
    (Some(mean), Some(var))
}

/// Median; the midpoint of the middle pair for even lengths.
pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[k] } else { 0.5 * (s[k - 1] + s[k]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summaries() {
        assert_eq!(rejection_rate(&[]), None);
        assert_eq!(rejection_rate(&[true, false, false, false]), Some((0.25, (0.25f64 * 0.75 / 4.0).sqrt())));
        assert_eq!(mean_variance(&[2.0]), (Some(2.0), None));
        assert_eq!(mean_variance(&[1.0, 3.0]), (Some(2.0), Some(2.0)));
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }
}
