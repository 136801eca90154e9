//! Monte Carlo experiments.
//!
//! A run is a grid of [`Cell`]s times replications. Replication `r` draws
//! from `root.child(r)` in every cell, so cells share random numbers and a
//! report depends only on the config, never on scheduling.

mod config;
mod ks;
mod report;

pub use config::{reference_kind, Cell, ExperimentConfig, ExperimentKind, RecenterMode, ReferenceConfig, DEFAULT_B};
pub use ks::{ks_analytic, ks_distance, ks_two_sample, ks_uniform, KsTarget};
pub use report::{
    config_digest, mean_variance, median, rejection_rate, Aggregate, ExperimentReport, Row, RunManifest,
    AGGREGATE_COLUMNS, ROW_COLUMNS,
};

use std::sync::Mutex;

use rayon::prelude::*;

use crate::bootstrap::{
    bootstrap_distribution, bootstrap_pvalue, check_exclusions, is_degenerate, rbb_residuals, EmpiricalDistribution,
};
use crate::dgp::{simulate_predictive_system, TimeSeriesPair};
use crate::error::{Error, Result};
use crate::limitdist::{normal_cdf, reference_distribution, ReferenceSpec};
use crate::rng::{Channel, DrawSource, StreamKey, StreamSource};
use crate::statistics::{evaluate, RhoScale, StatKind, StatSpec, Tail};

/// Tag of the bootstrap layer below a replication key.
const BOOT_TAG: u64 = (1 << 62) | 1;
/// Tag of the reference distribution below the root key.
const REFERENCE_TAG: u64 = (1 << 62) | 2;
/// Offset separating outer bootstrap samples from Monte Carlo replications.
const SAMPLE_TAG: u64 = 1 << 61;

pub type DataHook<'a> = dyn Fn(&Cell, usize) -> Result<TimeSeriesPair> + Sync + 'a;
pub type PvalueHook<'a> = dyn Fn(&Cell, usize, &TimeSeriesPair) -> f64 + Sync + 'a;

/// Replacements for the simulated data and the p-value, used to pin down
/// oracle cases.
#[derive(Clone, Copy, Default)]
pub struct Hooks<'a> {
    /// Data for (cell, replication) instead of the simulated sample.
    pub data: Option<&'a DataHook<'a>>,
    /// P-value for (cell, replication, data) instead of the test's.
    pub pvalue: Option<&'a PvalueHook<'a>>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, Hooks::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, hooks: Hooks<'_>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cells = cfg.cells()?;
    let ctx = Ctx { cfg, hooks, root: StreamKey::root(cfg.seed), reference: cfg.reference_spec()? };
    let (rows, aggregates) = match cfg.experiment {
        ExperimentKind::Size | ExperimentKind::PvalueUniformity => ctx.size(&cells)?,
        ExperimentKind::LimitMatch => ctx.limit_match(&cells)?,
        ExperimentKind::Invalidity => ctx.invalidity(&cells)?,
        ExperimentKind::Rbb => ctx.bootstrap_vs_law(&cells, Against::Reference)?,
        ExperimentKind::BootstrapAgreement => ctx.bootstrap_vs_law(&cells, Against::MonteCarlo)?,
        ExperimentKind::BlockSmoothing => ctx.limit_match(&cells)?,
    };
    Ok(ExperimentReport {
        experiment: cfg.experiment.as_str().into(),
        rows,
        aggregates,
        manifest: RunManifest::for_config(cfg),
    })
}

pub fn run_size_power(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Size)?;
    run_experiment(cfg)
}

pub fn run_pvalue_uniformity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::PvalueUniformity)?;
    run_experiment(cfg)
}

pub fn run_limit_match(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::LimitMatch)?;
    run_experiment(cfg)
}

pub fn run_invalidity_demo(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Invalidity)?;
    run_experiment(cfg)
}

pub fn run_rbb_validity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Rbb)?;
    run_experiment(cfg)
}

pub fn run_bootstrap_agreement(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::BootstrapAgreement)?;
    run_experiment(cfg)
}

pub fn run_block_smoothing(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::BlockSmoothing)?;
    run_experiment(cfg)
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::config(
            "experiment",
            format!("expected `{}`, got `{}`", kind.as_str(), cfg.experiment.as_str()),
        ));
    }
    Ok(())
}

/// Asymptotic p-value from the chi-square(1) or normal limit, or from the
/// reference distribution when the statistic has no closed-form law.
pub fn asymptotic_pvalue(kind: &StatKind, statistic: f64, tail: Tail, reference: Option<&ReferenceLaw>) -> Result<f64> {
    match (kind, tail) {
        (StatKind::WaldIvx, Tail::Right) => Ok(statrs::function::erf::erfc((statistic.max(0.0) / 2.0).sqrt())),
        (StatKind::IvxT | StatKind::FmT, _) => Ok(tail_prob(&normal_cdf, statistic, tail)),
        _ => match reference {
            Some(ReferenceLaw::Analytic(f)) => Ok(tail_prob(f, statistic, tail)),
            Some(ReferenceLaw::Sample(d)) => Ok(bootstrap_pvalue(d, statistic, tail)),
            None => {
                Err(Error::config("reference", format!("statistic `{}` needs a reference distribution", kind.name())))
            }
        },
    }
}

/// A reference law: a closed-form CDF or simulated draws.
pub enum ReferenceLaw {
    Analytic(fn(f64) -> f64),
    Sample(EmpiricalDistribution),
}

impl ReferenceLaw {
    fn ks(&self, draws: &EmpiricalDistribution) -> f64 {
        match self {
            ReferenceLaw::Analytic(f) => ks_distance(draws, KsTarget::Analytic(f)),
            ReferenceLaw::Sample(d) => ks_distance(draws, KsTarget::Sample(d)),
        }
    }
}

fn tail_prob(cdf: &dyn Fn(f64) -> f64, x: f64, tail: Tail) -> f64 {
    match tail {
        Tail::Left => cdf(x),
        Tail::Right => 1.0 - cdf(x),
        Tail::TwoSidedAbs => (1.0 - cdf(x.abs()) + cdf(-x.abs())).min(1.0),
    }
}

/// Law of the reference spec: closed form when available, otherwise
/// M simulated draws on the run's reference stream.
pub fn reference_law(spec: &ReferenceSpec, key: StreamKey) -> Result<ReferenceLaw> {
    match spec.kind.analytic_cdf() {
        Some(f) => Ok(ReferenceLaw::Analytic(f)),
        None => Ok(ReferenceLaw::Sample(reference_distribution(spec, key)?)),
    }
}

enum Against {
    Reference,
    MonteCarlo,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hooks: Hooks<'a>,
    root: StreamKey,
    reference: Option<ReferenceSpec>,
}

/// Bootstrap draws of one outer sample, keyed by sample index.
type Draws = (usize, Vec<f64>);

/// Outcome of one outer draw; `None` marks an undefined statistic.
type Outcome = Option<Row>;

impl Ctx<'_> {
    fn data(&self, cell: &Cell, rep: usize, key: StreamKey) -> Result<TimeSeriesPair> {
        match self.hooks.data {
            Some(h) => h(cell, rep),
            None => simulate_predictive_system(&self.cfg.dgp(cell), &mut StreamSource::new(key)),
        }
    }

    fn stat(&self, cell: &Cell) -> StatSpec {
        let mut spec = self.cfg.stat_spec(cell);
        if let Some(m) = cell.m {
            spec.kind = StatKind::RhoScaled { scale: RhoScale::NOverSqrtM(m) };
        }
        spec
    }

    fn law(&self) -> Result<Option<ReferenceLaw>> {
        self.reference.as_ref().map(|s| reference_law(s, self.root.child(REFERENCE_TAG))).transpose()
    }

    /// Runs `f` for every (cell, index) in parallel, in index order.
    fn grid<F>(&self, cells: &[Cell], count: usize, f: F) -> Result<Vec<Vec<Outcome>>>
    where
        F: Fn(&Cell, usize) -> Result<Outcome> + Sync,
    {
        let flat: Vec<Outcome> = (0..cells.len() * count)
            .into_par_iter()
            .map(|i| {
                let out = f(&cells[i / count], i % count);
                match out {
                    Err(e) if is_degenerate(&e) => Ok(None),
                    other => other,
                }
            })
            .collect::<Result<_>>()?;
        Ok(flat.chunks(count).map(|c| c.to_vec()).collect())
    }

    fn size(&self, cells: &[Cell]) -> Result<(Vec<Row>, Vec<Aggregate>)> {
        let cfg = self.cfg;
        let tail = cfg.tail();
        let law = if cfg.scheme.is_none() { self.law()? } else { None };
        let outcomes = self.grid(cells, cfg.r, |cell, rep| {
            let key = self.root.child(rep as u64);
            let data = self.data(cell, rep, key)?;
            let stat = self.stat(cell);
            let obs = evaluate(&stat, &data)?;
            if !obs.statistic.is_finite() {
                return Ok(None);
            }
            let p = match (self.hooks.pvalue, cfg.scheme_for(cell)) {
                (Some(h), _) => h(cell, rep, &data),
                (None, Some(scheme)) => {
                    let dist =
                        bootstrap_distribution(&data, &stat, &scheme, cfg.bootstrap_size(), key.child(BOOT_TAG))?;
                    bootstrap_pvalue(&dist, obs.statistic, tail)
                }
                (None, None) => asymptotic_pvalue(&stat.kind, obs.statistic, tail, law.as_ref())?,
            };
            let mut row = Row::blank(cfg, cell, rep);
            row.estimate = Some(obs.estimate);
            row.statistic = Some(obs.statistic);
            row.pvalue = Some(p);
            row.reject = Some(p < cfg.alpha);
            Ok(Some(row))
        })?;
        collect(cells, outcomes, "pvalue", |agg, rows| {
            let flags: Vec<bool> = rows.iter().filter_map(|r| r.reject).collect();
            if let Some((p, se)) = rejection_rate(&flags) {
                agg.rejection_rate = Some(p);
                agg.se = Some(se);
            }
            let pv: Vec<f64> = rows.iter().filter_map(|r| r.pvalue).collect();
            (agg.mean, agg.variance) = mean_variance(&pv);
            if cfg.experiment == ExperimentKind::PvalueUniformity && !pv.is_empty() {
                agg.ks = Some(ks_uniform(&pv));
            }
            Ok(())
        })
    }

    /// Finite-sample law of the statistic against the reference; block
    /// smoothing compares with N(0, -2c).
    fn limit_match(&self, cells: &[Cell]) -> Result<(Vec<Row>, Vec<Aggregate>)> {
        let cfg = self.cfg;
        let law = self.law()?;
        let outcomes = self.grid(cells, cfg.r, |cell, rep| {
            let data = self.data(cell, rep, self.root.child(rep as u64))?;
            let obs = evaluate(&self.stat(cell), &data)?;
            if !obs.statistic.is_finite() {
                return Ok(None);
            }
            let mut row = Row::blank(cfg, cell, rep);
            row.estimate = Some(obs.estimate);
            row.statistic = Some(obs.statistic);
            Ok(Some(row))
        })?;
        collect(cells, outcomes, "statistic", |agg, rows| {
            let s: Vec<f64> = rows.iter().filter_map(|r| r.statistic).collect();
            (agg.mean, agg.variance) = mean_variance(&s);
            if s.is_empty() {
                return Ok(());
            }
            let emp = EmpiricalDistribution::try_new(s, "statistic")?;
            let cell = &cells[agg.cell_id];
            if cfg.experiment == ExperimentKind::BlockSmoothing {
                let sd = (-2.0 * cell.c).sqrt();
                agg.ks = Some(ks_distance(&emp, KsTarget::Analytic(&|x| normal_cdf(x / sd))));
            } else if let Some(law) = &law {
                agg.ks = Some(law.ks(&emp));
            }
            Ok(())
        })
    }

    /// Across-sample dispersion of a bootstrap quantile. Every sample uses
    /// the same bootstrap stream, so identical data give identical quantiles.
    fn invalidity(&self, cells: &[Cell]) -> Result<(Vec<Row>, Vec<Aggregate>)> {
        let cfg = self.cfg;
        let tail = cfg.tail();
        let law = self.law()?;
        let boot_key = self.root.child(BOOT_TAG);
        let pooled: Vec<Mutex<Vec<Draws>>> = cells.iter().map(|_| Mutex::new(Vec::new())).collect();
        let outcomes = self.grid(cells, cfg.samples, |cell, s| {
            let data = self.data(cell, s, self.root.child(s as u64))?;
            let stat = self.stat(cell);
            let obs = evaluate(&stat, &data)?;
            let scheme = cfg.scheme_for(cell).expect("validated");
            let dist = bootstrap_distribution(&data, &stat, &scheme, cfg.bootstrap_size(), boot_key)?;
            pooled[cell.id].lock().expect("no poisoning").push((s, dist.draws().to_vec()));
            let mut row = Row::blank(cfg, cell, s);
            row.estimate = Some(dist.quantile(cfg.quantile));
            row.statistic = Some(obs.statistic);
            row.pvalue = Some(bootstrap_pvalue(&dist, obs.statistic, tail));
            Ok(Some(row))
        })?;
        collect(cells, outcomes, "quantile", |agg, rows| {
            let q: Vec<f64> = rows.iter().filter_map(|r| r.estimate).collect();
            (agg.mean, agg.variance) = mean_variance(&q);
            if let Some(law) = &law {
                let mut parts = std::mem::take(&mut *pooled[agg.cell_id].lock().expect("no poisoning"));
                parts.sort_by_key(|p| p.0);
                let all: Vec<f64> = parts.into_iter().flat_map(|p| p.1).collect();
                if !all.is_empty() {
                    agg.ks = Some(law.ks(&EmpiricalDistribution::try_new(all, "pooled bootstrap")?));
                }
            }
            Ok(())
        })
    }

    /// Per-sample KS between a bootstrap distribution and either the
    /// reference law or the Monte Carlo law of the statistic; the cell's KS
    /// is the median over samples.
    fn bootstrap_vs_law(&self, cells: &[Cell], target: Against) -> Result<(Vec<Row>, Vec<Aggregate>)> {
        let cfg = self.cfg;
        let tail = cfg.tail();
        let reference = match target {
            Against::Reference => Some(self.law()?.ok_or_else(|| Error::config("reference", "rbb needs a reference"))?),
            Against::MonteCarlo => None,
        };
        let mut laws: Vec<(ReferenceLaw, usize)> = Vec::with_capacity(cells.len());
        for cell in cells {
            match &reference {
                Some(ReferenceLaw::Analytic(f)) => laws.push((ReferenceLaw::Analytic(*f), 0)),
                Some(ReferenceLaw::Sample(d)) => laws.push((ReferenceLaw::Sample(d.clone()), 0)),
                None => {
                    let stat = self.stat(cell);
                    let draws: Vec<Option<f64>> = (0..cfg.r)
                        .into_par_iter()
                        .map(|rep| {
                            let data = self.data(cell, rep, self.root.child(rep as u64))?;
                            match evaluate(&stat, &data) {
                                Ok(e) if e.statistic.is_finite() => Ok(Some(e.statistic)),
                                Ok(_) => Ok(None),
                                Err(e) if is_degenerate(&e) => Ok(None),
                                Err(e) => Err(e),
                            }
                        })
                        .collect::<Result<_>>()?;
                    let kept: Vec<f64> = draws.iter().flatten().copied().collect();
                    let excluded = cfg.r - kept.len();
                    check_exclusions(excluded, cfg.r)?;
                    laws.push((ReferenceLaw::Sample(EmpiricalDistribution::try_new(kept, "monte carlo")?), excluded));
                }
            }
        }
        let outcomes = self.grid(cells, cfg.samples, |cell, s| {
            let key = self.root.child(SAMPLE_TAG | s as u64);
            let data = self.data(cell, s, key)?;
            let stat = self.stat(cell);
            let obs = evaluate(&stat, &data)?;
            let scheme = cfg.scheme_for(cell).expect("validated");
            let dist = bootstrap_distribution(&data, &stat, &scheme, cfg.bootstrap_size(), key.child(BOOT_TAG))?;
            let mut row = Row::blank(cfg, cell, s);
            row.estimate = Some(obs.statistic);
            row.statistic = Some(laws[cell.id].0.ks(&dist));
            row.pvalue = Some(bootstrap_pvalue(&dist, obs.statistic, tail));
            Ok(Some(row))
        })?;
        let (rows, mut aggs) = collect(cells, outcomes, "ks", |agg, rows| {
            let k: Vec<f64> = rows.iter().filter_map(|r| r.statistic).collect();
            (agg.mean, agg.variance) = mean_variance(&k);
            agg.ks = median(&k);
            Ok(())
        })?;
        for (agg, (_, excluded)) in aggs.iter_mut().zip(&laws) {
            agg.excluded += excluded;
        }
        Ok((rows, aggs))
    }
}

/// Flattens outcomes into rows, enforces the exclusion cap per cell and
/// fills one aggregate per cell.
fn collect<F>(
    cells: &[Cell],
    outcomes: Vec<Vec<Outcome>>,
    label: &str,
    mut fill: F,
) -> Result<(Vec<Row>, Vec<Aggregate>)>
where
    F: FnMut(&mut Aggregate, &[Row]) -> Result<()>,
{
    let mut rows = Vec::new();
    let mut aggs = Vec::with_capacity(cells.len());
    for (cell, out) in cells.iter().zip(outcomes) {
        let total = out.len();
        let kept: Vec<Row> = out.into_iter().flatten().collect();
        let excluded = total - kept.len();
        check_exclusions(excluded, total)?;
        let mut agg = Aggregate::new(cell, label);
        agg.excluded = excluded;
        agg.count = kept.len();
        fill(&mut agg, &kept)?;
        aggs.push(agg);
        rows.extend(kept);
    }
    Ok((rows, aggs))
}

/// Endpoint S*_m(1) of the block-bootstrap partial-sum process for a
/// white-noise sample of length m and block length b, standardized by the
/// bootstrap mean and variance of a block sum. One white-noise sample is
/// drawn from `key`; bootstrap draw i uses `key.child(i)`.
pub fn rbb_fclt_endpoint(m: usize, b: usize, draws: usize, key: StreamKey) -> Result<EmpiricalDistribution> {
    if b == 0 || b >= m {
        return Err(Error::Domain(format!("block length must satisfy 1 <= b < m, got b={b}, m={m}")));
    }
    let eps = StreamSource::new(key).normals(Channel::InnovationV, m)?;
    let mut x = Vec::with_capacity(m);
    let mut level = 0.0;
    for e in &eps {
        level += e;
        x.push(level);
    }
    rbb_endpoint_law(&x, b, draws, key)
}

/// Standardized bootstrap endpoint for the unit-root residuals of `x`.
pub fn rbb_endpoint_law(x: &[f64], b: usize, draws: usize, key: StreamKey) -> Result<EmpiricalDistribution> {
    let n = x.len();
    if b == 0 || b >= n {
        return Err(Error::Domain(format!("block length must satisfy 1 <= b < n, got b={b}, n={n}")));
    }
    let resid = rbb_residuals(x, 1.0);
    let starts = n - b;
    let sums: Vec<f64> = (0..starts).map(|i| resid[i..i + b].iter().sum()).collect();
    let mean = sums.iter().sum::<f64>() / starts as f64;
    let var = sums.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / starts as f64;
    if !(var > 0.0) {
        return Err(Error::Degenerate("block sums have zero bootstrap variance".into()));
    }
    let k = (n - 1) / b;
    let scale = (k as f64 * var).sqrt();
    let out = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut src = StreamSource::new(key.child(i as u64));
            let idx = src.indices(Channel::Resample, k, starts)?;
            Ok(idx.iter().map(|&j| sums[j] - mean).sum::<f64>() / scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    EmpiricalDistribution::try_new(out, format!("rbb endpoint b={b}"))
}
