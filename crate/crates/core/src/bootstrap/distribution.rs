use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statistics::Tail;

/// Sorted draws of a scalar statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    draws: Vec<f64>,
    /// Short description of what generated the draws.
    pub meta: String,
    /// Replications dropped because their statistic was undefined.
    pub excluded: usize,
}

impl EmpiricalDistribution {
    /// Sorts `draws`. Panics when `draws` is empty or holds NaN; use
    /// [`EmpiricalDistribution::try_new`] for unchecked input.
    pub fn new(draws: Vec<f64>, meta: impl Into<String>) -> Self {
        Self::try_new(draws, meta).expect("empirical distribution needs finite-comparable draws")
    }

    pub fn try_new(mut draws: Vec<f64>, meta: impl Into<String>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Domain("empirical distribution needs at least one draw".into()));
        }
        if draws.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("empirical distribution draws contain NaN".into()));
        }
        draws.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { draws, meta: meta.into(), excluded: 0 })
    }

    pub fn with_excluded(mut self, excluded: usize) -> Self {
        self.excluded = excluded;
        self
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Draw of rank ceil(qB), so quantile(0) is the minimum and quantile(1)
    /// the maximum.
    pub fn quantile(&self, q: f64) -> f64 {
        let b = self.draws.len();
        let rank = (q.clamp(0.0, 1.0) * b as f64).ceil() as usize;
        self.draws[rank.clamp(1, b) - 1]
    }

    /// Fraction of draws at or below `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.draws.len() as f64
    }

    pub fn count_le(&self, x: f64) -> usize {
        self.draws.partition_point(|v| *v <= x)
    }

    pub fn count_ge(&self, x: f64) -> usize {
        self.draws.len() - self.draws.partition_point(|v| *v < x)
    }

    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }

    /// Variance with divisor B - 1 (0 for a single draw).
    pub fn variance(&self) -> f64 {
        let b = self.draws.len();
        if b < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.draws.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (b - 1) as f64
    }

    pub fn pvalue(&self, observed: f64, tail: Tail) -> f64 {
        bootstrap_pvalue(self, observed, tail)
    }
}

/// Share of draws at least as extreme as `observed`.
pub fn bootstrap_pvalue(dist: &EmpiricalDistribution, observed: f64, tail: Tail) -> f64 {
    let b = dist.len() as f64;
    let hits = match tail {
        Tail::Right => dist.count_ge(observed),
        Tail::Left => dist.count_le(observed),
        Tail::TwoSidedAbs => {
            let a = observed.abs();
            dist.draws().iter().filter(|v| v.abs() >= a).count()
        }
    };
    hits as f64 / b
}
