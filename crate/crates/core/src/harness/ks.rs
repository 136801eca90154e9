use crate::bootstrap::EmpiricalDistribution;

/// What a sample is compared against.
#[derive(Clone, Copy)]
pub enum KsTarget<'a> {
    Sample(&'a EmpiricalDistribution),
    Analytic(&'a dyn Fn(f64) -> f64),
}

/// Kolmogorov-Smirnov distance between the step CDF of `a` and `b`.
pub fn ks_distance(a: &EmpiricalDistribution, b: KsTarget<'_>) -> f64 {
    match b {
        KsTarget::Sample(b) => ks_two_sample(a.draws(), b.draws()),
        KsTarget::Analytic(f) => ks_analytic(a.draws(), f),
    }
}

/// Exact sup-distance between two step CDFs; inputs must be sorted.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Sup-distance between the step CDF of sorted `a` and a continuous CDF.
/// Both one-sided limits are checked at every atom, so ties are handled.
pub fn ks_analytic(a: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < a.len() {
        let v = a[i];
        let mut k = i;
        while k < a.len() && a[k] == v {
            k += 1;
        }
        let f = cdf(v);
        d = d.max((f - i as f64 / n).abs()).max((k as f64 / n - f).abs());
        i = k;
    }
    d
}

/// KS distance of p-values to Uniform[0, 1].
pub fn ks_uniform(pvalues: &[f64]) -> f64 {
    let mut p = pvalues.to_vec();
    p.sort_by(f64::total_cmp);
    ks_analytic(&p, &|x: f64| x.clamp(0.0, 1.0))
}
