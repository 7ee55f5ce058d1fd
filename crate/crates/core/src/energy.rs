//! Energy statistics on populations of landscapes: two-sample and k-sample
//! energy tests, the DISCO decomposition, and permutation p-values.
//!
//! Everything here works from a [`DistanceCache`] of pairwise L2 landscape
//! distances. Permutation replicates only reindex the cache.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{l2_distance, Landscape};
use crate::seed;

/// Symmetric pairwise distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCache {
    n: usize,
    d: Vec<f64>,
}

impl DistanceCache {
    /// Pairwise L2 distances; rows are computed in parallel.
    pub fn from_landscapes(items: &[Landscape]) -> Result<Self> {
        if let Some(first) = items.first() {
            if let Some(bad) = items.iter().find(|l| l.order != first.order) {
                return Err(Error::OrderMismatch(first.order, bad.order));
            }
        }
        let n = items.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .map(|j| l2_distance(&items[i], &items[j]).expect("orders checked"))
                    .collect()
            })
            .collect();
        let mut d = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Ok(DistanceCache { n, d })
    }

    /// Validates and wraps a row-major matrix.
    pub fn from_matrix(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::arg("distance matrix is not n × n"));
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::arg("distance matrix diagonal must be zero"));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if v.is_nan() || v < 0.0 || v != d[j * n + i] {
                    return Err(Error::arg("distance matrix must be symmetric and nonnegative"));
                }
            }
        }
        Ok(DistanceCache { n, d })
    }

    /// Euclidean distances between points of any dimension.
    pub fn from_points(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistanceCache { n, d }
    }

    pub fn from_scalars(xs: &[f64]) -> Self {
        DistanceCache::from_points(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn scaled(&self, c: f64) -> Self {
        DistanceCache { n: self.n, d: self.d.iter().map(|v| v * c).collect() }
    }

    /// Elementwise `δ^ρ`.
    pub fn powered(&self, rho: f64) -> Self {
        let d = if rho == 1.0 {
            self.d.clone()
        } else if rho == 2.0 {
            self.d.iter().map(|v| v * v).collect()
        } else {
            self.d.iter().map(|v| v.powf(rho)).collect()
        };
        DistanceCache { n: self.n, d }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 2.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("rho = {rho} outside (0, 2]")))
    }
}

/// Checks groups are non-empty, in range and pairwise disjoint, then sorts
/// each group and orders groups by their smallest index. Statistics are
/// computed on this canonical form so equal partitions give bit-equal values.
fn canonical(cache: &DistanceCache, groups: &[&[usize]]) -> Result<Vec<Vec<usize>>> {
    let mut seen = vec![false; cache.len()];
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        if g.is_empty() {
            return Err(Error::arg("groups must be non-empty"));
        }
        for &i in *g {
            if i >= cache.len() {
                return Err(Error::arg(format!("index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::arg(format!("index {i} appears in more than one group")));
            }
        }
        let mut g = g.to_vec();
        g.sort_unstable();
        out.push(g);
    }
    out.sort_by_key(|g| g[0]);
    Ok(out)
}

/// Σ over ordered pairs within a sorted group.
fn within_sum(d: &DistanceCache, g: &[usize]) -> f64 {
    let mut s = 0.0;
    for (a, &i) in g.iter().enumerate() {
        for &j in &g[a + 1..] {
            s += d.get(i, j);
        }
    }
    2.0 * s
}

fn cross_sum(d: &DistanceCache, g: &[usize], h: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in g {
        for &j in h {
            s += d.get(i, j);
        }
    }
    s
}

/// Scaled two-sample energy statistic from precomputed sums.
fn energy_from_sums(n1: f64, n2: f64, cross: f64, w1: f64, w2: f64) -> f64 {
    n1 * n2 / (n1 + n2) * (2.0 * cross / (n1 * n2) - w1 / (n1 * n1) - w2 / (n2 * n2))
}

fn k_sample_canonical(d: &DistanceCache, groups: &[Vec<usize>]) -> f64 {
    let within: Vec<f64> = groups.iter().map(|g| within_sum(d, g)).collect();
    let mut total = 0.0;
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            total += energy_from_sums(
                groups[i].len() as f64,
                groups[j].len() as f64,
                cross_sum(d, &groups[i], &groups[j]),
                within[i],
                within[j],
            );
        }
    }
    total
}

/// `T = n1 n2 / (n1 + n2) · [2/(n1 n2) ΣΣ δ(x, y) − 1/n1² ΣΣ δ(x, x') − 1/n2² ΣΣ δ(y, y')]`.
pub fn two_sample_statistic(d: &DistanceCache, idx1: &[usize], idx2: &[usize]) -> Result<f64> {
    let groups = canonical(d, &[idx1, idx2])?;
    Ok(k_sample_canonical(d, &groups))
}

/// Sum of the two-sample statistics over all group pairs.
pub fn k_sample_statistic(d: &DistanceCache, groups: &[Vec<usize>]) -> Result<f64> {
    if groups.len() < 2 {
        return Err(Error::arg("k-sample statistic needs at least two groups"));
    }
    let refs: Vec<&[usize]> = groups.iter().map(Vec::as_slice).collect();
    Ok(k_sample_canonical(d, &canonical(d, &refs)?))
}

/// Total, within and between dispersion of a grouping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disco {
    pub total: f64,
    pub within: f64,
    pub between: f64,
}

/// DISCO terms on an already powered cache (`δ^ρ`).
fn disco_canonical(p: &DistanceCache, groups: &[Vec<usize>]) -> Disco {
    let n: usize = groups.iter().map(Vec::len).sum();
    let within_sums: Vec<f64> = groups.iter().map(|g| within_sum(p, g)).collect();
    let sizes: Vec<f64> = groups.iter().map(|g| g.len() as f64).collect();
    // d_ρ(A, A) = S_AA / |A|²
    let d_self: Vec<f64> = within_sums.iter().zip(&sizes).map(|(s, m)| s / (m * m)).collect();
    let within: f64 = sizes.iter().zip(&d_self).map(|(m, d)| m / 2.0 * d).sum();
    let mut between = 0.0;
    let mut cross_total = 0.0;
    let nf = n as f64;
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let c = cross_sum(p, &groups[i], &groups[j]);
            cross_total += c;
            let d_ij = c / (sizes[i] * sizes[j]);
            between += sizes[i] * sizes[j] / (2.0 * nf) * (2.0 * d_ij - d_self[i] - d_self[j]);
        }
    }
    let pooled = within_sums.iter().sum::<f64>() + 2.0 * cross_total;
    Disco { total: nf / 2.0 * (pooled / (nf * nf)), within, between }
}

/// DISCO decomposition `T_ρ = W_ρ + B_ρ` of the pooled groups.
pub fn disco_decomposition(d: &DistanceCache, groups: &[Vec<usize>], rho: f64) -> Result<Disco> {
    check_rho(rho)?;
    if groups.is_empty() {
        return Err(Error::arg("DISCO needs at least one group"));
    }
    let refs: Vec<&[usize]> = groups.iter().map(Vec::as_slice).collect();
    let groups = canonical(d, &refs)?;
    Ok(disco_canonical(&d.powered(rho), &groups))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatisticKind {
    TwoSample,
    KSample,
    /// Between-sample DISCO dispersion `B_ρ`.
    Disco { rho: f64 },
}

impl StatisticKind {
    pub fn tag(&self) -> &'static str {
        match self {
            StatisticKind::TwoSample => "two_sample",
            StatisticKind::KSample => "k_sample",
            StatisticKind::Disco { .. } => "disco",
        }
    }
}

/// Result of one permutation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    pub group_sizes: Vec<usize>,
    pub order: Option<usize>,
    pub rho: Option<f64>,
    #[serde(skip)]
    pub replicates: Vec<f64>,
}

impl TestReport {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value <= level
    }

    /// One replicate per line under a `replicate,statistic` header.
    pub fn replicates_csv(&self) -> String {
        let mut out = String::from("replicate,statistic\n");
        for (b, v) in self.replicates.iter().enumerate() {
            out.push_str(&format!("{},{v}\n", b + 1));
        }
        out
    }
}

/// `(#{replicates ≥ observed} + 1) / (B + 1)`.
pub fn permutation_p_value(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&r| observed <= r).count();
    (exceed + 1) as f64 / (replicates.len() + 1) as f64
}

fn contiguous_groups(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&s| {
            let g = (start..start + s).collect();
            start += s;
            g
        })
        .collect()
}

/// Permutation test on a pooled cache whose items are laid out group by
/// group with the given sizes.
///
/// Replicate `b` shuffles the pooled labels with its own RNG stream derived
/// from `(seed, b)`; replicates are evaluated in parallel and collected in
/// replicate order.
pub fn permutation_test(
    d: &DistanceCache,
    group_sizes: &[usize],
    kind: StatisticKind,
    replicates: usize,
    seed: u64,
) -> Result<TestReport> {
    if replicates == 0 {
        return Err(Error::arg("number of permutations must be at least 1"));
    }
    if group_sizes.iter().sum::<usize>() != d.len() {
        return Err(Error::arg("group sizes do not add up to the pooled sample size"));
    }
    if group_sizes.contains(&0) {
        return Err(Error::arg("groups must be non-empty"));
    }
    let k = group_sizes.len();
    let rho = match kind {
        StatisticKind::TwoSample if k != 2 => {
            return Err(Error::arg("two-sample test needs exactly two groups"))
        }
        StatisticKind::KSample if k < 2 => {
            return Err(Error::arg("k-sample test needs at least two groups"))
        }
        StatisticKind::Disco { rho } => {
            check_rho(rho)?;
            if k < 2 {
                return Err(Error::arg("DISCO test needs at least two groups"));
            }
            Some(rho)
        }
        _ => None,
    };
    let work = match rho {
        Some(r) => d.powered(r),
        None => d.clone(),
    };
    let stat = |groups: &mut Vec<Vec<usize>>| {
        for g in groups.iter_mut() {
            g.sort_unstable();
        }
        groups.sort_by_key(|g| g[0]);
        match kind {
            StatisticKind::Disco { .. } => disco_canonical(&work, groups).between,
            _ => k_sample_canonical(&work, groups),
        }
    };

    let observed = stat(&mut contiguous_groups(group_sizes));
    let n = d.len();
    let reps: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::rng_at(seed, &[b]);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut groups: Vec<Vec<usize>> = contiguous_groups(group_sizes)
                .into_iter()
                .map(|g| g.into_iter().map(|i| perm[i]).collect())
                .collect();
            stat(&mut groups)
        })
        .collect();

    Ok(TestReport {
        method: kind.tag().to_string(),
        statistic: observed,
        p_value: permutation_p_value(observed, &reps),
        b: replicates,
        seed,
        group_sizes: group_sizes.to_vec(),
        order: None,
        rho,
        replicates: reps,
    })
}

/// A labelled sample of landscapes from one population.
#[derive(Debug, Clone)]
pub struct Sample {
    pub label: String,
    pub items: Vec<Landscape>,
}

/// Pools the samples, builds the distance cache and runs the test.
pub fn test_samples(
    samples: &[Sample],
    kind: StatisticKind,
    replicates: usize,
    seed: u64,
) -> Result<TestReport> {
    if samples.iter().any(|s| s.items.is_empty()) {
        return Err(Error::arg("samples must be non-empty"));
    }
    let pooled: Vec<Landscape> = samples.iter().flat_map(|s| s.items.iter().cloned()).collect();
    let cache = DistanceCache::from_landscapes(&pooled)?;
    let sizes: Vec<usize> = samples.iter().map(|s| s.items.len()).collect();
    let mut report = permutation_test(&cache, &sizes, kind, replicates, seed)?;
    report.order = pooled.first().map(|l| l.order);
    Ok(report)
}
