//! Unsupervised grouping of a population from its distance cache:
//! k-medoids, energy k-groups and self-tuning spectral clustering.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::DistanceCache;
use crate::error::{Error, Result};
use crate::seed;

/// A hard assignment of items to `k` non-empty clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub assignments: Vec<usize>,
    pub k: usize,
    /// Final value of the method's objective.
    pub objective: f64,
    pub medoids: Option<Vec<usize>>,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

impl Partition {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == c).collect()
    }
}

/// Relabels clusters in order of first appearance.
fn relabel(assign: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    assign
        .iter()
        .map(|&a| {
            if map[a] == usize::MAX {
                map[a] = next;
                next += 1;
            }
            map[a]
        })
        .collect()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::arg(format!("k = {k} must lie in 1..={n}")))
    } else {
        Ok(())
    }
}

fn stalled(old: f64, new: f64) -> bool {
    new >= old - 1e-12 * old.abs().max(f64::MIN_POSITIVE)
}

/// Nearest medoid (by slot) for each item, the medoids themselves forced to
/// their own slot.
fn medoid_assign(cost: &DistanceCache, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let assign = (0..cost.len())
        .map(|i| {
            if let Some(s) = medoids.iter().position(|&m| m == i) {
                return s;
            }
            let (s, c) = medoids
                .iter()
                .enumerate()
                .map(|(s, &m)| (s, cost.get(i, m)))
                .fold((0, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
            total += c;
            s
        })
        .collect();
    (assign, total)
}

/// PAM with squared distances as costs: seeded random medoids, then the
/// best improving medoid/non-medoid swap until none strictly improves.
pub fn k_medoids(d: &DistanceCache, k: usize, seed: u64) -> Result<Partition> {
    let n = d.len();
    check_k(n, k)?;
    let cost = d.powered(2.0);
    let mut rng = seed::rng(seed);
    let mut medoids: Vec<usize> = sample(&mut rng, n, k).into_vec();
    medoids.sort_unstable();
    let (_, mut objective) = medoid_assign(&cost, &medoids);
    let mut history = vec![objective];

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..k {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[slot] = h;
                let (_, obj) = medoid_assign(&cost, &trial);
                if best.is_none_or(|(b, _, _)| obj < b) {
                    best = Some((obj, slot, h));
                }
            }
        }
        match best {
            Some((obj, slot, h)) if !stalled(objective, obj) => {
                medoids[slot] = h;
                objective = obj;
                history.push(obj);
            }
            _ => break,
        }
    }
    medoids.sort_unstable();
    let (assign, objective) = medoid_assign(&cost, &medoids);
    let assignments = relabel(&assign, k);
    let mut ordered = vec![0; k];
    for &m in &medoids {
        ordered[assignments[m]] = m;
    }
    Ok(Partition { assignments, k, objective, medoids: Some(ordered), history })
}

/// Energy within-cluster dispersion `W_ρ = Σ_c n_c/2 · d_ρ(c, c)`.
pub fn within_dispersion(d: &DistanceCache, assignments: &[usize], rho: f64) -> Result<f64> {
    if assignments.len() != d.len() {
        return Err(Error::arg("assignment length differs from cache size"));
    }
    if !(rho > 0.0 && rho <= 2.0) {
        return Err(Error::arg(format!("rho = {rho} outside (0, 2]")));
    }
    let p = d.powered(rho);
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; k];
    let mut sizes = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        sizes[a] += 1;
        for (j, &b) in assignments.iter().enumerate() {
            if a == b {
                sums[a] += p.get(i, j);
            }
        }
    }
    Ok(sums.iter().zip(&sizes).filter(|(_, &m)| m > 0).map(|(s, &m)| s / (2.0 * m as f64)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KGroupsInit {
    #[default]
    Medoids,
    Random,
}

fn random_assignment(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let firsts = sample(rng, n, k).into_vec();
    let mut assign: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    for (c, &i) in firsts.iter().enumerate() {
        assign[i] = c;
    }
    assign
}

/// Energy k-groups: single-item moves that most decrease `W_ρ`, repeated
/// until no move strictly decreases it. Moves that would empty a cluster are
/// not considered.
pub fn k_groups(
    d: &DistanceCache,
    k: usize,
    rho: f64,
    init: KGroupsInit,
    seed: u64,
) -> Result<Partition> {
    let n = d.len();
    check_k(n, k)?;
    if !(rho > 0.0 && rho <= 2.0) {
        return Err(Error::arg(format!("rho = {rho} outside (0, 2]")));
    }
    let mut assign = match init {
        KGroupsInit::Medoids => k_medoids(d, k, seed)?.assignments,
        KGroupsInit::Random => random_assignment(n, k, &mut seed::rng_at(seed, &[1])),
    };
    let p = d.powered(rho);

    // s[x*k + c] = Σ_{y ∈ c} δ^ρ(x, y); within[c] = Σ_{x,y ∈ c} δ^ρ(x, y)
    let mut s = vec![0.0; n * k];
    let mut sizes = vec![0usize; k];
    for x in 0..n {
        sizes[assign[x]] += 1;
        for y in 0..n {
            s[x * k + assign[y]] += p.get(x, y);
        }
    }
    let mut within = vec![0.0; k];
    for x in 0..n {
        within[assign[x]] += s[x * k + assign[x]];
    }
    let w = |within: &[f64], sizes: &[usize]| -> f64 {
        within.iter().zip(sizes).map(|(s, &m)| s / (2.0 * m as f64)).sum()
    };
    let mut objective = w(&within, &sizes);
    let mut history = vec![objective];

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..n {
            let c = assign[x];
            if sizes[c] == 1 {
                continue;
            }
            let (sc, nc) = (within[c], sizes[c] as f64);
            let leave = (sc - 2.0 * s[x * k + c]) / (2.0 * (nc - 1.0)) - sc / (2.0 * nc);
            for t in 0..k {
                if t == c {
                    continue;
                }
                let (st, nt) = (within[t], sizes[t] as f64);
                let join = (st + 2.0 * s[x * k + t]) / (2.0 * (nt + 1.0)) - st / (2.0 * nt);
                let delta = leave + join;
                if best.is_none_or(|(b, _, _)| delta < b) {
                    best = Some((delta, x, t));
                }
            }
        }
        let Some((delta, x, t)) = best else { break };
        if stalled(objective, objective + delta) {
            break;
        }
        let c = assign[x];
        within[c] -= 2.0 * s[x * k + c];
        within[t] += 2.0 * s[x * k + t];
        sizes[c] -= 1;
        sizes[t] += 1;
        assign[x] = t;
        for y in 0..n {
            let v = p.get(y, x);
            s[y * k + c] -= v;
            s[y * k + t] += v;
        }
        objective = w(&within, &sizes);
        history.push(objective);
    }
    let assignments = relabel(&assign, k);
    let objective = within_dispersion(d, &assignments, rho)?;
    Ok(Partition { assignments, k, objective, medoids: None, history })
}

/// Self-tuning Gaussian affinity `exp(−δ² / (σ_i σ_j))` where `σ_i` is the
/// distance from item `i` to its `τ`-th nearest neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity {
    pub n: usize,
    pub matrix: Vec<f64>,
    pub tau: usize,
    pub sigma: Vec<f64>,
}

impl Affinity {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }
}

pub fn build_affinity(d: &DistanceCache, tau: usize) -> Result<Affinity> {
    let n = d.len();
    if tau == 0 || tau >= n {
        return Err(Error::arg(format!("tau = {tau} must lie in 1..{n}")));
    }
    let max_dist = d.as_slice().iter().copied().fold(0.0, f64::max);
    let floor = if max_dist > 0.0 { f64::EPSILON * max_dist } else { 1.0 };
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
            row.sort_by(f64::total_cmp);
            let s = row[tau - 1];
            if s > 0.0 {
                s
            } else {
                log::debug!("sigma floored for item {i}");
                floor
            }
        })
        .collect();
    let mut matrix = vec![1.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = d.get(i, j);
            let a = (-(v * v) / (sigma[i] * sigma[j])).exp();
            matrix[i * n + j] = a;
            matrix[j * n + i] = a;
        }
    }
    Ok(Affinity { n, matrix, tau, sigma })
}

/// Eigen-decomposition of `I − D^{-1/2} A D^{-1/2}`, eigenvalues ascending.
pub fn laplacian_spectrum(a: &Affinity) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.n;
    let inv_sqrt: Vec<f64> =
        (0..n).map(|i| 1.0 / (0..n).map(|j| a.get(i, j)).sum::<f64>().sqrt()).collect();
    let l = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt[i] * a.get(i, j) * inv_sqrt[j]
    });
    let eig = SymmetricEigen::new(l);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]).then(x.cmp(&y)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_once(rows: &[Vec<f64>], k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = rows.len();
    // k-means++ seeding
    let mut centers = vec![rows[rng.gen_range(0..n)].clone()];
    while centers.len() < k {
        let w: Vec<f64> = rows
            .iter()
            .map(|r| centers.iter().map(|c| sq_dist(r, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = w.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            w.iter().position(|&x| {
                u -= x;
                u < 0.0
            })
            .unwrap_or(n - 1)
        } else {
            rng.gen_range(0..n)
        };
        centers.push(rows[pick].clone());
    }
    let nearest = |r: &[f64], centers: &[Vec<f64>]| {
        centers
            .iter()
            .enumerate()
            .map(|(c, m)| (c, sq_dist(r, m)))
            .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
    };
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, r) in rows.iter().enumerate() {
            let c = nearest(r, &centers).0;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        ensure_nonempty(rows, &mut labels, &centers, k);
        let dim = rows[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        for c in 0..k {
            centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = rows.iter().zip(&labels).map(|(r, &l)| sq_dist(r, &centers[l])).sum();
    (labels, inertia)
}

/// Moves the worst-fitting item of a multi-item cluster into each empty one.
fn ensure_nonempty(rows: &[Vec<f64>], labels: &mut [usize], centers: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else { return };
        let far = (0..rows.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                sq_dist(&rows[a], &centers[labels[a]])
                    .total_cmp(&sq_dist(&rows[b], &centers[labels[b]]))
                    .then(b.cmp(&a))
            })
            .expect("k <= n");
        labels[far] = empty;
    }
}

/// Lloyd's k-means with k-means++ seeding; the best of `restarts` runs by
/// inertia is returned.
pub fn kmeans(
    rows: &[Vec<f64>],
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<(Vec<usize>, f64)> {
    check_k(rows.len(), k)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = seed::rng_at(seed, &[r as u64]);
        let (labels, inertia) = kmeans_once(rows, k, max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((labels, inertia));
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Normalized spectral clustering: k-means on the rows of the eigenvectors
/// for the `k` smallest Laplacian eigenvalues. Each eigenvector is signed so
/// its first clearly nonzero entry is positive.
pub fn spectral_cluster(a: &Affinity, k: usize, seed: u64) -> Result<Partition> {
    let n = a.n;
    check_k(n, k)?;
    let (_, vectors) = laplacian_spectrum(a);
    let mut cols: Vec<Vec<f64>> = (0..k).map(|c| vectors.column(c).iter().copied().collect()).collect();
    for col in &mut cols {
        if col.iter().find(|v| v.abs() > 1e-12).is_some_and(|v| *v < 0.0) {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let (labels, inertia) = kmeans(&rows, k, 10, 100, seed)?;
    Ok(Partition {
        assignments: relabel(&labels, k),
        k,
        objective: inertia,
        medoids: None,
        history: vec![inertia],
    })
}

/// Fraction of item pairs on which two labelings agree.
pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::arg("labelings differ in length"));
    }
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}
