//! Independent reference implementations used by the integration and
//! acceptance tests. None of these call into the algorithms they check.

#![allow(dead_code)]

use lsmtopo_core::persistence::Filtration;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// XOR basis over GF(2) for vectors stored as bitmasks.
#[derive(Default, Clone)]
pub struct Gf2Basis {
    rows: Vec<u64>,
}

impl Gf2Basis {
    pub fn insert(&mut self, mut v: u64) -> bool {
        for &r in &self.rows {
            v = v.min(v ^ r);
        }
        if v == 0 {
            return false;
        }
        self.rows.push(v);
        self.rows.sort_unstable_by(|a, b| b.cmp(a));
        true
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

pub fn rank_of(vs: impl IntoIterator<Item = u64>) -> usize {
    let mut b = Gf2Basis::default();
    for v in vs {
        b.insert(v);
    }
    b.rank()
}

/// Cycle space basis of a set of edges (bitmasks over edge indices).
fn cycle_basis(edges: &[(usize, usize, usize)]) -> Vec<u64> {
    // (vertex boundary, edge combination) reduced on the highest vertex bit
    let mut pivots: Vec<(u64, u64)> = Vec::new();
    let mut cycles = Vec::new();
    for &(id, a, b) in edges {
        let mut bd = (1u64 << a) | (1u64 << b);
        let mut combo = 1u64 << id;
        loop {
            if bd == 0 {
                cycles.push(combo);
                break;
            }
            let top = 63 - bd.leading_zeros();
            match pivots.iter().find(|(p, _)| 63 - p.leading_zeros() == top) {
                Some(&(p, c)) => {
                    bd ^= p;
                    combo ^= c;
                }
                None => {
                    pivots.push((bd, combo));
                    break;
                }
            }
        }
    }
    cycles
}

/// Order-1 persistence pairs from persistent Betti numbers of the clique
/// complex at every critical value, by inclusion–exclusion.
pub fn brute_force_h1(f: &Filtration) -> Vec<(f64, f64)> {
    let m = f.point_count();
    assert!(m <= 10, "brute-force oracle is for tiny inputs");
    let mut dist = vec![0.0; m * m];
    let mut edge_id = vec![usize::MAX; m * m];
    let mut list = Vec::new();
    for e in &f.edges {
        dist[e.i * m + e.j] = e.value;
        dist[e.j * m + e.i] = e.value;
    }
    for i in 0..m {
        for j in i + 1..m {
            edge_id[i * m + j] = list.len();
            edge_id[j * m + i] = list.len();
            list.push((i, j));
        }
    }
    let mut crit: Vec<f64> = f.edges.iter().map(|e| e.value).collect();
    crit.sort_by(f64::total_cmp);
    crit.dedup();
    let c = crit.len();

    let edges_at = |r: f64| -> Vec<(usize, usize, usize)> {
        list.iter()
            .enumerate()
            .filter(|(_, &(i, j))| dist[i * m + j] <= r)
            .map(|(id, &(i, j))| (id, i, j))
            .collect()
    };
    let boundaries_at = |r: f64| -> Vec<u64> {
        let mut out = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                for cc in b + 1..m {
                    let fv = dist[a * m + b].max(dist[a * m + cc]).max(dist[b * m + cc]);
                    if fv <= r {
                        out.push(
                            (1u64 << edge_id[a * m + b])
                                | (1u64 << edge_id[a * m + cc])
                                | (1u64 << edge_id[b * m + cc]),
                        );
                    }
                }
            }
        }
        out
    };
    let z: Vec<Vec<u64>> = crit.iter().map(|&r| cycle_basis(&edges_at(r))).collect();
    let bnd: Vec<Vec<u64>> = crit.iter().map(|&r| boundaries_at(r)).collect();

    // beta[i][j] = rank of H1(K_i) → H1(K_j) for i ≤ j
    let beta = |i: usize, j: usize| -> i64 {
        let zi = z[i].len();
        let bj = rank_of(bnd[j].iter().copied());
        let sum = rank_of(z[i].iter().chain(&bnd[j]).copied());
        let inter = zi + bj - sum;
        (zi - inter) as i64
    };
    let b = |i: isize, j: usize| -> i64 { if i < 0 { 0 } else { beta(i as usize, j) } };

    let mut pairs = Vec::new();
    for i in 0..c {
        for j in i + 1..c {
            let mu = b(i as isize, j - 1) - b(i as isize, j) - b(i as isize - 1, j - 1)
                + b(i as isize - 1, j);
            assert!(mu >= 0);
            for _ in 0..mu {
                pairs.push((crit[i], crit[j]));
            }
        }
        let ess = b(i as isize, c - 1) - b(i as isize - 1, c - 1);
        for _ in 0..ess {
            if crit[i] < f.max_filtration {
                pairs.push((crit[i], f.max_filtration));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs
}

/// Kruskal minimum spanning tree weights over all point pairs.
pub fn kruskal_weights(points: &[[f64; 2]], scale: f64) -> Vec<f64> {
    let m = points.len();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            pairs.push(((dx * dx + dy * dy).sqrt() * scale, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut label: Vec<usize> = (0..m).collect();
    let mut out = Vec::new();
    for (w, i, j) in pairs {
        let (li, lj) = (label[i], label[j]);
        if li != lj {
            for l in label.iter_mut() {
                if *l == lj {
                    *l = li;
                }
            }
            out.push(w);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// k-th largest tent value at `t`, by direct sorting.
pub fn grid_kmax(pairs: &[(f64, f64)], k: usize, t: f64) -> f64 {
    let mut v: Vec<f64> = pairs.iter().map(|&(b, d)| (t - b).min(d - t).max(0.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.get(k - 1).copied().unwrap_or(0.0)
}

/// Random points, sometimes snapped to a coarse grid to create ties.
pub fn random_points(rng: &mut ChaCha8Rng, m: usize) -> Vec<[f64; 2]> {
    let snap = rng.gen_bool(0.3);
    (0..m)
        .map(|_| {
            let p = [rng.gen::<f64>() * 4.0, rng.gen::<f64>() * 4.0];
            if snap {
                [p[0].round(), p[1].round()]
            } else {
                p
            }
        })
        .collect()
}

/// Random diagram of `count` finite pairs in `[0, 5]`.
pub fn random_diagram(rng: &mut ChaCha8Rng, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| {
            let b = rng.gen::<f64>() * 4.0;
            (b, b + rng.gen::<f64>() * 1.5 + 1e-3)
        })
        .collect()
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations; returns the
/// eigenvalues in descending order.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut a = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}
