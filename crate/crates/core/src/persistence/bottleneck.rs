use std::collections::VecDeque;

use super::PersistenceDiagram;
use crate::error::{Error, Result};

/// Maximum bipartite matching size. `adj[u]` lists right vertices adjacent
/// to left vertex `u`.
pub fn hopcroft_karp(adj: &[Vec<usize>], right: usize) -> usize {
    const INF: usize = usize::MAX;
    let left = adj.len();
    let mut match_l = vec![INF; left];
    let mut match_r = vec![INF; right];
    let mut layer = vec![INF; left];
    let mut matched = 0;

    loop {
        // BFS from free left vertices
        let mut queue = VecDeque::new();
        for u in 0..left {
            if match_l[u] == INF {
                layer[u] = 0;
                queue.push_back(u);
            } else {
                layer[u] = INF;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == INF {
                    found = true;
                } else if layer[w] == INF {
                    layer[w] = layer[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return matched;
        }
        let mut it = vec![0usize; left];
        for u in 0..left {
            if match_l[u] == INF && augment(u, adj, &mut match_l, &mut match_r, &mut layer, &mut it) {
                matched += 1;
            }
        }
    }
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    layer: &mut [usize],
    it: &mut [usize],
) -> bool {
    while it[u] < adj[u].len() {
        let v = adj[u][it[u]];
        it[u] += 1;
        let w = match_r[v];
        let ok = w == usize::MAX
            || (layer[w] == layer[u] + 1 && augment(w, adj, match_l, match_r, layer, it));
        if ok {
            match_l[u] = v;
            match_r[v] = u;
            return true;
        }
    }
    layer[u] = usize::MAX;
    false
}

fn linf(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

fn to_diagonal(p: (f64, f64)) -> f64 {
    (p.1 - p.0) / 2.0
}

/// Whether a perfect matching of cost at most `eps` exists between
/// `a ∪ diag(b)` and `b ∪ diag(a)`.
fn feasible(a: &[(f64, f64)], b: &[(f64, f64)], eps: f64) -> bool {
    let (na, nb) = (a.len(), b.len());
    // left: a points then diagonal slots for b; right: b points then diagonal slots for a
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); na + nb];
    for (i, &p) in a.iter().enumerate() {
        for (j, &q) in b.iter().enumerate() {
            if linf(p, q) <= eps {
                adj[i].push(j);
            }
        }
        if to_diagonal(p) <= eps {
            adj[i].push(nb + i);
        }
    }
    for (j, &q) in b.iter().enumerate() {
        let row = &mut adj[na + j];
        if to_diagonal(q) <= eps {
            row.push(j);
        }
        row.extend(nb..nb + na);
    }
    hopcroft_karp(&adj, na + nb) == na + nb
}

/// Bottleneck distance under the L∞ ground metric, points may be matched to
/// the diagonal. The answer is the smallest candidate cost at which a perfect
/// matching exists, found by binary search.
pub fn bottleneck_distance(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<f64> {
    if d1.order != d2.order {
        return Err(Error::OrderMismatch(d1.order, d2.order));
    }
    let (a, b) = (&d1.pairs, &d2.pairs);
    let mut candidates: Vec<f64> = vec![0.0];
    candidates.extend(a.iter().chain(b).map(|&p| to_diagonal(p)));
    for &p in a {
        candidates.extend(b.iter().map(|&q| linf(p, q)));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo])
}
