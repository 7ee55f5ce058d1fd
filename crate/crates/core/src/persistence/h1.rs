use std::collections::HashMap;

use super::h0::merging_edges;
use super::{Filtration, PersistenceDiagram};

/// Triangle in filtration order: rank of its longest edge, then the sorted
/// vertex triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Tri {
    rank: u32,
    a: u32,
    b: u32,
    c: u32,
}

impl Tri {
    fn new(rank: &[u32], m: usize, mut v: [usize; 3]) -> Self {
        v.sort_unstable();
        let [a, b, c] = v;
        let r = rank[a * m + b].max(rank[a * m + c]).max(rank[b * m + c]);
        Tri { rank: r, a: a as u32, b: b as u32, c: c as u32 }
    }
}

/// Z/2 sum of two sorted columns.
fn add_columns<T: Ord + Copy>(x: &[T], y: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => {
                out.push(x[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(y[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&x[i..]);
    out.extend_from_slice(&y[j..]);
    out
}

fn push_pair(pairs: &mut Vec<(f64, f64)>, birth: f64, death: f64) {
    if death > birth {
        pairs.push((birth, death));
    }
}

/// Order-1 diagram by reduction of the coboundary matrix.
///
/// Edge columns are processed from last to first in filtration order; the
/// pivot of a column is its earliest coface. Edges that merge components
/// can never carry a 1-cocycle and are skipped. Pairs with zero persistence
/// are dropped and classes still alive at the end are truncated at
/// `max_filtration`.
pub fn diagram_h1(f: &Filtration) -> PersistenceDiagram {
    let m = f.point_count();
    let rank = f.edge_ranks();
    let merging = merging_edges(f);
    let mut owner: HashMap<Tri, usize> = HashMap::new();
    let mut reduced: Vec<Vec<Tri>> = Vec::new();
    let mut pairs = Vec::new();

    for (r, e) in f.edges.iter().enumerate().rev() {
        if merging[r] {
            continue;
        }
        let mut col: Vec<Tri> =
            (0..m).filter(|&k| k != e.i && k != e.j).map(|k| Tri::new(&rank, m, [e.i, e.j, k])).collect();
        col.sort_unstable();
        while let Some(&o) = col.first().and_then(|p| owner.get(p)) {
            col = add_columns(&col, &reduced[o]);
        }
        match col.first() {
            None => push_pair(&mut pairs, e.value, f.max_filtration),
            Some(&pivot) => {
                push_pair(&mut pairs, e.value, f.edges[pivot.rank as usize].value);
                owner.insert(pivot, reduced.len());
                reduced.push(col);
            }
        }
    }
    PersistenceDiagram::new(1, pairs, f.max_filtration)
}

/// Order-1 diagram by the standard left-to-right reduction of the boundary
/// matrix of triangles. Cubic in the number of points; used as a cross-check.
pub fn diagram_h1_homology(f: &Filtration) -> PersistenceDiagram {
    let m = f.point_count();
    let rank = f.edge_ranks();
    let mut tris = Vec::with_capacity(m * m * m / 6);
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                tris.push(Tri::new(&rank, m, [a, b, c]));
            }
        }
    }
    tris.sort_unstable();

    let mut owner: HashMap<u32, usize> = HashMap::new();
    let mut reduced: Vec<Vec<u32>> = Vec::new();
    let mut killed = vec![false; f.edges.len()];
    let mut pairs = Vec::new();
    for t in &tris {
        let (a, b, c) = (t.a as usize, t.b as usize, t.c as usize);
        let mut col = vec![rank[a * m + b], rank[a * m + c], rank[b * m + c]];
        col.sort_unstable();
        while let Some(&o) = col.last().and_then(|p| owner.get(p)) {
            col = add_columns(&col, &reduced[o]);
        }
        if let Some(&low) = col.last() {
            killed[low as usize] = true;
            push_pair(&mut pairs, f.edges[low as usize].value, f.edges[t.rank as usize].value);
            owner.insert(low, reduced.len());
            reduced.push(col);
        }
    }
    let merging = merging_edges(f);
    for (r, e) in f.edges.iter().enumerate() {
        if !merging[r] && !killed[r] {
            push_pair(&mut pairs, e.value, f.max_filtration);
        }
    }
    PersistenceDiagram::new(1, pairs, f.max_filtration)
}
