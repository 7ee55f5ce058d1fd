//! Persistence landscapes stored exactly as breakpoint lists, with the L1,
//! L2 and sup norms computed by exact segment integration.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// Sequence of nested piecewise-linear functions `Λ_1 ≥ Λ_2 ≥ …`.
///
/// Each level is a list of `(t, value)` breakpoints sorted by `t`, starting
/// and ending at value 0; the function is 0 outside that range and linear
/// between breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub order: usize,
    pub levels: Vec<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

/// Tent over `[b, d]` peaking at `((b + d) / 2, (d − b) / 2)`.
#[inline]
pub fn tent(t: f64, b: f64, d: f64) -> f64 {
    (t - b).min(d - t).max(0.0)
}

impl Landscape {
    pub fn zero(order: usize) -> Self {
        Landscape { order, levels: Vec::new() }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Value of level `k` (1-based) at `t`; 0 beyond the stored levels.
    pub fn eval(&self, k: usize, t: f64) -> f64 {
        assert!(k >= 1, "landscape levels are 1-based");
        self.levels.get(k - 1).map_or(0.0, |level| eval_level(level, t))
    }

    /// Multiplies every function value by `c > 0`.
    pub fn scale_values(&self, c: f64) -> Self {
        Landscape {
            order: self.order,
            levels: self
                .levels
                .iter()
                .map(|l| l.iter().map(|&(t, v)| (t, v * c)).collect())
                .collect(),
        }
    }

    /// `level,t,value` rows under a `# order=<k>` comment.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# order={}\nlevel,t,value\n", self.order);
        for (k, level) in self.levels.iter().enumerate() {
            for (t, v) in level {
                writeln!(out, "{},{t},{v}", k + 1).unwrap();
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut order = 0;
        let mut levels: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut saw_header = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("order=") {
                    order = v.parse().map_err(|_| Error::arg("bad order comment"))?;
                }
                continue;
            }
            if !saw_header {
                if line != "level,t,value" {
                    return Err(Error::arg(format!("bad landscape header {line:?}")));
                }
                saw_header = true;
                continue;
            }
            let bad = || Error::arg(format!("bad landscape row {line:?}"));
            let fields: Vec<&str> = line.split(',').collect();
            let [k, t, v] = fields[..] else { return Err(bad()) };
            let k: usize = k.parse().map_err(|_| bad())?;
            if k == 0 || k > levels.len() + 1 {
                return Err(bad());
            }
            if k > levels.len() {
                levels.push(Vec::new());
            }
            levels[k - 1].push((t.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?));
        }
        if !saw_header {
            return Err(Error::arg("missing landscape header"));
        }
        Ok(Landscape { order, levels })
    }
}

fn eval_level(level: &[(f64, f64)], t: f64) -> f64 {
    let (Some(first), Some(last)) = (level.first(), level.last()) else { return 0.0 };
    if t <= first.0 || t >= last.0 {
        return if t == first.0 { first.1 } else if t == last.0 { last.1 } else { 0.0 };
    }
    let idx = level.partition_point(|p| p.0 <= t);
    let (t0, v0) = level[idx - 1];
    let (t1, v1) = level[idx];
    if t1 == t0 {
        return v0.max(v1);
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Drops breakpoints that lie on the segment joining their kept neighbours.
fn simplify(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    if points.len() <= 2 {
        return points;
    }
    let scale = points.iter().fold(0.0f64, |m, p| m.max(p.1.abs())).max(1e-300);
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    out.push(points[0]);
    for w in 1..points.len() - 1 {
        let (t0, v0) = *out.last().unwrap();
        let (t, v) = points[w];
        let (t1, v1) = points[w + 1];
        let interp = v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        if (v - interp).abs() > 1e-12 * scale {
            out.push((t, v));
        }
    }
    out.push(*points.last().unwrap());
    out
}

/// Exact landscape of a diagram.
///
/// Between consecutive critical abscissae (tent endpoints, peaks and
/// crossings `(b_i + d_j) / 2` of a rising and a falling edge) the order of
/// the tents never changes, so every level is linear there. Evaluating the
/// k-th largest tent at each critical point therefore gives exact
/// breakpoints.
pub fn build_landscape(d: &PersistenceDiagram) -> Landscape {
    let tents: Vec<(f64, f64)> = d.pairs.iter().copied().filter(|&(b, d)| d > b).collect();
    if tents.is_empty() {
        return Landscape::zero(d.order);
    }
    let mut ts: Vec<f64> = Vec::with_capacity(3 * tents.len());
    for &(b, d) in &tents {
        ts.extend([b, d, (b + d) / 2.0]);
    }
    for &(bi, di) in &tents {
        for &(bj, dj) in &tents {
            let x = (bi + dj) / 2.0;
            if x > bi && x < dj && x > bj && x < di {
                ts.push(x);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(ts.len());
    let mut depth = 0;
    for &t in &ts {
        let mut vals: Vec<f64> =
            tents.iter().map(|&(b, d)| tent(t, b, d)).filter(|&v| v > 0.0).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        depth = depth.max(vals.len());
        columns.push(vals);
    }
    let levels = (0..depth)
        .map(|k| {
            let pts: Vec<(f64, f64)> = ts
                .iter()
                .zip(&columns)
                .map(|(&t, vals)| (t, vals.get(k).copied().unwrap_or(0.0)))
                .collect();
            trim_zeros(simplify(pts))
        })
        .collect();
    Landscape { order: d.order, levels }
}

/// Keeps a single zero breakpoint on each side of the support.
fn trim_zeros(pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let first = pts.iter().position(|p| p.1 != 0.0);
    let last = pts.iter().rposition(|p| p.1 != 0.0);
    match (first, last) {
        (Some(f), Some(l)) => pts[f.saturating_sub(1)..=(l + 1).min(pts.len() - 1)].to_vec(),
        _ => Vec::new(),
    }
}

fn check_orders(a: &Landscape, b: &Landscape) -> Result<()> {
    if a.order != b.order {
        return Err(Error::OrderMismatch(a.order, b.order));
    }
    Ok(())
}

/// Sorted union of breakpoint abscissae of two levels.
fn merged_ts(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<f64> {
    let mut ts: Vec<f64> = a.iter().chain(b).map(|p| p.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn empty_level() -> &'static [(f64, f64)] {
    &[]
}

/// `∫ (a − b)²` for one pair of levels, exact on each merged segment.
fn level_sq_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let ts = merged_ts(a, b);
    let mut total = 0.0;
    for w in ts.windows(2) {
        let h = w[1] - w[0];
        let u = eval_level(a, w[0]) - eval_level(b, w[0]);
        let v = eval_level(a, w[1]) - eval_level(b, w[1]);
        total += h * (u * u + u * v + v * v) / 3.0;
    }
    total
}

pub fn l2_distance(a: &Landscape, b: &Landscape) -> Result<f64> {
    check_orders(a, b)?;
    let depth = a.depth().max(b.depth());
    let sq: f64 = (0..depth)
        .map(|k| {
            level_sq_distance(
                a.levels.get(k).map_or(empty_level(), Vec::as_slice),
                b.levels.get(k).map_or(empty_level(), Vec::as_slice),
            )
        })
        .sum();
    Ok(sq.sqrt())
}

pub fn sup_distance(a: &Landscape, b: &Landscape) -> Result<f64> {
    check_orders(a, b)?;
    let depth = a.depth().max(b.depth());
    let mut best = 0.0f64;
    for k in 0..depth {
        let la = a.levels.get(k).map_or(empty_level(), Vec::as_slice);
        let lb = b.levels.get(k).map_or(empty_level(), Vec::as_slice);
        for t in merged_ts(la, lb) {
            best = best.max((eval_level(la, t) - eval_level(lb, t)).abs());
        }
    }
    Ok(best)
}

pub fn lp_norm(a: &Landscape, p: Norm) -> f64 {
    match p {
        Norm::Inf => a.levels.first().map_or(0.0, |l| l.iter().fold(0.0, |m, x| m.max(x.1))),
        Norm::L1 => a
            .levels
            .iter()
            .flat_map(|l| l.windows(2))
            .map(|w| (w[1].0 - w[0].0) * (w[0].1.abs() + w[1].1.abs()) / 2.0)
            .sum(),
        Norm::L2 => a
            .levels
            .iter()
            .map(|l| level_sq_distance(l, empty_level()))
            .sum::<f64>()
            .sqrt(),
    }
}
