//! Vietoris–Rips persistence of planar point sets in homology orders 0 and 1.
//!
//! Order 0 is a union-find sweep over the sorted edges. Order 1 is computed
//! by column reduction over Z/2 of the coboundary matrix (the anti-transposed
//! boundary matrix of edges and triangles), with edges that kill a component
//! cleared up front. The plain boundary-matrix reduction is kept as
//! [`diagram_h1_homology`]; both give identical pairs.

mod bottleneck;
mod h0;
mod h1;

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsm::Point;

pub use bottleneck::{bottleneck_distance, hopcroft_karp};
pub use h0::{diagram_h0, UnionFind};
pub use h1::{diagram_h1, diagram_h1_homology};

/// Whether an edge enters at half its length (ball radius) or at its full
/// length (ball diameter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Radius,
    Diameter,
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radius" => Ok(Convention::Radius),
            "diameter" => Ok(Convention::Diameter),
            other => Err(Error::arg(format!("unknown filtration convention {other:?}"))),
        }
    }
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Convention::Radius => "radius",
            Convention::Diameter => "diameter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredEdge {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// All edges of the complete graph on the points, sorted by filtration value
/// with ties broken lexicographically on `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    pub points: Vec<Point>,
    pub convention: Convention,
    pub edges: Vec<FilteredEdge>,
    pub max_filtration: f64,
}

impl Filtration {
    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// Row-major matrix of each edge's position in the sorted order
    /// (diagonal entries are unused).
    pub fn edge_ranks(&self) -> Vec<u32> {
        let m = self.points.len();
        let mut rank = vec![u32::MAX; m * m];
        for (r, e) in self.edges.iter().enumerate() {
            rank[e.i * m + e.j] = r as u32;
            rank[e.j * m + e.i] = r as u32;
        }
        rank
    }
}

/// Distance as used by every filtration value.
pub fn euclidean(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

pub fn vr_filtration(points: &[Point], convention: Convention) -> Result<Filtration> {
    if points.is_empty() {
        return Err(Error::arg("filtration needs at least one point"));
    }
    let m = points.len();
    let scale = match convention {
        Convention::Radius => 0.5,
        Convention::Diameter => 1.0,
    };
    let mut edges = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            edges.push(FilteredEdge { i, j, value: euclidean(&points[i], &points[j]) * scale });
        }
    }
    edges.sort_by(|a, b| a.value.total_cmp(&b.value).then((a.i, a.j).cmp(&(b.i, b.j))));
    let max_filtration = edges.last().map_or(0.0, |e| e.value);
    Ok(Filtration { points: points.to_vec(), convention, edges, max_filtration })
}

/// Multiset of `(birth, death)` pairs, kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub order: usize,
    pub pairs: Vec<(f64, f64)>,
    pub max_filtration: f64,
}

impl PersistenceDiagram {
    pub fn new(order: usize, mut pairs: Vec<(f64, f64)>, max_filtration: f64) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        PersistenceDiagram { order, pairs, max_filtration }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Same pairs with every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        PersistenceDiagram::new(
            self.order,
            self.pairs.iter().map(|&(b, d)| (b * c, d * c)).collect(),
            self.max_filtration * c,
        )
    }

    /// The diagram without the essential order-0 class `(0, max_filtration)`.
    ///
    /// Every network's essential component is truncated at its own
    /// `max_filtration`, so its tent measures embedding spread rather than
    /// topology. Dropping it gives landscapes whose distances equal those of
    /// landscapes truncated at one value shared by all diagrams. Order-1
    /// diagrams have no essential class and are returned unchanged.
    pub fn without_essential(&self) -> Self {
        let mut pairs = self.pairs.clone();
        if self.order == 0 {
            if let Some(i) = pairs.iter().rposition(|&p| p == (0.0, self.max_filtration)) {
                pairs.remove(i);
            }
        }
        PersistenceDiagram { order: self.order, pairs, max_filtration: self.max_filtration }
    }

    /// `# maxfilt=<v>` comment, `order,birth,death` header, one row per pair.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# maxfilt={}\norder,birth,death\n", self.max_filtration);
        for (b, d) in &self.pairs {
            writeln!(out, "{},{b},{d}", self.order).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut max_filtration = None;
        let mut order = None;
        let mut pairs = Vec::new();
        let mut saw_header = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("maxfilt=") {
                    max_filtration =
                        Some(v.parse::<f64>().map_err(|_| Error::arg("bad maxfilt value"))?);
                }
                continue;
            }
            if !saw_header {
                if line != "order,birth,death" {
                    return Err(Error::arg(format!("bad diagram header {line:?}")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [o, b, d] = fields[..] else {
                return Err(Error::arg(format!("bad diagram row {line:?}")));
            };
            let bad = || Error::arg(format!("bad diagram row {line:?}"));
            let o: usize = o.parse().map_err(|_| bad())?;
            if order.is_some_and(|x| x != o) {
                return Err(Error::arg("mixed homology orders in one diagram"));
            }
            order = Some(o);
            pairs.push((b.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?));
        }
        if !saw_header {
            return Err(Error::arg("missing diagram header"));
        }
        let max_filtration = max_filtration.ok_or_else(|| Error::arg("missing # maxfilt line"))?;
        Ok(PersistenceDiagram::new(order.unwrap_or(0), pairs, max_filtration))
    }
}

/// Diagram of the requested order (0 or 1).
pub fn diagram(f: &Filtration, order: usize) -> Result<PersistenceDiagram> {
    match order {
        0 => Ok(diagram_h0(f)),
        1 => Ok(diagram_h1(f)),
        o => Err(Error::arg(format!("homology order {o} is not supported (0 or 1)"))),
    }
}
