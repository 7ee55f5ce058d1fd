//! Undirected simple graphs, random graph generators and graph-level
//! descriptors.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Undirected simple graph on nodes `0..n`.
///
/// Adjacency lists are kept sorted, each edge is stored in both endpoint
/// lists, and self-loops are never admitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { n, adj: vec![Vec::new(); n] }
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Graph { n, adj }
    }

    /// Builds a graph from an edge list. Duplicates are merged; self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph::empty(n);
        for (i, j) in edges {
            if i == j {
                return Err(Error::arg(format!("self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::arg(format!("edge ({i}, {j}) out of range for n={n}")));
            }
            g.adj[i].push(j);
            g.adj[j].push(i);
        }
        for list in &mut g.adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Dense row-major 0/1 adjacency matrix.
    pub fn adjacency(&self) -> Vec<u8> {
        let mut a = vec![0u8; self.n * self.n];
        for (i, j) in self.edges() {
            a[i * self.n + j] = 1;
            a[j * self.n + i] = 1;
        }
        a
    }

    pub fn density(&self) -> f64 {
        let pairs = self.n * self.n.saturating_sub(1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }

    /// Plain-text edge list: `n=<count>` then one `i j` line per edge, `i < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}").unwrap();
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::arg("empty edge list"))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::arg(format!("bad edge list header {header:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => edges.push((i, j)),
                _ => return Err(Error::arg(format!("bad edge line {line:?}"))),
            }
        }
        Graph::from_edges(n, edges)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Probability(p))
    }
}

/// Erdős–Rényi G(n, p). Pairs are visited in lexicographic order and each
/// consumes exactly one uniform draw.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::arg("node count must be positive"));
    }
    check_probability(p)?;
    let mut rng = seed::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Stochastic block model with contiguous blocks. Uses the same draw order as
/// [`gen_er`], so a single block reproduces `gen_er` exactly for equal seeds.
pub fn gen_sbm(block_sizes: &[usize], p_high: f64, p_low: f64, seed: u64) -> Result<Graph> {
    if block_sizes.is_empty() {
        return Err(Error::arg("block list is empty"));
    }
    if block_sizes.contains(&0) {
        return Err(Error::arg("block sizes must be positive"));
    }
    check_probability(p_high)?;
    check_probability(p_low)?;
    let labels = block_labels(block_sizes);
    let n = labels.len();
    let mut rng = seed::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_high } else { p_low };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Block index of every node for contiguous blocks of the given sizes.
pub fn block_labels(block_sizes: &[usize]) -> Vec<usize> {
    block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect()
}

/// Splits `n` nodes as evenly as possible over `k` blocks, the remainder going
/// to the first blocks.
pub fn even_blocks(n: usize, k: usize) -> Vec<usize> {
    assert!(k > 0, "block count must be positive");
    (0..k).map(|b| n / k + usize::from(b < n % k)).collect()
}

/// All-pairs BFS hop distances; `None` marks unreachable pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopMatrix {
    n: usize,
    dist: Vec<Option<u32>>,
}

impl HopMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        self.dist[i * self.n + j]
    }

    pub fn max_finite(&self) -> u32 {
        self.dist.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        self.dist.iter().all(Option::is_some)
    }
}

fn bfs(g: &Graph, src: usize, out: &mut [Option<u32>]) {
    out.fill(None);
    out[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = out[u].unwrap();
        for &v in g.neighbors(u) {
            if out[v].is_none() {
                out[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
}

pub fn shortest_paths(g: &Graph) -> HopMatrix {
    let n = g.node_count();
    let mut dist = vec![None; n * n];
    for (s, row) in dist.chunks_mut(n.max(1)).enumerate().take(n) {
        bfs(g, s, row);
    }
    HopMatrix { n, dist }
}

/// Connected components, each sorted, ordered by smallest member.
pub fn components(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Graph-level summary statistics. Centralities are node means; diameter and
/// average shortest path are taken over the largest connected component,
/// whose size is reported in `lcc_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub average_degree: f64,
    pub avg_shortest_path: f64,
    pub betweenness: f64,
    pub closeness: f64,
    pub degree_centrality: f64,
    pub density: f64,
    pub diameter: f64,
    pub modularity: f64,
    pub transitivity: f64,
    pub lcc_size: usize,
}

impl DescriptorRecord {
    pub const CSV_HEADER: &'static str = "average_degree,avg_shortest_path,betweenness,closeness,\
degree_centrality,density,diameter,modularity,transitivity,lcc_size";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.average_degree,
            self.avg_shortest_path,
            self.betweenness,
            self.closeness,
            self.degree_centrality,
            self.density,
            self.diameter,
            self.modularity,
            self.transitivity,
            self.lcc_size
        )
    }
}

pub fn descriptors(g: &Graph) -> Result<DescriptorRecord> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::arg("descriptors need at least 2 nodes"));
    }
    let hops = shortest_paths(g);
    let comps = components(g);
    let lcc = comps
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .unwrap();

    let (mut diameter, mut total, mut pairs) = (0u32, 0u64, 0u64);
    for &i in lcc {
        for &j in lcc {
            if i != j {
                let d = hops.get(i, j).unwrap();
                diameter = diameter.max(d);
                total += u64::from(d);
                pairs += 1;
            }
        }
    }
    let avg_shortest_path = if pairs == 0 { 0.0 } else { total as f64 / pairs as f64 };

    let degree_sum: usize = (0..n).map(|i| g.degree(i)).sum();
    let closeness = (0..n)
        .map(|u| {
            let (reach, sum) = (0..n)
                .filter(|&v| v != u)
                .filter_map(|v| hops.get(u, v))
                .fold((0u64, 0u64), |(r, s), d| (r + 1, s + u64::from(d)));
            if sum == 0 {
                0.0
            } else {
                (reach as f64 / sum as f64) * (reach as f64 / (n - 1) as f64)
            }
        })
        .sum::<f64>()
        / n as f64;

    Ok(DescriptorRecord {
        average_degree: degree_sum as f64 / n as f64,
        avg_shortest_path,
        betweenness: betweenness(g).iter().sum::<f64>() / n as f64,
        closeness,
        degree_centrality: degree_sum as f64 / (n * (n - 1)) as f64,
        density: g.density(),
        diameter: f64::from(diameter),
        modularity: modularity(g, &greedy_modularity_partition(g)),
        transitivity: transitivity(g),
        lcc_size: lcc.len(),
    })
}

/// Brandes betweenness, normalized by the number of unordered node pairs not
/// containing the node, `(n-1)(n-2)/2`.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut bc = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        sigma.fill(0.0);
        dist.fill(-1);
        delta.fill(0.0);
        preds.iter_mut().for_each(Vec::clear);
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // each unordered pair was counted from both endpoints
    let scale = if n > 2 { 1.0 / ((n - 1) * (n - 2)) as f64 } else { 0.0 };
    bc.iter_mut().for_each(|b| *b *= scale);
    bc
}

/// Global clustering coefficient: 3 × triangles / connected triples.
pub fn transitivity(g: &Graph) -> f64 {
    let n = g.node_count();
    let mut triangles = 0u64;
    for (i, j) in g.edges() {
        triangles += g.neighbors(i).iter().filter(|&&k| k > j && g.has_edge(j, k)).count() as u64;
    }
    let triples: u64 = (0..n)
        .map(|v| {
            let d = g.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if triples == 0 {
        0.0
    } else {
        (3 * triangles) as f64 / triples as f64
    }
}

/// Newman modularity of a node labelling.
pub fn modularity(g: &Graph, labels: &[usize]) -> f64 {
    let m = g.edge_count();
    if m == 0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |&x| x + 1);
    let mut internal = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for (i, j) in g.edges() {
        if labels[i] == labels[j] {
            internal[labels[i]] += 1;
        }
    }
    for v in 0..g.node_count() {
        degree[labels[v]] += g.degree(v);
    }
    let m = m as f64;
    (0..k)
        .map(|c| internal[c] as f64 / m - (degree[c] as f64 / (2.0 * m)).powi(2))
        .sum()
}

/// Greedy agglomerative modularity maximization (Clauset–Newman–Moore
/// merge rule). Repeatedly merges the adjacent community pair with the
/// largest positive gain; ties go to the lowest pair of community ids.
/// Gains are compared in exact integer arithmetic. Returns dense labels.
pub fn greedy_modularity_partition(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let m = g.edge_count() as i128;
    let mut label: Vec<usize> = (0..n).collect();
    if m == 0 {
        return label;
    }
    // between[a][b]: edges joining communities a and b (a != b)
    let mut between = vec![vec![0i128; n]; n];
    for (i, j) in g.edges() {
        between[i][j] += 1;
        between[j][i] += 1;
    }
    let mut deg: Vec<i128> = (0..n).map(|i| g.degree(i) as i128).collect();
    let mut alive = vec![true; n];
    loop {
        // gain × 2m² = 2m·e_ab − D_a·D_b
        let mut best: Option<(i128, usize, usize)> = None;
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for b in a + 1..n {
                if !alive[b] || between[a][b] == 0 {
                    continue;
                }
                let gain = 2 * m * between[a][b] - deg[a] * deg[b];
                if best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, a, b));
                }
            }
        }
        let Some((gain, a, b)) = best else { break };
        if gain <= 0 {
            break;
        }
        alive[b] = false;
        deg[a] += deg[b];
        for c in 0..n {
            if c != a && c != b {
                let e = between[b][c];
                between[a][c] += e;
                between[c][a] += e;
            }
            between[b][c] = 0;
            between[c][b] = 0;
        }
        between[a][a] = 0;
        label.iter_mut().filter(|l| **l == b).for_each(|l| *l = a);
    }
    // densify labels in order of first appearance
    let mut remap = vec![usize::MAX; n];
    let mut next = 0;
    for l in &mut label {
        if remap[*l] == usize::MAX {
            remap[*l] = next;
            next += 1;
        }
        *l = remap[*l];
    }
    label
}
