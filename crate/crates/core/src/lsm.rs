//! Distance latent space model: `logit p_ij = α − ‖z_i − z_j‖` with
//! positions in the plane, fitted by two-stage maximum likelihood
//! (classical MDS of hop distances, then gradient ascent).

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{shortest_paths, Graph};
use crate::seed;

pub const LATENT_DIM: usize = 2;

pub type Point = [f64; LATENT_DIM];

/// Fitted latent space embedding of one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub alpha: f64,
    pub positions: Vec<Point>,
    pub converged: bool,
    pub final_grad_norm: f64,
    pub log_lik: f64,
    pub iterations: usize,
}

impl Embedding {
    pub fn new(alpha: f64, positions: Vec<Point>) -> Self {
        Embedding {
            alpha,
            positions,
            converged: false,
            final_grad_norm: 0.0,
            log_lik: f64::NAN,
            iterations: 0,
        }
    }

    /// `alpha=<v>,loglik=<v>,converged=<0|1>` followed by one `x,y` row per node.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "alpha={},loglik={},converged={}\n",
            self.alpha,
            self.log_lik,
            u8::from(self.converged)
        );
        for p in &self.positions {
            writeln!(out, "{},{}", p[0], p[1]).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::arg("empty embedding file"))?;
        let (mut alpha, mut log_lik, mut converged) = (None, None, None);
        for field in header.split(',') {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("bad embedding header field {field:?}")))?;
            let bad = || Error::arg(format!("bad value in {field:?}"));
            match key.trim() {
                "alpha" => alpha = Some(value.parse::<f64>().map_err(|_| bad())?),
                "loglik" => log_lik = Some(value.parse::<f64>().map_err(|_| bad())?),
                "converged" => converged = Some(value.trim() == "1"),
                other => return Err(Error::arg(format!("unknown embedding key {other:?}"))),
            }
        }
        let mut positions = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (x, y) = line
                .split_once(',')
                .ok_or_else(|| Error::arg(format!("bad position row {line:?}")))?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| Error::arg(format!("bad coordinate {s:?}")))
            };
            positions.push([parse(x)?, parse(y)?]);
        }
        Ok(Embedding {
            alpha: alpha.ok_or_else(|| Error::arg("missing alpha"))?,
            positions,
            converged: converged.unwrap_or(false),
            final_grad_norm: 0.0,
            log_lik: log_lik.ok_or_else(|| Error::arg("missing loglik"))?,
            iterations: 0,
        })
    }
}

/// Settings for [`fit_lsm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub tol_grad: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub shrink: f64,
    pub alpha_max: f64,
    /// Pairwise distance floor.
    pub eps_pos: f64,
    /// Radius of the disc used to separate coincident starting points.
    pub jitter: f64,
    pub seed: u64,
    /// Stop once the log-likelihood has risen by less than
    /// `stall_rtol · |ℓ|` over the last `stall_window` iterations.
    pub stall_window: usize,
    pub stall_rtol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol_grad: 1e-5,
            max_iter: 2000,
            armijo_c: 1e-4,
            shrink: 0.5,
            alpha_max: 30.0,
            eps_pos: 1e-8,
            jitter: 1e-4,
            seed: 0,
            stall_window: 100,
            stall_rtol: 1e-9,
        }
    }
}

/// Numerically stable `log(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn dist(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

fn check_dims(g: &Graph, positions: &[Point]) -> Result<()> {
    if g.node_count() != positions.len() {
        return Err(Error::arg(format!(
            "embedding has {} positions for a graph of {} nodes",
            positions.len(),
            g.node_count()
        )));
    }
    Ok(())
}

fn loglik_raw(adj: &[u8], n: usize, alpha: f64, pos: &[Point]) -> f64 {
    let mut ll = 0.0;
    for i in 0..n {
        let row = &adj[i * n..(i + 1) * n];
        for j in i + 1..n {
            let eta = alpha - dist(&pos[i], &pos[j]);
            ll += f64::from(row[j]) * eta - softplus(eta);
        }
    }
    ll
}

/// Returns `(ℓ, ∂ℓ/∂α, ∂ℓ/∂z)`.
fn loglik_grad_raw(
    adj: &[u8],
    n: usize,
    alpha: f64,
    pos: &[Point],
    eps: f64,
) -> (f64, f64, Vec<Point>) {
    let mut ll = 0.0;
    let mut d_alpha = 0.0;
    let mut d_z = vec![[0.0; LATENT_DIM]; n];
    for i in 0..n {
        let row = &adj[i * n..(i + 1) * n];
        for j in i + 1..n {
            let dx = pos[i][0] - pos[j][0];
            let dy = pos[i][1] - pos[j][1];
            let d = (dx * dx + dy * dy).sqrt();
            let eta = alpha - d;
            let a = f64::from(row[j]);
            // softplus and sigmoid from a single exponential
            let e = (-eta.abs()).exp();
            ll += a * eta - (eta.max(0.0) + e.ln_1p());
            let sig = if eta >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            let resid = a - sig;
            d_alpha += resid;
            // ∂η/∂z_i = −(z_i − z_j)/d
            let c = -resid / d.max(eps);
            d_z[i][0] += c * dx;
            d_z[i][1] += c * dy;
            d_z[j][0] -= c * dx;
            d_z[j][1] -= c * dy;
        }
    }
    (ll, d_alpha, d_z)
}

/// Bernoulli log-likelihood `Σ_{i<j} A_ij η_ij − log(1 + e^{η_ij})`.
pub fn log_likelihood(g: &Graph, e: &Embedding) -> Result<f64> {
    check_dims(g, &e.positions)?;
    Ok(loglik_raw(&g.adjacency(), g.node_count(), e.alpha, &e.positions))
}

/// Analytic gradient `(∂ℓ/∂α, ∂ℓ/∂z_i)`. Distances in the position
/// gradient are floored at `eps_pos`.
pub fn log_lik_gradient(g: &Graph, e: &Embedding) -> Result<(f64, Vec<Point>)> {
    check_dims(g, &e.positions)?;
    let eps = FitConfig::default().eps_pos;
    if has_coincident(&e.positions, eps) {
        log::debug!("coincident latent positions; gradient uses floored distances");
    }
    let (_, da, dz) = loglik_grad_raw(&g.adjacency(), g.node_count(), e.alpha, &e.positions, eps);
    Ok((da, dz))
}

fn has_coincident(pos: &[Point], eps: f64) -> bool {
    (0..pos.len()).any(|i| (i + 1..pos.len()).any(|j| dist(&pos[i], &pos[j]) < eps))
}

/// Classical (Torgerson) MDS of a symmetric row-major distance matrix into
/// the plane. Each eigenvector's first nonzero coordinate is made positive;
/// directions with non-positive eigenvalue collapse to zero.
pub fn classical_mds(dist: &[f64], n: usize) -> Result<Vec<Point>> {
    if dist.len() != n * n {
        return Err(Error::arg("distance matrix is not n × n"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let sq = DMatrix::from_fn(n, n, |i, j| dist[i * n + j] * dist[i * n + j]);
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand));
    let eig = SymmetricEigen::try_new(b, 1e-14, 0)
        .ok_or_else(|| Error::Numeric("MDS eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut out = vec![[0.0; LATENT_DIM]; n];
    for (axis, &col) in order.iter().take(LATENT_DIM).enumerate() {
        let lambda = eig.eigenvalues[col];
        if lambda <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(col);
        let sign = v.iter().find(|x| **x != 0.0).map_or(1.0, |x| x.signum());
        let scale = lambda.sqrt() * sign;
        for i in 0..n {
            out[i][axis] = v[i] * scale;
        }
    }
    Ok(out)
}

/// Hop-distance matrix with unreachable pairs set to (largest finite hop + 1).
pub fn imputed_hop_matrix(g: &Graph) -> Vec<f64> {
    let hops = shortest_paths(g);
    let n = g.node_count();
    let fill = f64::from(hops.max_finite() + 1);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = hops.get(i, j).map_or(fill, f64::from);
        }
    }
    out
}

/// Stage-one initialization: classical MDS of imputed hop distances.
/// Graphs with fewer than 3 nodes get a fixed configuration.
pub fn mds_init(g: &Graph) -> Result<Vec<Point>> {
    match g.node_count() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![[0.0, 0.0]]),
        2 => Ok(vec![[0.0, 0.0], [1.0, 0.0]]),
        n => classical_mds(&imputed_hop_matrix(g), n),
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn separate_coincident(pos: &mut [Point], cfg: &FitConfig) -> usize {
    let mut rng = seed::rng_at(cfg.seed, &[0x6a17]);
    let mut moved = 0;
    for j in 1..pos.len() {
        while (0..j).any(|i| dist(&pos[i], &pos[j]) < cfg.eps_pos) {
            let r = cfg.jitter * rng.gen::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            pos[j][0] += r * theta.cos();
            pos[j][1] += r * theta.sin();
            moved += 1;
        }
    }
    moved
}

/// Two-stage maximum likelihood fit.
///
/// Stage two is gradient ascent on `(α, Z)` jointly. Each iteration tries a
/// Barzilai–Borwein step and backtracks until the Armijo condition holds, so
/// no accepted step lowers the likelihood. The likelihood is not smooth where
/// two positions meet, and maximizers often have such pairs, so the ascent
/// also stops when the likelihood stalls; `converged` reports only the
/// gradient test. Empty and complete graphs have an
/// unbounded likelihood in `α`; they return with `α = ∓alpha_max` and
/// `converged = false`.
pub fn fit_lsm(g: &Graph, cfg: &FitConfig) -> Result<Embedding> {
    let n = g.node_count();
    if n < 3 {
        return Err(Error::arg("fit_lsm needs at least 3 nodes"));
    }
    let adj = g.adjacency();
    let mut pos = mds_init(g)?;
    let moved = separate_coincident(&mut pos, cfg);
    if moved > 0 {
        log::debug!("separated {moved} coincident starting positions");
    }

    let density = g.density();
    if g.edge_count() == 0 || density >= 1.0 {
        let alpha = if g.edge_count() == 0 { -cfg.alpha_max } else { cfg.alpha_max };
        let (ll, da, dz) = loglik_grad_raw(&adj, n, alpha, &pos, cfg.eps_pos);
        return Ok(Embedding {
            alpha,
            final_grad_norm: sup_norm(da, &dz),
            log_lik: ll,
            positions: pos,
            converged: false,
            iterations: 0,
        });
    }

    let floor = 1.0 / (n * (n - 1)) as f64;
    let mut alpha = logit(density.max(floor)).clamp(-cfg.alpha_max, cfg.alpha_max);
    let (mut ll, mut da, mut dz) = loglik_grad_raw(&adj, n, alpha, &pos, cfg.eps_pos);
    let mut step = 1.0 / (1.0 + sup_norm(da, &dz));
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![[0.0; LATENT_DIM]; n];
    let mut window_start = ll;

    while iterations < cfg.max_iter {
        let gnorm = sup_norm(da, &dz);
        if gnorm < cfg.tol_grad {
            converged = true;
            break;
        }
        let g2 = da * da + dz.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>();
        let mut t = step;
        let mut accepted = None;
        for _ in 0..80 {
            let trial_alpha = (alpha + t * da).clamp(-cfg.alpha_max, cfg.alpha_max);
            for (dst, (p, d)) in trial.iter_mut().zip(pos.iter().zip(&dz)) {
                *dst = [p[0] + t * d[0], p[1] + t * d[1]];
            }
            let trial_ll = loglik_raw(&adj, n, trial_alpha, &trial);
            if trial_ll >= ll + cfg.armijo_c * t * g2 {
                accepted = Some(trial_alpha);
                break;
            }
            t *= cfg.shrink;
        }
        let Some(new_alpha) = accepted else {
            log::debug!("line search stalled after {iterations} iterations");
            break;
        };
        iterations += 1;
        let (new_ll, new_da, new_dz) = loglik_grad_raw(&adj, n, new_alpha, &trial, cfg.eps_pos);
        // Barzilai–Borwein (long) step for the next trial, for ascent: s·s / −s·y
        let mut ss = (new_alpha - alpha).powi(2);
        let mut sy = (new_alpha - alpha) * (new_da - da);
        for i in 0..n {
            for k in 0..LATENT_DIM {
                let s = trial[i][k] - pos[i][k];
                ss += s * s;
                sy += s * (new_dz[i][k] - dz[i][k]);
            }
        }
        step = if sy < 0.0 && ss > 0.0 { (ss / -sy).clamp(1e-12, 1e6) } else { t * 2.0 };
        std::mem::swap(&mut pos, &mut trial);
        alpha = new_alpha;
        ll = new_ll;
        da = new_da;
        dz = new_dz;
        if cfg.stall_window > 0 && iterations % cfg.stall_window == 0 {
            if ll - window_start <= cfg.stall_rtol * ll.abs() {
                log::debug!("log-likelihood stalled after {iterations} iterations");
                break;
            }
            window_start = ll;
        }
    }
    let final_grad_norm = sup_norm(da, &dz);
    if !converged && final_grad_norm < cfg.tol_grad {
        converged = true;
    }
    Ok(Embedding { alpha, positions: pos, converged, final_grad_norm, log_lik: ll, iterations })
}

fn sup_norm(da: f64, dz: &[Point]) -> f64 {
    dz.iter().flat_map(|p| p.iter()).fold(da.abs(), |m, x| m.max(x.abs()))
}

/// Draws a graph from the model with the given intercept and positions.
pub fn sample_graph(alpha: f64, positions: &[Point], seed: u64) -> Graph {
    let n = positions.len();
    let mut rng = seed::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < sigmoid(alpha - dist(&positions[i], &positions[j])) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).expect("indices are in range")
}

/// Row-major pairwise Euclidean distances of a point set.
pub fn pairwise_distances(points: &[Point]) -> Vec<f64> {
    let n = points.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(&points[i], &points[j]);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}
