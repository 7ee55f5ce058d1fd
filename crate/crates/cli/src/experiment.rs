//! Simulation harness: pairwise Erdős–Rényi comparisons and multi-sample
//! stochastic block model scenarios, each followed by energy tests and
//! clustering of the pooled landscapes.
//!
//! Every (class, rep) gets one pool of independently generated networks.
//! A comparison with `m` networks per group takes the first `m` entries of
//! each pool it needs, so the same fits serve every cell and every `m`.
//! All work is keyed by derived seeds and reduced in a fixed order, which
//! makes the artifacts independent of the worker count.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use lsmtopo_core::clustering::{build_affinity, k_groups, k_medoids, rand_index, spectral_cluster, KGroupsInit};
use lsmtopo_core::energy::{permutation_test, DistanceCache, StatisticKind};
use lsmtopo_core::landscape::Landscape;
use lsmtopo_core::lsm::FitConfig;
use lsmtopo_core::netgen::{even_blocks, gen_er, gen_sbm};
use lsmtopo_core::seed;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{io_err, CliError, Result};
use crate::pipeline::summarize;

pub const SCHEMA_VERSION: u32 = 1;
pub const TEST_METHODS: [&str; 2] = ["k_sample", "disco"];
pub const CLUSTER_METHODS: [&str; 3] = ["k_medoids", "k_groups", "spectral"];

const TAG_POOL: u64 = 1;
const TAG_TEST: u64 = 2;
const TAG_CLUSTER: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

/// Per-rep values and their mean for one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: String,
    pub row: usize,
    pub col: usize,
    pub m: usize,
    pub order: usize,
    pub method: String,
    pub per_rep: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub schema: u32,
    pub kind: ScenarioKind,
    pub provenance: Provenance,
    pub reps: usize,
    pub permutations: usize,
    /// Axis labels: probabilities for ER runs, scenarios for SBM runs.
    pub labels: Vec<String>,
    pub m_values: Vec<usize>,
    pub tests: Vec<CellResult>,
    pub clustering: Vec<CellResult>,
    /// Material for the landscape and MDS plots.
    pub preview: Option<Preview>,
}

/// Landscapes of the first rep of the first cell at the largest `m`, at the
/// first configured order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub cell: String,
    pub order: usize,
    /// Group of each pooled network.
    pub groups: Vec<usize>,
    /// Row-major landscape L2 distances between the pooled networks.
    pub distances: Vec<f64>,
    /// First network of each group.
    pub landscapes: Vec<Landscape>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl RunArtifacts {
    /// Checks the artifact against its schema and recomputes every mean.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.schema != SCHEMA_VERSION {
            return Err(format!("unknown schema version {}", self.schema));
        }
        if self.provenance.config_sha256.len() != 64
            || !self.provenance.config_sha256.bytes().all(|b| b.is_ascii_hexdigit())
        {
            return Err("config hash is not a sha256 hex digest".into());
        }
        let check = |r: &CellResult, methods: &[&str], lo_open: bool| -> std::result::Result<(), String> {
            if !methods.contains(&r.method.as_str()) {
                return Err(format!("unknown method {}", r.method));
            }
            if r.order > 1 || !self.m_values.contains(&r.m) {
                return Err(format!("cell {} has order {} and m {}", r.cell, r.order, r.m));
            }
            let (rows, cols) = match self.kind {
                ScenarioKind::ErPairwise => (self.labels.len(), self.labels.len()),
                ScenarioKind::SbmMultisample => (self.labels.len(), 1),
            };
            if r.row >= rows || r.col >= cols || (self.kind == ScenarioKind::ErPairwise && r.row < r.col) {
                return Err(format!("cell {} at ({}, {}) outside the table", r.cell, r.row, r.col));
            }
            if r.per_rep.len() != self.reps {
                return Err(format!("cell {} has {} reps, expected {}", r.cell, r.per_rep.len(), self.reps));
            }
            let in_range = |v: f64| if lo_open { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
            if !r.per_rep.iter().all(|&v| in_range(v)) {
                return Err(format!("cell {} has values out of range", r.cell));
            }
            if mean(&r.per_rep) != r.mean {
                return Err(format!("cell {} mean does not match its reps", r.cell));
            }
            Ok(())
        };
        for r in &self.tests {
            check(r, &TEST_METHODS, true)?;
            let lattice = r.per_rep.iter().all(|p| {
                let k = p * (self.permutations + 1) as f64;
                (k - k.round()).abs() < 1e-6
            });
            if !lattice {
                return Err(format!("cell {} p-values are not multiples of 1/(B+1)", r.cell));
            }
        }
        for r in &self.clustering {
            check(r, &CLUSTER_METHODS, false)?;
        }
        if let Some(p) = &self.preview {
            let n = p.groups.len();
            if p.distances.len() != n * n || p.groups.iter().any(|&g| g >= p.landscapes.len()) {
                return Err("preview shapes are inconsistent".into());
            }
        }
        Ok(())
    }

    pub fn find_test(&self, cell: &str, m: usize, order: usize, method: &str) -> Option<&CellResult> {
        self.tests.iter().find(|r| r.cell == cell && r.m == m && r.order == order && r.method == method)
    }

    pub fn find_cluster(&self, cell: &str, m: usize, order: usize, method: &str) -> Option<&CellResult> {
        self.clustering.iter().find(|r| r.cell == cell && r.m == m && r.order == order && r.method == method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    Er(f64),
    Sbm(usize),
}

impl Class {
    fn key(&self) -> [u64; 2] {
        match *self {
            Class::Er(p) => [0, p.to_bits()],
            Class::Sbm(k) => [1, k as u64],
        }
    }
}

struct Cell {
    label: String,
    row: usize,
    col: usize,
    /// `(class index, offset into the class pool)` per group.
    groups: Vec<(usize, usize)>,
}

struct Design {
    labels: Vec<String>,
    classes: Vec<Class>,
    cells: Vec<Cell>,
}

fn fmt_scenario(s: &[usize]) -> String {
    let parts: Vec<String> = s.iter().map(usize::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

fn design(cfg: &ScenarioConfig, max_m: usize) -> Design {
    match cfg.kind {
        ScenarioKind::ErPairwise => {
            let probs = &cfg.graphs.probabilities;
            let labels: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
            let mut cells = Vec::new();
            for j in 0..probs.len() {
                for i in 0..=j {
                    if i == j && !cfg.graphs.null_cells {
                        continue;
                    }
                    let offset = if i == j { max_m } else { 0 };
                    cells.push(Cell {
                        label: format!("{} vs {}", labels[i], labels[j]),
                        row: j,
                        col: i,
                        groups: vec![(i, 0), (j, offset)],
                    });
                }
            }
            Design { labels, classes: probs.iter().map(|&p| Class::Er(p)).collect(), cells }
        }
        ScenarioKind::SbmMultisample => {
            let ks: BTreeSet<usize> = cfg.graphs.scenarios.iter().flatten().copied().collect();
            let classes: Vec<usize> = ks.into_iter().collect();
            let labels: Vec<String> = cfg.graphs.scenarios.iter().map(|s| fmt_scenario(s)).collect();
            let cells = cfg
                .graphs
                .scenarios
                .iter()
                .enumerate()
                .map(|(row, s)| Cell {
                    label: labels[row].clone(),
                    row,
                    col: 0,
                    groups: s.iter().map(|k| (classes.binary_search(k).unwrap(), 0)).collect(),
                })
                .collect();
            Design { labels, classes: classes.into_iter().map(Class::Sbm).collect(), cells }
        }
    }
}

/// Landscapes of one network, both orders.
type Item = [Landscape; 2];

fn pool_item(cfg: &ScenarioConfig, class: Class, rep: usize, t: usize) -> Result<Item> {
    let [tag, key] = class.key();
    let mut rng = seed::rng_at(cfg.run.seed, &[TAG_POOL, tag, key, rep as u64, t as u64]);
    let n = rng.gen_range(cfg.graphs.n_min..=cfg.graphs.n_max);
    let graph_seed: u64 = rng.gen();
    let fit_seed: u64 = rng.gen();
    let g = match class {
        Class::Er(p) => gen_er(n, p, graph_seed)?,
        Class::Sbm(k) => gen_sbm(&even_blocks(n, k), cfg.graphs.p_high, cfg.graphs.p_low, graph_seed)?,
    };
    let fit = FitConfig { seed: fit_seed, ..FitConfig::default() };
    Ok(summarize(&g, cfg.run.convention, &fit)?.landscapes)
}

/// `pools[class][rep]` holds that pool's networks in draw order.
fn build_pools(cfg: &ScenarioConfig, d: &Design, size: usize) -> Result<Vec<Vec<Vec<Item>>>> {
    let jobs: Vec<(usize, usize, usize)> = (0..d.classes.len())
        .flat_map(|c| (0..cfg.run.reps).flat_map(move |r| (0..size).map(move |t| (c, r, t))))
        .collect();
    log::info!("fitting {} networks", jobs.len());
    let items: Vec<Item> =
        jobs.par_iter().map(|&(c, r, t)| pool_item(cfg, d.classes[c], r, t)).collect::<Result<_>>()?;
    let mut it = items.into_iter();
    Ok((0..d.classes.len())
        .map(|_| (0..cfg.run.reps).map(|_| it.by_ref().take(size).collect()).collect())
        .collect())
}

/// Values for one (cell, m, rep, order), in method order.
struct Outcome {
    p_values: [f64; 2],
    rand: [f64; 3],
}

fn run_unit(
    cfg: &ScenarioConfig,
    pools: &[Vec<Vec<Item>>],
    cell_idx: usize,
    cell: &Cell,
    m: usize,
    rep: usize,
    order: usize,
) -> Result<Outcome> {
    let mut pooled: Vec<Landscape> = Vec::new();
    let mut truth = Vec::new();
    for (g, &(class, offset)) in cell.groups.iter().enumerate() {
        pooled.extend(pools[class][rep][offset..offset + m].iter().map(|item| item[order].clone()));
        truth.extend(std::iter::repeat_n(g, m));
    }
    let cache = DistanceCache::from_landscapes(&pooled)?;
    let sizes = vec![m; cell.groups.len()];
    let unit = [cell_idx as u64, m as u64, rep as u64, order as u64];
    let path = |tag: u64, method: u64| [tag, unit[0], unit[1], unit[2], unit[3], method];

    let b = cfg.tests.permutations;
    let kinds = [StatisticKind::KSample, StatisticKind::Disco { rho: cfg.tests.rho }];
    let mut p_values = [0.0; 2];
    for (i, kind) in kinds.into_iter().enumerate() {
        let s = seed::derive(cfg.run.seed, &path(TAG_TEST, i as u64));
        p_values[i] = permutation_test(&cache, &sizes, kind, b, s)?.p_value;
    }

    let mut rand = [0.0; 3];
    if cfg.clustering.enabled {
        let k = cell.groups.len();
        let s = |i: u64| seed::derive(cfg.run.seed, &path(TAG_CLUSTER, i));
        let pam = k_medoids(&cache, k, s(0))?;
        let kg = k_groups(&cache, k, cfg.tests.rho, KGroupsInit::Medoids, s(1))?;
        let tau = cfg.clustering.tau.min(cache.len() - 1).max(1);
        let sp = if cache.len() > 1 {
            spectral_cluster(&build_affinity(&cache, tau)?, k, s(2))?.assignments
        } else {
            vec![0]
        };
        for (i, a) in [&pam.assignments, &kg.assignments, &sp].into_iter().enumerate() {
            rand[i] = rand_index(a, &truth)?;
        }
    }
    Ok(Outcome { p_values, rand })
}

pub fn run_er_pairwise(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    if cfg.kind != ScenarioKind::ErPairwise {
        return Err(CliError::config("expected kind = \"er_pairwise\""));
    }
    run_experiment(cfg)
}

pub fn run_sbm_scenarios(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    if cfg.kind != ScenarioKind::SbmMultisample {
        return Err(CliError::config("expected kind = \"sbm_multisample\""));
    }
    run_experiment(cfg)
}

pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the experiment described by `cfg`.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let max_m = *cfg.run.m.iter().max().expect("validated");
    let d = design(cfg, max_m);
    let pool_size = d.cells.iter().flat_map(|c| c.groups.iter().map(|g| g.1 + max_m)).max().unwrap_or(0);
    let pools = build_pools(cfg, &d, pool_size)?;

    let mut units = Vec::new();
    for (ci, _) in d.cells.iter().enumerate() {
        for &m in &cfg.run.m {
            for rep in 0..cfg.run.reps {
                for &order in &cfg.run.orders {
                    units.push((ci, m, rep, order));
                }
            }
        }
    }
    log::info!("running {} test and clustering units", units.len());
    let outcomes: Vec<Outcome> = units
        .par_iter()
        .map(|&(ci, m, rep, order)| run_unit(cfg, &pools, ci, &d.cells[ci], m, rep, order))
        .collect::<Result<_>>()?;

    let mut tests = Vec::new();
    let mut clustering = Vec::new();
    for (ci, cell) in d.cells.iter().enumerate() {
        for &m in &cfg.run.m {
            for &order in &cfg.run.orders {
                let pick = |f: &dyn Fn(&Outcome) -> f64| -> Vec<f64> {
                    units
                        .iter()
                        .zip(&outcomes)
                        .filter(|((c, mm, _, o), _)| *c == ci && *mm == m && *o == order)
                        .map(|(_, out)| f(out))
                        .collect()
                };
                let make = |method: &str, per_rep: Vec<f64>| CellResult {
                    cell: cell.label.clone(),
                    row: cell.row,
                    col: cell.col,
                    m,
                    order,
                    method: method.to_string(),
                    mean: mean(&per_rep),
                    per_rep,
                };
                for (i, method) in TEST_METHODS.iter().enumerate() {
                    tests.push(make(method, pick(&|o| o.p_values[i])));
                }
                if cfg.clustering.enabled {
                    for (i, method) in CLUSTER_METHODS.iter().enumerate() {
                        clustering.push(make(method, pick(&|o| o.rand[i])));
                    }
                }
            }
        }
    }

    let preview = d.cells.first().map(|cell| {
        let order = cfg.run.orders[0];
        let mut items = Vec::new();
        let mut groups = Vec::new();
        for (g, &(class, offset)) in cell.groups.iter().enumerate() {
            items.extend(pools[class][0][offset..offset + max_m].iter().map(|it| it[order].clone()));
            groups.extend(std::iter::repeat_n(g, max_m));
        }
        let cache = DistanceCache::from_landscapes(&items)?;
        let landscapes = (0..cell.groups.len()).map(|g| items[g * max_m].clone()).collect();
        Ok::<_, CliError>(Preview {
            cell: cell.label.clone(),
            order,
            groups,
            distances: cache.as_slice().to_vec(),
            landscapes,
        })
    });

    let artifacts = RunArtifacts {
        schema: SCHEMA_VERSION,
        kind: cfg.kind,
        provenance: Provenance {
            config_sha256: config_hash(cfg),
            seed: cfg.run.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        reps: cfg.run.reps,
        permutations: cfg.tests.permutations,
        labels: d.labels,
        m_values: cfg.run.m.clone(),
        tests,
        clustering,
        preview: preview.transpose()?,
    };
    artifacts.validate().map_err(|e| CliError::Core(lsmtopo_core::Error::Numeric(e)))?;
    Ok(artifacts)
}

fn cells_csv(rows: &[CellResult]) -> String {
    let mut out = String::from("cell,row,col,m,order,method,mean,per_rep\n");
    for r in rows {
        let reps: Vec<String> = r.per_rep.iter().map(f64::to_string).collect();
        out.push_str(&format!(
            "\"{}\",{},{},{},{},{},{},{}\n",
            r.cell,
            r.row,
            r.col,
            r.m,
            r.order,
            r.method,
            r.mean,
            reps.join(";")
        ));
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Writes the resolved config, the JSON artifact, CSV tables and plots.
pub fn write_artifacts(dir: &Path, cfg: &ScenarioConfig, a: &RunArtifacts) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(a).expect("artifacts serialize") + "\n";
    for (name, body) in [
        ("config.toml", cfg.to_toml()),
        ("artifacts.json", json),
        ("tests.csv", cells_csv(&a.tests)),
        ("clustering.csv", cells_csv(&a.clustering)),
    ] {
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
    }
    written.extend(crate::plot::emit_plots(a, &dir.join("plots"))?);
    Ok(written)
}

pub fn read_artifacts(dir: &Path) -> Result<RunArtifacts> {
    let path = dir.join("artifacts.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let a: RunArtifacts =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    a.validate().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(a)
}
