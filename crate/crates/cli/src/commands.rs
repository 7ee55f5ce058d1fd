//! Argument parsing and the subcommand implementations behind the binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsmtopo_core::clustering::{build_affinity, k_groups, k_medoids, rand_index, spectral_cluster, KGroupsInit};
use lsmtopo_core::energy::{test_samples, DistanceCache, Sample, StatisticKind};
use lsmtopo_core::landscape::Landscape;
use lsmtopo_core::lsm::{fit_lsm, log_likelihood, Embedding, FitConfig};
use lsmtopo_core::netgen::{block_labels, even_blocks, gen_er, gen_sbm, Graph};
use lsmtopo_core::persistence::{diagram, vr_filtration, Convention, PersistenceDiagram};
use serde::Serialize;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{io_err, CliError, Result};
use crate::experiment::{read_artifacts, run_er_pairwise, run_sbm_scenarios, write_artifacts, write_file};
use crate::pipeline::network_landscape;
use crate::plot::{emit_plots, landscape_plot};

#[derive(Debug, Parser)]
#[command(name = "lsmtopo", version, about = "Topological comparison of network populations through latent space embeddings")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Base random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Homology order.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub order: Option<u8>,
    #[arg(long, global = true, value_enum)]
    pub convention: Option<ConventionArg>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Number of permutations.
    #[arg(long = "b", global = true)]
    pub permutations: Option<usize>,
    /// Exponent of the energy distance, in (0, 2].
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// Neighbor rank for the self-tuning affinity.
    #[arg(long, global = true)]
    pub tau: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Radius,
    Diameter,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Radius => Convention::Radius,
            ConventionArg::Diameter => Convention::Diameter,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a random graph and write it as an edge list.
    Generate {
        #[command(subcommand)]
        model: Model,
    },
    /// Fit a latent space model to an edge list.
    Fit {
        graph: PathBuf,
    },
    /// Persistence diagram of a fitted embedding, or of a graph after fitting.
    Persistence {
        input: PathBuf,
    },
    /// Persistence landscape of a diagram CSV.
    Landscape {
        diagram: PathBuf,
    },
    /// Permutation test between groups of landscapes.
    Test {
        /// Directory of landscape CSVs, one per group.
        #[arg(long = "group", required = true, num_args = 1)]
        groups: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "k-sample")]
        method: TestMethod,
    },
    /// Cluster landscapes pooled from one or more directories.
    Cluster {
        /// Directory of landscape CSVs; several directories also give the
        /// reference labels for the Rand index.
        #[arg(long = "group", required = true, num_args = 1)]
        groups: Vec<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "k-medoids")]
        method: ClusterMethod,
    },
    /// Run a simulation experiment.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentKind,
    },
    /// Redraw the plots of an experiment directory.
    Plot {
        artifacts: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum Model {
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    Sbm {
        #[arg(long)]
        n: usize,
        /// Number of equally sized communities.
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.8)]
        p_high: f64,
        #[arg(long, default_value_t = 0.1)]
        p_low: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestMethod {
    TwoSample,
    KSample,
    Disco,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClusterMethod {
    KMedoids,
    KGroups,
    Spectral,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentKind {
    /// Pairwise Erdős–Rényi comparisons.
    Er {
        /// TOML file; missing keys take desk-scale defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Multi-sample stochastic block model scenarios.
    Sbm {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn out_file(g: &Global, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&g.out).map_err(io_err(&g.out))?;
    Ok(g.out.join(name))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &(serde_json::to_string_pretty(value).expect("serializable") + "\n"))
}

fn convention(g: &Global) -> Convention {
    g.convention.map(Into::into).unwrap_or_default()
}

fn order(g: &Global) -> usize {
    g.order.unwrap_or(0) as usize
}

fn load_landscapes(dir: &Path) -> Result<Vec<Landscape>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::config(format!("{}: no landscape CSV files", dir.display())));
    }
    files.iter().map(|f| Ok(Landscape::from_csv(&read(f)?)?)).collect()
}

fn load_groups(dirs: &[PathBuf]) -> Result<Vec<Sample>> {
    dirs.iter()
        .map(|d| Ok(Sample { label: d.display().to_string(), items: load_landscapes(d)? }))
        .collect()
}

#[derive(Serialize)]
struct ClusterReport {
    method: &'static str,
    k: usize,
    seed: u64,
    files: usize,
    rand_index: Option<f64>,
    partition: lsmtopo_core::Partition,
}

fn scenario_config(path: Option<&Path>, kind: ScenarioKind, g: &Global) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => {
            let cfg = ScenarioConfig::from_toml_str(&read(p)?)?;
            if cfg.kind != kind {
                return Err(CliError::config(format!("{}: kind does not match the subcommand", p.display())));
            }
            cfg
        }
        None => ScenarioConfig::desk(kind),
    };
    if let Some(s) = g.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = g.order {
        cfg.run.orders = vec![o as usize];
    }
    if let Some(c) = g.convention {
        cfg.run.convention = c.into();
    }
    if let Some(b) = g.permutations {
        cfg.tests.permutations = b;
    }
    if let Some(r) = g.rho {
        cfg.tests.rho = r;
    }
    if let Some(t) = g.tau {
        cfg.clustering.tau = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let seed = g.seed.unwrap_or(0);
    match cli.command {
        Command::Generate { model } => {
            let graph = match model {
                Model::Er { n, p } => gen_er(n, p, seed)?,
                Model::Sbm { n, k, p_high, p_low } => {
                    if k == 0 || k > n {
                        return Err(CliError::config("need 1 <= k <= n communities"));
                    }
                    let blocks = even_blocks(n, k);
                    let labels: String = block_labels(&blocks).iter().map(|b| format!("{b}\n")).collect();
                    write_file(&out_file(g, "blocks.txt")?, &labels)?;
                    gen_sbm(&blocks, p_high, p_low, seed)?
                }
            };
            write_file(&out_file(g, "graph.edges")?, &graph.to_edge_list())?;
        }
        Command::Fit { graph } => {
            let graph = Graph::from_edge_list(&read(&graph)?)?;
            let e = fit_lsm(&graph, &FitConfig { seed, ..FitConfig::default() })?;
            log::info!("log-likelihood {} after {} iterations", e.log_lik, e.iterations);
            write_file(&out_file(g, "embedding.csv")?, &e.to_csv())?;
            write_json(&out_file(g, "fit.json")?, &e)?;
        }
        Command::Persistence { input } => {
            let text = read(&input)?;
            let positions = if input.extension().is_some_and(|x| x == "csv") {
                Embedding::from_csv(&text)?.positions
            } else {
                let graph = Graph::from_edge_list(&text)?;
                let e = fit_lsm(&graph, &FitConfig { seed, ..FitConfig::default() })?;
                log::info!("fitted embedding, log-likelihood {}", log_likelihood(&graph, &e)?);
                e.positions
            };
            let f = vr_filtration(&positions, convention(g))?;
            let d = diagram(&f, order(g))?;
            write_file(&out_file(g, &format!("diagram_h{}.csv", d.order))?, &d.to_csv())?;
        }
        Command::Landscape { diagram } => {
            let d = PersistenceDiagram::from_csv(&read(&diagram)?)?;
            let l = network_landscape(&d);
            write_file(&out_file(g, &format!("landscape_h{}.csv", l.order))?, &l.to_csv())?;
            let title = format!("order {} landscape", l.order);
            write_file(&out_file(g, &format!("landscape_h{}.svg", l.order))?, &landscape_plot(&title, &l, 5))?;
        }
        Command::Test { groups, method } => {
            let samples = load_groups(&groups)?;
            let kind = match method {
                TestMethod::TwoSample => StatisticKind::TwoSample,
                TestMethod::KSample => StatisticKind::KSample,
                TestMethod::Disco => StatisticKind::Disco { rho: g.rho.unwrap_or(1.0) },
            };
            let report = test_samples(&samples, kind, g.permutations.unwrap_or(999), seed)?;
            println!("{} statistic {:.6} p-value {}", report.method, report.statistic, report.p_value);
            write_json(&out_file(g, "test.json")?, &report)?;
            write_file(&out_file(g, "replicates.csv")?, &report.replicates_csv())?;
        }
        Command::Cluster { groups, k, method } => {
            let samples = load_groups(&groups)?;
            let pooled: Vec<Landscape> = samples.iter().flat_map(|s| s.items.iter().cloned()).collect();
            let truth: Vec<usize> = samples.iter().enumerate().flat_map(|(i, s)| vec![i; s.items.len()]).collect();
            let cache = DistanceCache::from_landscapes(&pooled)?;
            let rho = g.rho.unwrap_or(1.0);
            let (name, partition) = match method {
                ClusterMethod::KMedoids => ("k_medoids", k_medoids(&cache, k, seed)?),
                ClusterMethod::KGroups => ("k_groups", k_groups(&cache, k, rho, KGroupsInit::Medoids, seed)?),
                ClusterMethod::Spectral => {
                    let tau = g.tau.unwrap_or(7).min(cache.len().saturating_sub(1)).max(1);
                    ("spectral", spectral_cluster(&build_affinity(&cache, tau)?, k, seed)?)
                }
            };
            let rand = if samples.len() > 1 { Some(rand_index(&partition.assignments, &truth)?) } else { None };
            if let Some(r) = rand {
                println!("{name} Rand index {r:.4}");
            }
            let report = ClusterReport { method: name, k, seed, files: pooled.len(), rand_index: rand, partition };
            write_json(&out_file(g, "cluster.json")?, &report)?;
        }
        Command::Experiment { kind } => {
            let (cfg, a) = match kind {
                ExperimentKind::Er { config } => {
                    let cfg = scenario_config(config.as_deref(), ScenarioKind::ErPairwise, g)?;
                    let a = run_er_pairwise(&cfg)?;
                    (cfg, a)
                }
                ExperimentKind::Sbm { config } => {
                    let cfg = scenario_config(config.as_deref(), ScenarioKind::SbmMultisample, g)?;
                    let a = run_sbm_scenarios(&cfg)?;
                    (cfg, a)
                }
            };
            let written = write_artifacts(&g.out, &cfg, &a)?;
            log::info!("wrote {} files to {}", written.len(), g.out.display());
        }
        Command::Plot { artifacts } => {
            let a = read_artifacts(&artifacts)?;
            let written = emit_plots(&a, &g.out.join("plots"))?;
            log::info!("wrote {} plots", written.len());
        }
    }
    Ok(())
}

/// Parses arguments, configures logging and the worker pool, runs the
/// command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return 2;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("worker pool already configured: {e}");
        }
    }
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
