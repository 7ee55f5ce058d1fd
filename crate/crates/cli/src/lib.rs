//! Command line front end and simulation harness: runs the per-network
//! pipeline, the Erdős–Rényi and block model experiments, and writes their
//! tables, artifacts and plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod pipeline;
pub mod plot;

pub use config::{ScenarioConfig, ScenarioKind};
pub use error::{CliError, Result};
pub use experiment::{run_er_pairwise, run_sbm_scenarios, RunArtifacts};
pub use pipeline::pipeline;
