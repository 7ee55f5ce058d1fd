//! Experiment configuration, read from TOML and merged over desk-scale
//! defaults for the chosen experiment kind.

use lsmtopo_core::persistence::Convention;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const ER_PROBABILITIES: [f64; 7] = [0.01, 0.025, 0.05, 0.1, 0.15, 0.2, 0.25];
pub const SBM_SCENARIOS: [[usize; 3]; 5] = [[2, 3, 4], [2, 3, 5], [2, 4, 5], [3, 4, 5], [2, 5, 10]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ErPairwise,
    SbmMultisample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub reps: usize,
    /// Networks per group; every value is run.
    pub m: Vec<usize>,
    pub orders: Vec<usize>,
    pub convention: Convention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    /// Inclusive range of network sizes, drawn uniformly per network.
    pub n_min: usize,
    pub n_max: usize,
    pub probabilities: Vec<f64>,
    /// Also run the `p_i = p_j` cells.
    pub null_cells: bool,
    pub scenarios: Vec<Vec<usize>>,
    pub p_high: f64,
    pub p_low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSection {
    pub permutations: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub enabled: bool,
    pub tau: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub run: RunSection,
    pub graphs: GraphSection,
    pub tests: TestSection,
    pub clustering: ClusterSection,
}

impl ScenarioConfig {
    pub fn desk(kind: ScenarioKind) -> Self {
        ScenarioConfig {
            kind,
            run: RunSection {
                seed: 0,
                reps: 20,
                m: vec![5, 10, 25],
                orders: vec![0, 1],
                convention: Convention::Radius,
            },
            graphs: GraphSection {
                n_min: 80,
                n_max: 120,
                probabilities: ER_PROBABILITIES.to_vec(),
                null_cells: false,
                scenarios: SBM_SCENARIOS.iter().map(|s| s.to_vec()).collect(),
                p_high: 0.8,
                p_low: 0.1,
            },
            tests: TestSection { permutations: 999, rho: 1.0 },
            clustering: ClusterSection { enabled: true, tau: 7 },
        }
    }

    /// Parses a TOML document; keys it leaves out take the desk defaults of
    /// its `kind`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        let kind: ScenarioKind = user
            .get("kind")
            .ok_or_else(|| CliError::config("missing `kind`"))?
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        let mut merged = toml::Table::try_from(ScenarioConfig::desk(kind)).expect("defaults serialize");
        merge(&mut merged, user);
        let cfg: ScenarioConfig =
            toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let (r, g) = (&self.run, &self.graphs);
        if r.reps == 0 || r.m.is_empty() || r.m.contains(&0) {
            return bad("reps and every m must be positive".into());
        }
        if r.orders.is_empty() || r.orders.iter().any(|&o| o > 1) {
            return bad(format!("orders must be a non-empty subset of {{0, 1}}, got {:?}", r.orders));
        }
        if g.n_min < 3 || g.n_min > g.n_max {
            return bad(format!("network sizes need 3 <= n_min <= n_max, got {}..={}", g.n_min, g.n_max));
        }
        for &p in g.probabilities.iter().chain([&g.p_high, &g.p_low]) {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {p} outside [0, 1]"));
            }
        }
        match self.kind {
            ScenarioKind::ErPairwise => {
                let cells = g.probabilities.len() * g.probabilities.len().saturating_sub(1) / 2;
                if cells == 0 && !(g.null_cells && !g.probabilities.is_empty()) {
                    return bad("ER experiments need at least two probabilities".into());
                }
            }
            ScenarioKind::SbmMultisample => {
                if g.scenarios.is_empty() {
                    return bad("SBM experiments need at least one scenario".into());
                }
                for s in &g.scenarios {
                    if s.len() < 2 || s.iter().any(|&k| k == 0 || k > g.n_min) {
                        return bad(format!("scenario {s:?} needs at least two community counts in 1..=n_min"));
                    }
                    let distinct: std::collections::BTreeSet<_> = s.iter().collect();
                    if distinct.len() != s.len() {
                        return bad(format!("scenario {s:?} repeats a community count"));
                    }
                }
            }
        }
        if self.tests.permutations == 0 {
            return bad("permutations must be positive".into());
        }
        if !(self.tests.rho > 0.0 && self.tests.rho <= 2.0) {
            return bad(format!("rho = {} outside (0, 2]", self.tests.rho));
        }
        if self.clustering.tau == 0 {
            return bad("tau must be positive".into());
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg = ScenarioConfig::from_toml_str(
            "kind = \"sbm_multisample\"\n[run]\nreps = 3\nm = [4]\n[tests]\npermutations = 19\n",
        )
        .unwrap();
        assert_eq!(cfg.run.reps, 3);
        assert_eq!(cfg.tests.permutations, 19);
        assert_eq!(cfg.graphs.p_high, 0.8);
        assert_eq!(cfg.clustering.tau, 7);
        assert_eq!(ScenarioConfig::from_toml_str(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[run]\nreps = 1",
            "kind = \"er_pairwise\"\n[graphs]\nprobabilities = [0.1, 1.5]",
            "kind = \"er_pairwise\"\n[run]\norders = [2]",
            "kind = \"er_pairwise\"\n[tests]\nrho = 3.0",
            "kind = \"sbm_multisample\"\n[graphs]\nscenarios = [[2]]",
            "kind = \"er_pairwise\"\n[run]\nunknown = 1",
            "kind = \"er_pairwise\"\n[graphs]\nn_min = 200",
            "kind = \"sbm_multisample\"\n[graphs]\nscenarios = [[2, 2, 3]]",
        ] {
            assert!(ScenarioConfig::from_toml_str(text).is_err(), "{text}");
        }
    }
}
