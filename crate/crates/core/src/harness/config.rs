use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::Hyperparams;
use crate::error::{Error, Result};
use crate::fairness::{Alpha, ScoreMode};
use crate::netsim::{MacConfig, MAX_NODES};
use crate::oracle::BenchmarkScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One learning node.
    Single,
    /// A gateway-driven network of `agents ≥ 2` learning nodes.
    Multi,
}

/// One experiment: the learning network, its coexisting nodes and the run plan.
///
/// ```toml
/// alpha = 1.0
/// steps = 50000
/// seeds = [1, 2, 3]
///
/// [[node]]
/// kind = "tdma"
/// frame_len = 5
/// occupied_slots = [2, 5]
/// slot_len = 10
///
/// [[node]]
/// kind = "aloha"
/// q = 0.5
/// slot_len = 10
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub alpha: Alpha,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Member nodes of the learning network.
    #[serde(default = "default_agents")]
    pub agents: usize,
    /// Packet header in minislots.
    #[serde(default = "default_header")]
    pub header: f64,
    /// Decision epochs per run.
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Decision epochs between cumulative-throughput snapshots.
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    #[serde(default, rename = "node")]
    pub nodes: Vec<MacConfig>,
    #[serde(default)]
    pub hyperparams: Hyperparams,
}

fn default_mode() -> Mode {
    Mode::Single
}

fn default_agents() -> usize {
    1
}

fn default_header() -> f64 {
    0.5
}

fn default_steps() -> u64 {
    50_000
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_log_every() -> u64 {
    1000
}

impl ScenarioConfig {
    /// A single learner with default settings facing `nodes`.
    pub fn new(alpha: Alpha, nodes: Vec<MacConfig>) -> Self {
        ScenarioConfig {
            alpha,
            mode: Mode::Single,
            agents: 1,
            header: default_header(),
            steps: default_steps(),
            seeds: default_seeds(),
            log_every: default_log_every(),
            nodes,
            hyperparams: Hyperparams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.agents) {
            (Mode::Single, 1) => {}
            (Mode::Multi, a) if a >= 2 => {}
            (m, a) => {
                return Err(Error::Config(format!("mode {m:?} does not admit {a} learning nodes")));
            }
        }
        if !(self.header > 0.0 && self.header < 1.0) {
            return Err(Error::Config(format!("header must lie in (0, 1), got {}", self.header)));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be positive".into()));
        }
        if self.nodes.len() > MAX_NODES {
            return Err(Error::Config(format!("at most {MAX_NODES} coexisting nodes")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Config(format!("seed {s} listed twice")));
        }
        for n in &self.nodes {
            n.validate()?;
        }
        self.hyperparams.validate()
    }

    pub fn score_mode(&self) -> ScoreMode {
        match self.mode {
            Mode::Single => ScoreMode::Single,
            Mode::Multi => ScoreMode::Multi { agents: self.agents },
        }
    }

    /// The model-aware benchmark scenario, when the coexisting nodes are
    /// exactly one TDMA and one ALOHA node with equal slots facing a single learner.
    pub fn benchmark_scenario(&self) -> Option<BenchmarkScenario> {
        if self.mode != Mode::Single {
            return None;
        }
        let [MacConfig::Tdma(tdma), MacConfig::Aloha(aloha)] = self.nodes.as_slice() else {
            return None;
        };
        let s = BenchmarkScenario {
            tdma: tdma.clone(),
            aloha: aloha.clone(),
            header: self.header,
        };
        s.validate().ok().map(|_| s)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}
