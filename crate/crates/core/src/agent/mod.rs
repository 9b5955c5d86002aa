//! The learning MAC: carrier-sense ε-greedy acting, abbreviated experience
//! replay and the variable-duration multi-node Q-learning update.
//!
//! One [`Agent`] drives either a single node or, through [`Gateway`], a
//! network of nodes that share its decisions. Reward index 0 always belongs
//! to the learning node or network.

mod gateway;
pub mod loss;
mod policy;
mod replay;
mod state;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use gateway::Gateway;
pub use loss::{compute_loss, loss_gradient, td_target, uniform_step_loss, LossConfig, LossEval, Minibatch};
pub use policy::{select_action, update_epsilon};
pub use replay::{duration_of, AbbreviatedExperience, ReplayBuffer, Sample};
pub use state::{encode_window, encoding_width, AgentState, ChannelState};

use crate::error::{Error, Result};
use crate::fairness::{Alpha, QValues, ScoreMode};
use crate::netsim::Observation;
use crate::neuralnet::checkpoint::{self, Metadata};
use crate::neuralnet::{Architecture, NetworkShape, QNetwork, RmsProp, RmsPropConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Channel states per agent state (`M`).
    pub history_len: usize,
    pub epsilon_init: f64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub gamma: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Decision epochs between target-network copies.
    pub target_sync_every: u64,
    /// Longest packet the learner may send (`R_Cmax`).
    pub max_action: usize,
    pub architecture: Architecture,
    pub hidden: usize,
    pub optimizer: RmsPropConfig,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            history_len: 20,
            epsilon_init: 1.0,
            epsilon_decay: 0.995,
            epsilon_floor: 0.005,
            gamma: 0.999,
            buffer_capacity: 1000,
            batch_size: 32,
            target_sync_every: 20,
            max_action: 10,
            architecture: Architecture::Recurrent,
            hidden: 64,
            optimizer: RmsPropConfig::default(),
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("epsilon_init", self.epsilon_init)?;
        unit("epsilon_decay", self.epsilon_decay)?;
        unit("epsilon_floor", self.epsilon_floor)?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        let positive = [
            ("history_len", self.history_len),
            ("batch_size", self.batch_size),
            ("target_sync_every", self.target_sync_every as usize),
            ("max_action", self.max_action),
            ("hidden", self.hidden),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.buffer_capacity <= self.history_len {
            return Err(Error::Config(format!(
                "buffer_capacity {} cannot hold a window of {} plus a successor",
                self.buffer_capacity, self.history_len
            )));
        }
        let o = &self.optimizer;
        if !(o.learning_rate > 0.0 && o.learning_rate.is_finite()) || !(0.0..1.0).contains(&o.decay) || o.epsilon.is_nan() || o.epsilon <= 0.0 {
            return Err(Error::Config(format!("invalid optimizer settings {o:?}")));
        }
        Ok(())
    }

    fn network_shape(&self, nodes: usize) -> NetworkShape {
        NetworkShape {
            architecture: self.architecture,
            input_width: encoding_width(self.max_action),
            history_len: self.history_len,
            hidden: self.hidden,
            outputs: nodes * (self.max_action + 1),
        }
    }
}

/// What one call to [`Agent::observe`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Minibatch loss, when an update ran.
    pub loss: Option<f64>,
    /// Whether the target network was refreshed.
    pub synced: bool,
}

/// RNG streams of one agent, all derived from the run seed.
const INIT_STREAM: u64 = 1;
const EXPLORE_STREAM: u64 = 2;
const REPLAY_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone)]
pub struct Agent {
    hyper: Hyperparams,
    alpha: Alpha,
    mode: ScoreMode,
    nodes: usize,
    online: QNetwork,
    target: QNetwork,
    optimizer: RmsProp,
    buffer: ReplayBuffer,
    state: AgentState,
    epsilon: f64,
    steps: u64,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
}

impl Agent {
    /// A fresh learner facing `other_nodes` coexisting nodes.
    pub fn new(hyper: Hyperparams, alpha: Alpha, mode: ScoreMode, other_nodes: usize, seed: u64) -> Result<Self> {
        hyper.validate()?;
        if let ScoreMode::Multi { agents: 0 } = mode {
            return Err(Error::Config("a learning network needs at least one node".into()));
        }
        let nodes = other_nodes + 1;
        let online = QNetwork::init(hyper.network_shape(nodes), &mut stream(seed, INIT_STREAM))?;
        Ok(Agent {
            target: online.clone(),
            online,
            optimizer: RmsProp::new(hyper.optimizer),
            buffer: ReplayBuffer::new(hyper.buffer_capacity)?,
            state: AgentState::new(hyper.history_len, hyper.max_action),
            epsilon: hyper.epsilon_init,
            steps: 0,
            explore_rng: stream(seed, EXPLORE_STREAM),
            replay_rng: stream(seed, REPLAY_STREAM),
            hyper,
            alpha,
            mode,
            nodes,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn mode(&self) -> ScoreMode {
        self.mode
    }

    /// Reward components per decision: the learner plus each coexisting node.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Decision epochs observed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn online(&self) -> &QNetwork {
        &self.online
    }

    pub fn online_mut(&mut self) -> &mut QNetwork {
        &mut self.online
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn target_mut(&mut self) -> &mut QNetwork {
        &mut self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn state(&self) -> &AgentState {
        &self.state
    }

    /// Target-network Q-values of the current state.
    pub fn q_values(&self) -> Result<QValues> {
        self.target.q_values(&self.state.encode(), self.nodes)
    }

    fn loss_config(&self) -> LossConfig {
        LossConfig {
            gamma: self.hyper.gamma,
            alpha: self.alpha,
            mode: self.mode,
        }
    }

    /// Chooses the next action.
    pub fn act(&mut self) -> Result<usize> {
        let Agent {
            target,
            state,
            explore_rng,
            nodes,
            ..
        } = self;
        select_action(
            state.last_observation(),
            || target.q_values(&state.encode(), *nodes),
            self.epsilon,
            self.alpha,
            self.mode,
            self.hyper.max_action,
            explore_rng,
        )
    }

    /// Records the outcome of `action`, trains on one minibatch once the
    /// buffer admits a full window, refreshes the target network every
    /// `target_sync_every` epochs and decays ε.
    pub fn observe(&mut self, action: usize, observation: Observation, rewards: &[f64]) -> Result<StepReport> {
        if action > self.hyper.max_action {
            return Err(Error::ActionOutOfRange {
                action,
                max: self.hyper.max_action,
            });
        }
        if rewards.len() != self.nodes {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rewards", self.nodes),
                got: rewards.len().to_string(),
            });
        }
        let next = ChannelState::new(action, observation)?;
        self.buffer.record(AbbreviatedExperience {
            current: self.state.latest(),
            action,
            duration: duration_of(action),
            rewards: rewards.to_vec(),
            next,
            step: self.steps,
        })?;
        self.state.push(next);
        self.steps += 1;

        let mut loss = None;
        if self.buffer.len() > self.hyper.history_len {
            let samples = self
                .buffer
                .sample_continuous(self.hyper.batch_size, self.hyper.history_len, &mut self.replay_rng)?;
            let batch = Minibatch::from_samples(&samples, self.hyper.max_action, self.nodes)?;
            let (eval, grads) = loss_gradient(&batch, &self.online, &self.target, &self.loss_config())?;
            self.optimizer.update(self.online.parameters_mut(), &grads)?;
            loss = Some(eval.loss);
        }
        let synced = self.steps.is_multiple_of(self.hyper.target_sync_every);
        if synced {
            self.target.sync_from(&self.online)?;
        }
        self.epsilon = update_epsilon(self.epsilon, self.hyper.epsilon_decay, self.hyper.epsilon_floor);
        Ok(StepReport { loss, synced })
    }

    /// Saves the online parameters with the settings needed to resume acting.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut meta = Metadata::new();
        meta.insert("hyperparams".into(), to_json(&self.hyper)?);
        meta.insert("alpha".into(), self.alpha.value().to_string());
        meta.insert("mode".into(), to_json(&self.mode)?);
        meta.insert("nodes".into(), self.nodes.to_string());
        meta.insert("epsilon".into(), self.epsilon.to_string());
        meta.insert("steps".into(), self.steps.to_string());
        checkpoint::save(path, &self.online, &meta)
    }

    /// Restores an agent saved by [`Agent::save`]. The replay buffer and
    /// optimizer state start empty; both networks hold the saved parameters.
    pub fn load(path: &Path, seed: u64) -> Result<Self> {
        let (net, meta) = checkpoint::load(path)?;
        let get = |k: &str| {
            meta.get(k)
                .ok_or_else(|| Error::Checkpoint(format!("missing meta {k}")))
        };
        let parse_err = |k: &str| Error::Checkpoint(format!("bad meta {k}"));
        let hyper: Hyperparams = serde_json::from_str(get("hyperparams")?).map_err(|_| parse_err("hyperparams"))?;
        let mode: ScoreMode = serde_json::from_str(get("mode")?).map_err(|_| parse_err("mode"))?;
        let alpha = Alpha::new(get("alpha")?.parse().map_err(|_| parse_err("alpha"))?)?;
        let nodes: usize = get("nodes")?.parse().map_err(|_| parse_err("nodes"))?;
        if nodes == 0 || net.shape() != &hyper.network_shape(nodes) {
            return Err(Error::Checkpoint("network shape disagrees with hyperparameters".into()));
        }
        let mut agent = Agent::new(hyper, alpha, mode, nodes - 1, seed)?;
        agent.epsilon = get("epsilon")?.parse().map_err(|_| parse_err("epsilon"))?;
        agent.steps = get("steps")?.parse().map_err(|_| parse_err("steps"))?;
        agent.online = net;
        agent.target.sync_from(&agent.online)?;
        Ok(agent)
    }
}

fn to_json(v: &impl Serialize) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Checkpoint(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{AlohaConfig, MacConfig, Simulator};

    fn small() -> Hyperparams {
        Hyperparams {
            history_len: 4,
            buffer_capacity: 50,
            batch_size: 4,
            hidden: 8,
            max_action: 3,
            ..Hyperparams::default()
        }
    }

    fn drive(agent: &mut Agent, sim: &mut Simulator, steps: usize) -> Vec<(usize, StepReport)> {
        (0..steps)
            .map(|_| {
                let a = agent.act().unwrap();
                let e = sim.step_agent(a);
                (a, agent.observe(a, e.observation, &e.rewards).unwrap())
            })
            .collect()
    }

    fn aloha() -> Vec<MacConfig> {
        vec![MacConfig::Aloha(AlohaConfig { q: 0.3, slot_len: 3 })]
    }

    #[test]
    fn no_update_before_full_window() {
        let mut agent = Agent::new(small(), Alpha::SUM_THROUGHPUT, ScoreMode::Single, 1, 3).unwrap();
        let mut sim = Simulator::new(&aloha(), 0.5, 3).unwrap();
        let before = agent.online().clone();
        let log = drive(&mut agent, &mut sim, 4);
        assert!(log.iter().all(|(_, r)| r.loss.is_none()));
        assert_eq!(agent.online(), &before);
        let log = drive(&mut agent, &mut sim, 1);
        assert!(log[0].1.loss.is_some());
        assert_ne!(agent.online(), &before);
    }

    #[test]
    fn target_changes_only_on_sync_epochs() {
        let mut agent = Agent::new(small(), Alpha::PROPORTIONAL, ScoreMode::Single, 1, 4).unwrap();
        let mut sim = Simulator::new(&aloha(), 0.5, 4).unwrap();
        for _ in 0..70 {
            let before = agent.target().clone();
            let a = agent.act().unwrap();
            let e = sim.step_agent(a);
            let r = agent.observe(a, e.observation, &e.rewards).unwrap();
            assert_eq!(r.synced, agent.steps().is_multiple_of(20));
            if !r.synced {
                assert_eq!(agent.target(), &before);
            } else {
                assert_eq!(agent.target(), agent.online());
            }
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let run = || {
            let mut agent = Agent::new(small(), Alpha::new(2.0).unwrap(), ScoreMode::Single, 1, 9).unwrap();
            let mut sim = Simulator::new(&aloha(), 0.5, 9).unwrap();
            let log = drive(&mut agent, &mut sim, 120);
            (log, agent.online().parameters().to_vec())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn never_transmits_after_non_idle() {
        let mut agent = Agent::new(small(), Alpha::SUM_THROUGHPUT, ScoreMode::Single, 1, 5).unwrap();
        let mut sim = Simulator::new(&aloha(), 0.5, 5).unwrap();
        for _ in 0..300 {
            let last = agent.state().last_observation();
            let a = agent.act().unwrap();
            if last != Observation::Idle {
                assert_eq!(a, 0);
            }
            let e = sim.step_agent(a);
            agent.observe(a, e.observation, &e.rewards).unwrap();
        }
    }

    #[test]
    fn durations_account_for_elapsed_minislots() {
        let mut agent = Agent::new(small(), Alpha::SUM_THROUGHPUT, ScoreMode::Single, 1, 6).unwrap();
        let mut sim = Simulator::new(&aloha(), 0.5, 6).unwrap();
        let log = drive(&mut agent, &mut sim, 200);
        let total: usize = log.iter().map(|(a, _)| duration_of(*a)).sum();
        assert_eq!(total as u64, sim.now());
    }

    #[test]
    fn pure_exploration_ignores_parameters() {
        let hyper = Hyperparams {
            epsilon_decay: 1.0,
            epsilon_floor: 1.0,
            ..small()
        };
        let trace = |perturb: bool| {
            let mut agent = Agent::new(hyper.clone(), Alpha::SUM_THROUGHPUT, ScoreMode::Single, 1, 8).unwrap();
            if perturb {
                agent.target_mut().parameters_mut().iter_mut().for_each(|p| *p += 0.3);
            }
            let mut sim = Simulator::new(&aloha(), 0.5, 8).unwrap();
            drive(&mut agent, &mut sim, 100).into_iter().map(|(a, _)| a).collect::<Vec<_>>()
        };
        assert_eq!(trace(false), trace(true));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        let mut agent = Agent::new(small(), Alpha::new(50.0).unwrap(), ScoreMode::Multi { agents: 2 }, 1, 2).unwrap();
        let mut sim = Simulator::new(&aloha(), 0.5, 2).unwrap();
        drive(&mut agent, &mut sim, 30);
        agent.save(&path).unwrap();
        let back = Agent::load(&path, 2).unwrap();
        assert_eq!(back.online(), agent.online());
        assert_eq!(back.target(), agent.online());
        assert_eq!(back.hyperparams(), agent.hyperparams());
        assert_eq!(back.mode(), agent.mode());
        assert_eq!(back.alpha(), agent.alpha());
        assert_eq!(back.epsilon(), agent.epsilon());
        assert_eq!(back.steps(), agent.steps());
    }

    #[test]
    fn rejects_bad_hyperparams() {
        let bad = [
            Hyperparams { gamma: 0.0, ..small() },
            Hyperparams { epsilon_floor: 1.5, ..small() },
            Hyperparams { buffer_capacity: 4, ..small() },
            Hyperparams { batch_size: 0, ..small() },
        ];
        for h in bad {
            assert!(h.validate().is_err(), "{h:?}");
        }
    }
}
