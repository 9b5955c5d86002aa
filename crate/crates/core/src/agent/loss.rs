//! Variable-duration multi-node temporal-difference loss.
//!
//! For a sample with action `a`, duration `d` and reward vector `r`, node `i`
//! regresses `Q_i(s, a; θ)` onto
//! `(r_i/d)·(1 + γ + … + γ^{d-1}) + γ^d·Q_i(s', a'; θ⁻)`, where `a'` maximizes
//! the fairness score of the target network at `s'` over the actions feasible
//! after the observation ending `s'`. The loss averages the squared errors
//! over samples and nodes.

use serde::{Deserialize, Serialize};

use crate::agent::replay::Sample;
use crate::agent::state::{encode_window, encoding_width};
use crate::error::{Error, Result};
use crate::fairness::{best_action, Alpha, QValues, ScoreMode};
use crate::netsim::Observation;
use crate::neuralnet::{QNetwork, StateBatch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub gamma: f64,
    pub alpha: Alpha,
    pub mode: ScoreMode,
}

/// Amortized reward of a `d`-minislot epoch plus the discounted bootstrap.
pub fn td_target(reward: f64, duration: usize, gamma: f64, q_next: f64) -> f64 {
    let mut discount = 1.0;
    let mut ramp = 0.0;
    for _ in 0..duration {
        ramp += discount;
        discount *= gamma;
    }
    reward / duration as f64 * ramp + discount * q_next
}

/// Encoded samples ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub states: StateBatch,
    pub next_states: StateBatch,
    pub actions: Vec<usize>,
    pub durations: Vec<usize>,
    /// `samples × nodes`, row-major.
    pub rewards: Vec<f64>,
    /// Whether the bootstrap action may transmit (the observation ending `s'` is IDLE).
    pub next_may_transmit: Vec<bool>,
    pub nodes: usize,
}

impl Minibatch {
    pub fn from_samples(samples: &[Sample], max_action: usize, nodes: usize) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::Empty("minibatch"));
        };
        let m = first.state.len();
        let step = m * encoding_width(max_action);
        let b = samples.len();
        let mut states = vec![0.0; b * step];
        let mut next_states = vec![0.0; b * step];
        let mut rewards = Vec::with_capacity(b * nodes);
        for (k, s) in samples.iter().enumerate() {
            if s.state.len() != m || s.next_state.len() != m {
                return Err(Error::ShapeMismatch {
                    expected: format!("windows of {m}"),
                    got: format!("{} and {}", s.state.len(), s.next_state.len()),
                });
            }
            if s.rewards.len() != nodes {
                return Err(Error::ShapeMismatch {
                    expected: format!("{nodes} rewards"),
                    got: s.rewards.len().to_string(),
                });
            }
            if s.action > max_action {
                return Err(Error::ActionOutOfRange {
                    action: s.action,
                    max: max_action,
                });
            }
            encode_window(&s.state, max_action, &mut states[k * step..(k + 1) * step]);
            encode_window(&s.next_state, max_action, &mut next_states[k * step..(k + 1) * step]);
            rewards.extend_from_slice(&s.rewards);
        }
        Ok(Minibatch {
            states: StateBatch { samples: b, data: states },
            next_states: StateBatch {
                samples: b,
                data: next_states,
            },
            actions: samples.iter().map(|s| s.action).collect(),
            durations: samples.iter().map(|s| s.duration).collect(),
            rewards,
            next_may_transmit: samples
                .iter()
                .map(|s| s.next_channel_state().observation() == Observation::Idle)
                .collect(),
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Loss value with the regression targets and predictions, both `samples × nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub loss: f64,
    pub targets: Vec<f64>,
    pub predictions: Vec<f64>,
}

fn check(batch: &Minibatch, net: &QNetwork) -> Result<usize> {
    if batch.is_empty() {
        return Err(Error::Empty("minibatch"));
    }
    let outputs = net.shape().outputs;
    if batch.nodes == 0 || !outputs.is_multiple_of(batch.nodes) {
        return Err(Error::ShapeMismatch {
            expected: format!("outputs divisible by {} nodes", batch.nodes),
            got: outputs.to_string(),
        });
    }
    Ok(outputs / batch.nodes)
}

/// Bootstrap action per sample from the target network's outputs at `s'`.
fn bootstrap_actions(batch: &Minibatch, next_q: &[f64], actions: usize, cfg: &LossConfig) -> Result<Vec<usize>> {
    let width = batch.nodes * actions;
    next_q
        .chunks_exact(width)
        .zip(&batch.next_may_transmit)
        .map(|(row, &may)| {
            let q = QValues::from_vec(batch.nodes, actions, row.to_vec())?;
            Ok(best_action(&q, cfg.alpha, cfg.mode, may))
        })
        .collect()
}

/// Regression targets, `samples × nodes`.
pub fn bootstrap_targets(batch: &Minibatch, target: &QNetwork, cfg: &LossConfig) -> Result<Vec<f64>> {
    let actions = check(batch, target)?;
    let next_q = target.forward(&batch.next_states)?;
    let next_actions = bootstrap_actions(batch, &next_q, actions, cfg)?;
    let width = batch.nodes * actions;
    let mut out = Vec::with_capacity(batch.len() * batch.nodes);
    for k in 0..batch.len() {
        for i in 0..batch.nodes {
            let q_next = next_q[k * width + i * actions + next_actions[k]];
            out.push(td_target(
                batch.rewards[k * batch.nodes + i],
                batch.durations[k],
                cfg.gamma,
                q_next,
            ));
        }
    }
    Ok(out)
}

fn evaluate(batch: &Minibatch, outputs: &[f64], actions: usize, targets: Vec<f64>) -> LossEval {
    let width = batch.nodes * actions;
    let mut predictions = Vec::with_capacity(targets.len());
    for k in 0..batch.len() {
        for i in 0..batch.nodes {
            predictions.push(outputs[k * width + i * actions + batch.actions[k]]);
        }
    }
    let loss = targets
        .iter()
        .zip(&predictions)
        .map(|(y, p)| (y - p) * (y - p))
        .sum::<f64>()
        / targets.len() as f64;
    LossEval {
        loss,
        targets,
        predictions,
    }
}

/// Loss of `online` against targets bootstrapped from `target`.
pub fn compute_loss(batch: &Minibatch, online: &QNetwork, target: &QNetwork, cfg: &LossConfig) -> Result<LossEval> {
    let actions = check(batch, online)?;
    let targets = bootstrap_targets(batch, target, cfg)?;
    let outputs = online.forward(&batch.states)?;
    Ok(evaluate(batch, &outputs, actions, targets))
}

/// Loss and its gradient with respect to the online parameters.
pub fn loss_gradient(
    batch: &Minibatch,
    online: &QNetwork,
    target: &QNetwork,
    cfg: &LossConfig,
) -> Result<(LossEval, Vec<f64>)> {
    let actions = check(batch, online)?;
    let targets = bootstrap_targets(batch, target, cfg)?;
    let cache = online.forward_train(&batch.states)?;
    let eval = evaluate(batch, cache.outputs(), actions, targets);
    let width = batch.nodes * actions;
    let scale = -2.0 / eval.targets.len() as f64;
    let mut d_out = vec![0.0; cache.outputs().len()];
    for k in 0..batch.len() {
        for i in 0..batch.nodes {
            let j = k * batch.nodes + i;
            d_out[k * width + i * actions + batch.actions[k]] = scale * (eval.targets[j] - eval.predictions[j]);
        }
    }
    let grads = online.backward(&cache, &d_out)?;
    Ok((eval, grads))
}

/// Uniform-step loss: every epoch lasts one step, the target is
/// `r_i + γ·Q_i(s', a'; θ⁻)` with the same bootstrap action rule.
pub fn uniform_step_loss(batch: &Minibatch, online: &QNetwork, target: &QNetwork, cfg: &LossConfig) -> Result<f64> {
    let actions = check(batch, online)?;
    if let Some(d) = batch.durations.iter().find(|d| **d != 1) {
        return Err(Error::InvalidArgument(format!("uniform-step loss needs unit durations, got {d}")));
    }
    let width = batch.nodes * actions;
    let next_q = target.forward(&batch.next_states)?;
    let q = online.forward(&batch.states)?;
    let next_actions = bootstrap_actions(batch, &next_q, actions, cfg)?;
    let mut total = 0.0;
    for k in 0..batch.len() {
        let row = k * width;
        for i in 0..batch.nodes {
            let y = batch.rewards[k * batch.nodes + i] + cfg.gamma * next_q[row + i * actions + next_actions[k]];
            let e = y - q[row + i * actions + batch.actions[k]];
            total += e * e;
        }
    }
    Ok(total / (batch.len() * batch.nodes) as f64)
}
