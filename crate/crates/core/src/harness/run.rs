use serde::{Deserialize, Serialize};

use crate::agent::{Agent, Gateway};
use crate::error::{Error, Result};
use crate::harness::config::ScenarioConfig;
use crate::netsim::Simulator;

/// One decision epoch of the learning network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    /// 1-based decision epoch.
    pub step: u64,
    /// Minislots elapsed at the end of the epoch.
    pub minislots: u64,
    pub action: usize,
    pub duration: usize,
    /// Index 0 = learning network, then the coexisting nodes in configuration order.
    pub rewards: Vec<f64>,
    /// Member of the learning network that transmitted, if any.
    pub member: Option<usize>,
    /// Exploration rate in force when the action was chosen.
    pub epsilon: f64,
}

/// Cumulative throughputs since the start of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub minislots: u64,
    pub epsilon: f64,
    pub throughputs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub seed: u64,
    pub steps: Vec<StepLog>,
    pub snapshots: Vec<Snapshot>,
    /// Payload delivered by each member of the learning network.
    pub member_rewards: Vec<f64>,
}

impl RunRecord {
    /// Reward components per step.
    pub fn nodes(&self) -> Option<usize> {
        self.steps.first().map(|s| s.rewards.len())
    }

    /// `Σ r / Σ d` per node over the last `window` steps (all steps if fewer).
    pub fn tail_throughputs(&self, window: usize) -> Option<Vec<f64>> {
        let nodes = self.nodes()?;
        let tail = &self.steps[self.steps.len().saturating_sub(window)..];
        let minislots: usize = tail.iter().map(|s| s.duration).sum();
        let mut sums = vec![0.0; nodes];
        for s in tail {
            for (acc, r) in sums.iter_mut().zip(&s.rewards) {
                *acc += r;
            }
        }
        Some(sums.into_iter().map(|r| r / minislots as f64).collect())
    }
}

/// Runs one seed to completion. `on_step` sees every epoch as it happens.
pub fn run_seed(
    config: &ScenarioConfig,
    run_id: usize,
    seed: u64,
    mut on_step: impl FnMut(&StepLog),
) -> Result<RunRecord> {
    let mut sim = Simulator::new(&config.nodes, config.header, seed)?;
    let mut agent = Agent::new(
        config.hyperparams.clone(),
        config.alpha,
        config.score_mode(),
        config.nodes.len(),
        seed,
    )?;
    let mut gateway = Gateway::new(config.agents);
    let nodes = config.nodes.len() + 1;
    let mut record = RunRecord {
        run_id,
        seed,
        steps: Vec::with_capacity(config.steps as usize),
        snapshots: Vec::new(),
        member_rewards: vec![0.0; config.agents],
    };
    let mut cumulative = vec![0.0; nodes];
    let mut elapsed = 0u64;
    for step in 1..=config.steps {
        let epsilon = agent.epsilon();
        let action = agent.act()?;
        let member = gateway.dispatch(action);
        let epoch = sim.step_agent(action);
        agent.observe(action, epoch.observation, &epoch.rewards)?;
        if let Some(m) = member {
            record.member_rewards[m - 1] += epoch.rewards[0];
        }
        elapsed += epoch.duration as u64;
        for (c, r) in cumulative.iter_mut().zip(&epoch.rewards) {
            *c += r;
        }
        let log = StepLog {
            step,
            minislots: elapsed,
            action,
            duration: epoch.duration,
            rewards: epoch.rewards,
            member,
            epsilon,
        };
        on_step(&log);
        record.steps.push(log);
        if step % config.log_every == 0 || step == config.steps {
            record.snapshots.push(Snapshot {
                step,
                minislots: elapsed,
                epsilon: agent.epsilon(),
                throughputs: cumulative.iter().map(|r| r / elapsed as f64).collect(),
            });
        }
    }
    Ok(record)
}

/// Runs every seed of `config`, in parallel when cores allow. Records come
/// back in seed order regardless of scheduling.
pub fn run_experiment(config: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(config.seeds.len().max(1));
    if workers <= 1 {
        return config
            .seeds
            .iter()
            .enumerate()
            .map(|(id, &seed)| run_seed(config, id, seed, |_| {}))
            .collect();
    }
    let jobs: Vec<(usize, u64)> = config.seeds.iter().copied().enumerate().collect();
    let mut slots: Vec<Option<Result<RunRecord>>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = jobs.chunks(jobs.len().div_ceil(workers)).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|&(id, seed)| (id, run_seed(config, id, seed, |_| {})))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (id, r) in h.join().expect("run thread panicked") {
                slots[id] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every seed ran")).collect()
}

/// Mean and population standard deviation of one node's tail throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub node_id: usize,
    pub mean: f64,
    pub std: f64,
    /// Per-run values, in run order.
    pub runs: Vec<f64>,
}

/// Tail-window throughput statistics across runs, one entry per node.
pub fn summarize(records: &[RunRecord], window: usize) -> Result<Vec<NodeStats>> {
    if records.is_empty() {
        return Err(Error::Empty("run records"));
    }
    if window == 0 {
        return Err(Error::InvalidArgument("summary window must be positive".into()));
    }
    let mut per_run = Vec::with_capacity(records.len());
    for r in records {
        if r.steps.len() < window {
            return Err(Error::InvalidArgument(format!(
                "run {} has {} steps, fewer than the window {window}",
                r.run_id,
                r.steps.len()
            )));
        }
        per_run.push(r.tail_throughputs(window).expect("non-empty run"));
    }
    let nodes = per_run[0].len();
    if per_run.iter().any(|t| t.len() != nodes) {
        return Err(Error::ShapeMismatch {
            expected: format!("{nodes} nodes in every run"),
            got: "runs of different scenarios".into(),
        });
    }
    Ok((0..nodes)
        .map(|i| {
            let runs: Vec<f64> = per_run.iter().map(|t| t[i]).collect();
            let (mean, std) = mean_std(&runs);
            NodeStats {
                node_id: i,
                mean,
                std,
                runs,
            }
        })
        .collect())
}

/// Order-independent mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::Alpha;
    use crate::harness::config::Mode;
    use crate::netsim::{AlohaConfig, MacConfig, WifiConfig};

    fn tiny(steps: u64) -> ScenarioConfig {
        let mut c = ScenarioConfig::new(
            Alpha::SUM_THROUGHPUT,
            vec![MacConfig::Aloha(AlohaConfig { q: 0.2, slot_len: 4 })],
        );
        c.steps = steps;
        c.seeds = vec![4, 5];
        c.log_every = 10;
        c.hyperparams.history_len = 3;
        c.hyperparams.hidden = 6;
        c.hyperparams.batch_size = 4;
        c.hyperparams.max_action = 4;
        c
    }

    #[test]
    fn zero_steps_give_empty_records() {
        let records = run_experiment(&tiny(0)).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.steps.is_empty() && r.snapshots.is_empty()));
    }

    #[test]
    fn same_seed_same_record() {
        let c = tiny(150);
        assert_eq!(run_experiment(&c).unwrap(), run_experiment(&c).unwrap());
    }

    #[test]
    fn invalid_config_rejected_before_running() {
        let mut c = tiny(10);
        c.header = 2.0;
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn snapshots_match_recomputation() {
        let records = run_experiment(&tiny(95)).unwrap();
        for r in &records {
            assert_eq!(r.snapshots.len(), 10);
            let mut elapsed = 0u64;
            for w in r.steps.windows(2) {
                assert!(w[1].minislots > w[0].minislots);
            }
            for snap in &r.snapshots {
                let upto = &r.steps[..snap.step as usize];
                let minislots: usize = upto.iter().map(|s| s.duration).sum();
                elapsed = elapsed.max(minislots as u64);
                assert_eq!(snap.minislots, minislots as u64);
                for (i, t) in snap.throughputs.iter().enumerate() {
                    let sum = upto.iter().fold(0.0, |acc, s| acc + s.rewards[i]);
                    assert_eq!(*t, sum / minislots as f64);
                    assert!((0.0..=1.0).contains(t));
                }
            }
        }
    }

    #[test]
    fn summary_statistics() {
        let records = run_experiment(&tiny(60)).unwrap();
        let one = summarize(&records[..1], 20).unwrap();
        assert!(one.iter().all(|s| s.std == 0.0));
        let both = summarize(&records, 20).unwrap();
        let mut reversed = records.clone();
        reversed.reverse();
        let rev = summarize(&reversed, 20).unwrap();
        for (a, b) in both.iter().zip(&rev) {
            assert_eq!(a.mean, b.mean);
            assert_eq!(a.std, b.std);
        }
        assert!(summarize(&[], 5).is_err());
        assert!(summarize(&records, 61).is_err());
    }

    #[test]
    fn constant_sequence_mean() {
        let (m, s) = mean_std(&[0.3, 0.3, 0.3]);
        assert_eq!((m, s), (0.3, 0.0));
    }

    #[test]
    fn gateway_members_share_transmissions() {
        let mut c = tiny(200);
        c.nodes = vec![MacConfig::Wifi(WifiConfig {
            initial_window: 2,
            max_backoff_stage: 6,
            packet_len: 4,
        })];
        c.mode = Mode::Multi;
        c.agents = 2;
        let records = run_experiment(&c).unwrap();
        for r in &records {
            let members: Vec<usize> = r.steps.iter().filter_map(|s| s.member).collect();
            for (k, m) in members.iter().enumerate() {
                assert_eq!(*m, k % 2 + 1);
            }
            let total: f64 = r.steps.iter().map(|s| s.rewards[0]).sum();
            let by_member: f64 = r.member_rewards.iter().sum();
            assert!((total - by_member).abs() < 1e-9);
        }
    }
}
