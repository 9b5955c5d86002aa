//! Model-aware benchmark for a learner coexisting with TDMA and slotted ALOHA.
//!
//! A node that knows both MACs never transmits in TDMA-occupied slots. In the
//! remaining slots it either transmits the full slot (greedy) or senses the
//! first minislot and sends the remaining `R - 1` only when ALOHA is silent
//! (polite). TDMA and ALOHA slots are aligned and share the length `R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{alpha_utility, Alpha};
use crate::netsim::{AlohaConfig, MacConfig, Observation, Simulator, TdmaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Greedy,
    Polite,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Greedy, Strategy::Polite];
}

/// Throughputs within one slot not occupied by TDMA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerSlot {
    pub agent: f64,
    pub aloha: f64,
}

/// Long-run throughputs of the three nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub agent: f64,
    pub tdma: f64,
    pub aloha: f64,
}

impl Benchmark {
    pub fn as_array(&self) -> [f64; 3] {
        [self.agent, self.tdma, self.aloha]
    }

    /// `Σ_i f_α(x_i)` over the three nodes.
    pub fn objective(&self, alpha: Alpha) -> Result<f64> {
        self.as_array().iter().map(|x| alpha_utility(*x, alpha)).sum()
    }
}

fn check_probability(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("probability {q} outside [0, 1]")));
    }
    Ok(())
}

/// Per-slot throughputs of `strategy` against ALOHA with probability `q`,
/// slot length `slot_len` and header `header`.
pub fn per_slot_throughputs(strategy: Strategy, q: f64, slot_len: usize, header: f64) -> Result<PerSlot> {
    check_probability(q)?;
    if slot_len < 2 {
        return Err(Error::InvalidArgument(format!(
            "slot length {slot_len} leaves no payload after sensing"
        )));
    }
    if !(header > 0.0 && header < 1.0) {
        return Err(Error::InvalidArgument(format!("header {header} outside (0, 1)")));
    }
    let r = slot_len as f64;
    Ok(match strategy {
        Strategy::Greedy => PerSlot {
            agent: (1.0 - q) * (r - header) / r,
            aloha: 0.0,
        },
        Strategy::Polite => PerSlot {
            agent: (1.0 - q) * (r - 1.0 - header) / r,
            aloha: q * (r - header) / r,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkScenario {
    pub tdma: TdmaConfig,
    pub aloha: AlohaConfig,
    pub header: f64,
}

impl BenchmarkScenario {
    /// TDMA owning slots 2 and 5 of 5, ALOHA with `q = 0.5`, 10-minislot slots, `H = 0.5`.
    pub fn reference() -> Self {
        BenchmarkScenario {
            tdma: TdmaConfig {
                frame_len: 5,
                occupied_slots: vec![2, 5],
                slot_len: 10,
            },
            aloha: AlohaConfig { q: 0.5, slot_len: 10 },
            header: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        MacConfig::Tdma(self.tdma.clone()).validate()?;
        MacConfig::Aloha(self.aloha.clone()).validate()?;
        if self.tdma.slot_len != self.aloha.slot_len {
            return Err(Error::Config(format!(
                "TDMA slot {} and ALOHA slot {} must be equal",
                self.tdma.slot_len, self.aloha.slot_len
            )));
        }
        Ok(())
    }

    /// Coexisting nodes in reward order: TDMA then ALOHA.
    pub fn nodes(&self) -> Vec<MacConfig> {
        vec![MacConfig::Tdma(self.tdma.clone()), MacConfig::Aloha(self.aloha.clone())]
    }

    /// Fraction of slots TDMA occupies.
    pub fn occupied_fraction(&self) -> f64 {
        let mut slots = self.tdma.occupied_slots.clone();
        slots.sort_unstable();
        slots.dedup();
        slots.len() as f64 / self.tdma.frame_len as f64
    }

    fn occupies(&self, slot: u64) -> bool {
        let index = (slot % self.tdma.frame_len as u64) as usize + 1;
        self.tdma.occupied_slots.contains(&index)
    }
}

/// Closed-form throughputs with the model-aware node playing `strategy`.
pub fn strategy_throughputs(scenario: &BenchmarkScenario, strategy: Strategy) -> Result<Benchmark> {
    scenario.validate()?;
    let r = scenario.aloha.slot_len as f64;
    let q = scenario.aloha.q;
    let occ = scenario.occupied_fraction();
    let free = 1.0 - occ;
    let slot = per_slot_throughputs(strategy, q, scenario.aloha.slot_len, scenario.header)?;
    Ok(Benchmark {
        agent: free * slot.agent,
        tdma: occ * (1.0 - q) * (r - scenario.header) / r,
        aloha: free * slot.aloha,
    })
}

/// Closed-form throughputs of the optimal (polite) model-aware node.
pub fn benchmark_throughputs(scenario: &BenchmarkScenario) -> Result<Benchmark> {
    strategy_throughputs(scenario, Strategy::Polite)
}

/// Runs the scripted model-aware node on the simulator for at least
/// `minislots` minislots (whole slots) and returns empirical throughputs.
pub fn simulate_model_aware(
    scenario: &BenchmarkScenario,
    strategy: Strategy,
    minislots: u64,
    seed: u64,
) -> Result<Benchmark> {
    scenario.validate()?;
    let r = scenario.aloha.slot_len;
    let mut sim = Simulator::new(&scenario.nodes(), scenario.header, seed)?;
    let slots = minislots.div_ceil(r as u64);
    for slot in 0..slots {
        if scenario.occupies(slot) {
            sim.advance(r as u64);
            continue;
        }
        match strategy {
            Strategy::Greedy => {
                sim.step_agent(r);
            }
            Strategy::Polite => {
                if sim.step_agent(0).observation == Observation::Idle {
                    sim.step_agent(r - 1);
                } else {
                    sim.advance(r as u64 - 1);
                }
            }
        }
    }
    let t = sim.throughputs();
    Ok(Benchmark {
        agent: t[0],
        tdma: t[1],
        aloha: t[2],
    })
}

/// Benchmark reference table: one `strategy,agent,tdma,aloha` row per strategy.
pub fn benchmark_table(scenario: &BenchmarkScenario) -> Result<String> {
    let mut out = String::from("strategy,agent,tdma,aloha\n");
    for s in Strategy::ALL {
        let b = strategy_throughputs(scenario, s)?;
        let name = match s {
            Strategy::Greedy => "greedy",
            Strategy::Polite => "polite",
        };
        out.push_str(&format!("{name},{},{},{}\n", b.agent, b.tdma, b.aloha));
    }
    Ok(out)
}
