//! Throughput frontier of the learner against WiFi, compared with
//! p-persistent CSMA taking the learner's place.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::Alpha;
use crate::harness::config::ScenarioConfig;
use crate::harness::run::{run_experiment, summarize};
use crate::netsim::{MacConfig, PCsmaConfig, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// The learner at fairness exponent `parameter`.
    Learner,
    /// p-CSMA with transmit probability `parameter`.
    Pcsma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub policy: Policy,
    pub parameter: f64,
    pub wifi: f64,
    pub agent: f64,
}

fn wifi_index(config: &ScenarioConfig) -> Result<usize> {
    config
        .nodes
        .iter()
        .position(|n| matches!(n, MacConfig::Wifi(_)))
        .map(|k| k + 1)
        .ok_or_else(|| Error::Config("frontier needs a WiFi node".into()))
}

/// Long-run throughputs of p-CSMA in place of the learner, over `minislots`.
pub fn pcsma_point(base: &ScenarioConfig, p: f64, packet_len: usize, minislots: u64, seed: u64) -> Result<FrontierPoint> {
    let wifi = wifi_index(base)?;
    let mut nodes = base.nodes.clone();
    nodes.push(MacConfig::Pcsma(PCsmaConfig { p, packet_len }));
    let mut sim = Simulator::new(&nodes, base.header, seed)?;
    sim.advance(minislots);
    let t = sim.throughputs();
    Ok(FrontierPoint {
        policy: Policy::Pcsma,
        parameter: p,
        wifi: t[wifi],
        agent: t[nodes.len()],
    })
}

/// Mean tail-window throughputs of the learner at `base.alpha` across `base.seeds`.
pub fn learner_point(base: &ScenarioConfig, window: usize) -> Result<FrontierPoint> {
    let wifi = wifi_index(base)?;
    let stats = summarize(&run_experiment(base)?, window)?;
    Ok(FrontierPoint {
        policy: Policy::Learner,
        parameter: base.alpha.value(),
        wifi: stats[wifi].mean,
        agent: stats[0].mean,
    })
}

/// Learner points for each α followed by p-CSMA points for each p.
pub fn frontier(
    base: &ScenarioConfig,
    alphas: &[f64],
    ps: &[f64],
    window: usize,
    pcsma_minislots: u64,
) -> Result<Vec<FrontierPoint>> {
    let packet_len = match &base.nodes[wifi_index(base)? - 1] {
        MacConfig::Wifi(w) => w.packet_len,
        _ => unreachable!("wifi_index returns a WiFi node"),
    };
    let seed = base.seeds.first().copied().unwrap_or(1);
    let mut points = Vec::with_capacity(alphas.len() + ps.len());
    for &a in alphas {
        let mut c = base.clone();
        c.alpha = Alpha::new(a)?;
        points.push(learner_point(&c, window)?);
    }
    for &p in ps {
        points.push(pcsma_point(base, p, packet_len, pcsma_minislots, seed)?);
    }
    Ok(points)
}

/// The p-CSMA point whose WiFi throughput is closest to `wifi`.
pub fn closest_pcsma(points: &[FrontierPoint], wifi: f64) -> Option<FrontierPoint> {
    points
        .iter()
        .filter(|p| p.policy == Policy::Pcsma)
        .min_by(|a, b| (a.wifi - wifi).abs().total_cmp(&(b.wifi - wifi).abs()))
        .copied()
}

/// `policy,parameter,wifi_throughput,agent_throughput` rows.
pub fn frontier_table(points: &[FrontierPoint]) -> String {
    let mut out = String::from("policy,parameter,wifi_throughput,agent_throughput\n");
    for p in points {
        let policy = match p.policy {
            Policy::Learner => "learner",
            Policy::Pcsma => "pcsma",
        };
        out.push_str(&format!("{policy},{},{:.6},{:.6}\n", p.parameter, p.wifi, p.agent));
    }
    out
}
