//! Minislot-resolution shared channel.
//!
//! All nodes advance in lockstep, one minislot per tick. A packet succeeds iff
//! no other node transmitted in any minislot of its span; its owner learns the
//! outcome at the packet's final minislot and is credited `R - H` payload
//! minislots there. The learning network occupies reward index 0 and drives
//! the clock through [`Simulator::step_agent`]; the coexisting nodes sit at
//! indices `1..=L` in configuration order.

mod mac;

pub use mac::{AlohaConfig, MacConfig, PCsmaConfig, TdmaConfig, WifiConfig, WifiState};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use mac::MacState;

/// Maximum number of coexisting nodes (the transmitter trace is a 64-bit mask).
pub const MAX_NODES: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observation {
    Idle,
    Busy,
    Successful,
    Collided,
}

impl Observation {
    pub const ALL: [Observation; 4] = [
        Observation::Idle,
        Observation::Busy,
        Observation::Successful,
        Observation::Collided,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Successful,
    Collided,
}

impl From<Outcome> for Observation {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Successful => Observation::Successful,
            Outcome::Collided => Observation::Collided,
        }
    }
}

/// One packet on the air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    /// Reward index of the owner (0 = learning network).
    pub owner: usize,
    pub start: u64,
    pub duration: usize,
    pub header: f64,
}

impl PacketSpec {
    pub fn payload(&self) -> f64 {
        self.duration as f64 - self.header
    }

    fn last_minislot(&self) -> u64 {
        self.start + self.duration as u64 - 1
    }
}

/// Outcome of a packet given how many *other* nodes transmitted in each of
/// its minislots.
pub fn resolve_packet(others_per_minislot: impl IntoIterator<Item = usize>) -> Outcome {
    if others_per_minislot.into_iter().any(|n| n > 0) {
        Outcome::Collided
    } else {
        Outcome::Successful
    }
}

/// `Σ rewards / Σ durations`.
pub fn throughput(rewards: &[f64], durations: &[usize]) -> Result<f64> {
    let elapsed: usize = durations.iter().sum();
    if elapsed == 0 {
        return Err(Error::InvalidArgument(
            "throughput over zero elapsed minislots".into(),
        ));
    }
    Ok(rewards.iter().sum::<f64>() / elapsed as f64)
}

#[derive(Debug, Clone, Copy)]
struct Active {
    packet: PacketSpec,
    collided: bool,
}

impl Active {
    fn new(owner: usize, start: u64, duration: usize, header: f64) -> Self {
        Active {
            packet: PacketSpec {
                owner,
                start,
                duration,
                header,
            },
            collided: false,
        }
    }
}

/// What happened on the channel during one minislot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// Bit 0: learning network; bit k: coexisting node k.
    pub transmitters: u64,
    /// Payload credited to all nodes for packets ending in this minislot.
    pub credited: f64,
}

/// Result of one decision epoch of the learning network.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub observation: Observation,
    /// Minislots consumed: 1 for sensing, `R` for a packet of length `R`.
    pub duration: usize,
    /// Rewards credited during the epoch, index 0 = learning network.
    pub rewards: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    macs: Vec<MacState>,
    active: Vec<Option<Active>>,
    agent_packet: Option<Active>,
    header: f64,
    now: u64,
    rng: ChaCha8Rng,
    pending: Vec<f64>,
    totals: Vec<f64>,
    trace: Option<Vec<TraceEntry>>,
}

impl Simulator {
    /// Builds a channel with the given coexisting nodes. `header` is the
    /// per-packet overhead in minislots, `0 < H < 1`.
    pub fn new(nodes: &[MacConfig], header: f64, seed: u64) -> Result<Self> {
        if !(header > 0.0 && header < 1.0) {
            return Err(Error::Config(format!("header must lie in (0, 1), got {header}")));
        }
        if nodes.len() > MAX_NODES {
            return Err(Error::Config(format!("at most {MAX_NODES} coexisting nodes")));
        }
        for n in nodes {
            n.validate()?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let macs: Vec<MacState> = nodes.iter().map(|c| MacState::new(c, &mut rng)).collect();
        Ok(Simulator {
            active: vec![None; macs.len()],
            agent_packet: None,
            header,
            now: 0,
            rng,
            pending: vec![0.0; nodes.len() + 1],
            totals: vec![0.0; nodes.len() + 1],
            trace: None,
            macs,
        })
    }

    /// Start recording one [`TraceEntry`] per minislot.
    pub fn record_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn header(&self) -> f64 {
        self.header
    }

    /// Number of coexisting nodes `L`.
    pub fn other_nodes(&self) -> usize {
        self.macs.len()
    }

    /// Cumulative payload credited per reward index since the start.
    pub fn total_rewards(&self) -> &[f64] {
        &self.totals
    }

    /// Long-run throughput per reward index.
    pub fn throughputs(&self) -> Vec<f64> {
        let t = self.now.max(1) as f64;
        self.totals.iter().map(|r| r / t).collect()
    }

    /// Backoff states of the WiFi nodes, keyed by reward index.
    pub fn wifi_states(&self) -> Vec<(usize, &WifiState)> {
        self.macs
            .iter()
            .enumerate()
            .filter_map(|(k, m)| m.wifi().map(|w| (k + 1, w)))
            .collect()
    }

    /// Advances one minislot with the learning network transmitting or not.
    /// Returns how many coexisting nodes transmitted.
    pub fn step_minislot(&mut self, agent_transmits: bool) -> usize {
        let now = self.now;
        let mut mask = u64::from(agent_transmits);
        let mut others = 0;
        for (k, mac) in self.macs.iter_mut().enumerate() {
            if self.active[k].is_none() {
                if let Some(len) = mac.decide(now, &mut self.rng) {
                    self.active[k] = Some(Active::new(k + 1, now, len, self.header));
                }
            }
            if self.active[k].is_some() {
                others += 1;
                mask |= 1 << (k + 1);
            }
        }

        if others + usize::from(agent_transmits) > 1 {
            for a in self.active.iter_mut().flatten() {
                a.collided = true;
            }
            if let Some(a) = self.agent_packet.as_mut() {
                a.collided = true;
            }
        }

        let idle = mask == 0;
        for (k, mac) in self.macs.iter_mut().enumerate() {
            if self.active[k].is_none() {
                mac.sense(idle);
            }
        }

        let mut credited = 0.0;
        for (k, mac) in self.macs.iter_mut().enumerate() {
            let Some(a) = self.active[k] else { continue };
            if a.packet.last_minislot() != now {
                continue;
            }
            let outcome = if a.collided { Outcome::Collided } else { Outcome::Successful };
            if outcome == Outcome::Successful {
                self.pending[k + 1] += a.packet.payload();
                credited += a.packet.payload();
            }
            mac.on_outcome(outcome, &mut self.rng);
            self.active[k] = None;
        }
        // The outcome itself is read by step_agent through `agent_outcome`.
        if let Some(a) = self.agent_packet.filter(|a| a.packet.last_minislot() == now && !a.collided) {
            self.pending[0] += a.packet.payload();
            credited += a.packet.payload();
        }

        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEntry {
                transmitters: mask,
                credited,
            });
        }
        self.now += 1;
        others
    }

    fn take_pending(&mut self) -> Vec<f64> {
        for (t, p) in self.totals.iter_mut().zip(&self.pending) {
            *t += p;
        }
        let out = self.pending.clone();
        self.pending.iter_mut().for_each(|p| *p = 0.0);
        out
    }

    /// Runs one decision epoch: action 0 senses one minislot, action `R ≥ 1`
    /// transmits a packet of `R` minislots.
    pub fn step_agent(&mut self, action: usize) -> Epoch {
        if action == 0 {
            let others = self.step_minislot(false);
            let observation = if others > 0 { Observation::Busy } else { Observation::Idle };
            return Epoch {
                observation,
                duration: 1,
                rewards: self.take_pending(),
            };
        }
        let packet = Active::new(0, self.now, action, self.header);
        self.agent_packet = Some(packet);
        for _ in 0..action {
            self.step_minislot(true);
        }
        let done = self.agent_packet.take().expect("agent packet in flight");
        let observation = if done.collided {
            Observation::Collided
        } else {
            Observation::Successful
        };
        Epoch {
            observation,
            duration: action,
            rewards: self.take_pending(),
        }
    }

    /// Advances `minislots` with the learning network silent, crediting
    /// rewards to the running totals.
    pub fn advance(&mut self, minislots: u64) {
        for _ in 0..minislots {
            self.step_minislot(false);
        }
        self.take_pending();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tdma_2_5() -> MacConfig {
        MacConfig::Tdma(TdmaConfig {
            frame_len: 5,
            occupied_slots: vec![2, 5],
            slot_len: 10,
        })
    }

    fn aloha(q: f64) -> MacConfig {
        MacConfig::Aloha(AlohaConfig { q, slot_len: 10 })
    }

    fn wifi() -> MacConfig {
        MacConfig::Wifi(WifiConfig {
            initial_window: 2,
            max_backoff_stage: 6,
            packet_len: 10,
        })
    }

    #[test]
    fn tdma_pattern_is_slots_two_and_five() {
        let mut sim = Simulator::new(&[tdma_2_5()], 0.5, 0).unwrap();
        sim.record_trace();
        sim.advance(150);
        for (t, e) in sim.trace().iter().enumerate() {
            let within = t % 50;
            let expected = (10..20).contains(&within) || (40..50).contains(&within);
            assert_eq!(e.transmitters & 2 != 0, expected, "minislot {t}");
        }
    }

    #[test]
    fn tdma_alone_always_succeeds() {
        let mut sim = Simulator::new(&[tdma_2_5()], 0.5, 0).unwrap();
        sim.advance(500);
        // 10 frames, 2 packets each.
        assert_eq!(sim.total_rewards()[1], 20.0 * 9.5);
    }

    #[test]
    fn aloha_with_zero_q_never_transmits() {
        let mut sim = Simulator::new(&[aloha(0.0)], 0.5, 3).unwrap();
        sim.record_trace();
        sim.advance(1000);
        assert!(sim.trace().iter().all(|e| e.transmitters == 0));
    }

    #[test]
    fn aloha_draws_only_at_slot_boundaries() {
        let mut sim = Simulator::new(&[aloha(0.5)], 0.5, 11).unwrap();
        sim.record_trace();
        sim.advance(10_000);
        for slot in sim.trace().chunks(10) {
            let first = slot[0].transmitters;
            assert!(slot.iter().all(|e| e.transmitters == first));
        }
    }

    #[test]
    fn agent_success_pays_length_minus_header() {
        let mut sim = Simulator::new(&[], 0.5, 0).unwrap();
        let e = sim.step_agent(3);
        assert_eq!(e.observation, Observation::Successful);
        assert_eq!(e.duration, 3);
        assert_eq!(e.rewards, vec![2.5]);
        let e = sim.step_agent(0);
        assert_eq!(e.observation, Observation::Idle);
        assert_eq!(e.rewards, vec![0.0]);
    }

    #[test]
    fn sensing_during_foreign_packet_is_busy_and_credits_on_completion() {
        let mut sim = Simulator::new(&[aloha(1.0)], 0.5, 0).unwrap();
        for k in 0..10 {
            let e = sim.step_agent(0);
            assert_eq!(e.observation, Observation::Busy);
            let expected = if k == 9 { 9.5 } else { 0.0 };
            assert_eq!(e.rewards, vec![0.0, expected]);
        }
    }

    #[test]
    fn one_minislot_overlap_collides_both() {
        // The TDMA slot 2 spans minislots 10..20; the agent packet covers 9..11.
        let mut sim = Simulator::new(&[tdma_2_5()], 0.5, 0).unwrap();
        for _ in 0..9 {
            sim.step_agent(0);
        }
        // Minislots 9..11: one minislot before the TDMA slot, one inside.
        let e = sim.step_agent(2);
        assert_eq!(e.observation, Observation::Collided);
        assert_eq!(e.rewards[0], 0.0);
        while sim.now() < 20 {
            sim.step_agent(0);
        }
        assert_eq!(sim.total_rewards()[1], 0.0);
    }

    #[test]
    fn resolve_packet_examples() {
        assert_eq!(resolve_packet([0; 10]), Outcome::Successful);
        assert_eq!(resolve_packet([0, 0, 1, 0]), Outcome::Collided);
    }

    #[test]
    fn throughput_examples() {
        let t = throughput(&[9.5, 0.0, 9.5], &[10, 1, 10]).unwrap();
        assert!((t - 19.0 / 21.0).abs() < 1e-15);
        assert_eq!(throughput(&[0.0, 0.0], &[1, 10]).unwrap(), 0.0);
        assert!(throughput(&[], &[]).is_err());
    }

    #[test]
    fn wifi_alone_never_collides() {
        let mut sim = Simulator::new(&[wifi()], 0.5, 5).unwrap();
        for _ in 0..5_000 {
            sim.step_agent(0);
        }
        for (_, w) in sim.wifi_states() {
            assert_eq!(w.window(), 2);
        }
        assert!(sim.total_rewards()[1] > 0.0);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(Simulator::new(&[], 1.0, 0).is_err());
        assert!(Simulator::new(&[], 0.0, 0).is_err());
    }
}
