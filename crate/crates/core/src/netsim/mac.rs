//! Per-node MAC state machines for the coexisting (non-learning) nodes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::Outcome;

/// Transmits in fixed slots of a repeating frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdmaConfig {
    /// TDMA slots per frame.
    pub frame_len: usize,
    /// 1-based indices of the slots this node owns.
    pub occupied_slots: Vec<usize>,
    /// Slot (and packet) length in minislots.
    pub slot_len: usize,
}

/// Slotted ALOHA with a fixed per-slot transmit probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlohaConfig {
    pub q: f64,
    pub slot_len: usize,
}

/// Simplified WiFi: carrier sensing with binary exponential backoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WifiConfig {
    pub initial_window: usize,
    pub max_backoff_stage: u32,
    pub packet_len: usize,
}

/// p-persistent CSMA: after sensing one idle minislot, transmit with probability p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PCsmaConfig {
    pub p: f64,
    pub packet_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MacConfig {
    Tdma(TdmaConfig),
    Aloha(AlohaConfig),
    Wifi(WifiConfig),
    Pcsma(PCsmaConfig),
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_len(name: &str, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::Config(format!("{name} must be a positive number of minislots")));
    }
    Ok(())
}

impl MacConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            MacConfig::Tdma(c) => {
                check_len("tdma slot_len", c.slot_len)?;
                if c.frame_len == 0 {
                    return Err(Error::Config("tdma frame_len must be positive".into()));
                }
                if let Some(s) = c.occupied_slots.iter().find(|s| **s == 0 || **s > c.frame_len) {
                    return Err(Error::Config(format!(
                        "tdma slot {s} outside 1..={}",
                        c.frame_len
                    )));
                }
                Ok(())
            }
            MacConfig::Aloha(c) => {
                check_len("aloha slot_len", c.slot_len)?;
                check_probability("aloha q", c.q)
            }
            MacConfig::Wifi(c) => {
                check_len("wifi packet_len", c.packet_len)?;
                if c.initial_window == 0 {
                    return Err(Error::Config("wifi initial_window must be positive".into()));
                }
                if c.max_backoff_stage > 20 {
                    return Err(Error::Config("wifi max_backoff_stage above 20".into()));
                }
                Ok(())
            }
            MacConfig::Pcsma(c) => {
                check_len("pcsma packet_len", c.packet_len)?;
                check_probability("pcsma p", c.p)
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MacConfig::Tdma(_) => "tdma",
            MacConfig::Aloha(_) => "aloha",
            MacConfig::Wifi(_) => "wifi",
            MacConfig::Pcsma(_) => "pcsma",
        }
    }
}

/// Backoff state of a WiFi node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WifiState {
    initial_window: usize,
    max_window: usize,
    window: usize,
    counter: usize,
    last_idle: bool,
}

impl WifiState {
    pub fn new(config: &WifiConfig, rng: &mut impl Rng) -> Self {
        let mut state = WifiState {
            initial_window: config.initial_window,
            max_window: config.initial_window << config.max_backoff_stage,
            window: config.initial_window,
            counter: 0,
            last_idle: false,
        };
        state.counter = rng.gen_range(0..state.window);
        state
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn counter(&self) -> usize {
        self.counter
    }

    pub fn max_window(&self) -> usize {
        self.max_window
    }

    /// Transmit when the counter is exhausted and the last sensed minislot was idle.
    pub fn wants_to_transmit(&self) -> bool {
        self.counter == 0 && self.last_idle
    }

    /// Countdown on idle minislots, freeze on busy ones.
    pub fn sense(&mut self, idle: bool) {
        if idle && self.counter > 0 {
            self.counter -= 1;
        }
        self.last_idle = idle;
    }

    /// Binary exponential backoff after the node's own packet completes.
    pub fn on_outcome(&mut self, outcome: Outcome, rng: &mut impl Rng) {
        self.window = match outcome {
            Outcome::Collided => (self.window * 2).min(self.max_window),
            Outcome::Successful => self.initial_window,
        };
        self.counter = rng.gen_range(0..self.window);
        self.last_idle = false;
    }
}

#[derive(Debug, Clone)]
pub(crate) enum MacState {
    Tdma {
        config: TdmaConfig,
        owned: Vec<bool>,
    },
    Aloha(AlohaConfig),
    Wifi {
        packet_len: usize,
        state: WifiState,
    },
    Pcsma {
        config: PCsmaConfig,
        last_idle: bool,
    },
}

impl MacState {
    pub(crate) fn new(config: &MacConfig, rng: &mut impl Rng) -> Self {
        match config {
            MacConfig::Tdma(c) => {
                let mut owned = vec![false; c.frame_len];
                for s in &c.occupied_slots {
                    owned[s - 1] = true;
                }
                MacState::Tdma {
                    config: c.clone(),
                    owned,
                }
            }
            MacConfig::Aloha(c) => MacState::Aloha(c.clone()),
            MacConfig::Wifi(c) => MacState::Wifi {
                packet_len: c.packet_len,
                state: WifiState::new(c, rng),
            },
            MacConfig::Pcsma(c) => MacState::Pcsma {
                config: c.clone(),
                last_idle: false,
            },
        }
    }

    /// Called at the start of minislot `now` when the node is not mid-packet.
    /// Returns the length of a packet to start, if any.
    pub(crate) fn decide(&mut self, now: u64, rng: &mut impl Rng) -> Option<usize> {
        match self {
            MacState::Tdma { config, owned } => {
                let len = config.slot_len as u64;
                if !now.is_multiple_of(len) {
                    return None;
                }
                let slot = ((now / len) % config.frame_len as u64) as usize;
                owned[slot].then_some(config.slot_len)
            }
            MacState::Aloha(config) => {
                let len = config.slot_len as u64;
                if !now.is_multiple_of(len) {
                    return None;
                }
                rng.gen_bool(config.q).then_some(config.slot_len)
            }
            MacState::Wifi { packet_len, state } => state.wants_to_transmit().then_some(*packet_len),
            MacState::Pcsma { config, last_idle } => {
                if !*last_idle {
                    return None;
                }
                rng.gen_bool(config.p).then_some(config.packet_len)
            }
        }
    }

    /// The node listened during a minislot in which it did not transmit.
    pub(crate) fn sense(&mut self, idle: bool) {
        match self {
            MacState::Wifi { state, .. } => state.sense(idle),
            MacState::Pcsma { last_idle, .. } => *last_idle = idle,
            MacState::Tdma { .. } | MacState::Aloha(_) => {}
        }
    }

    pub(crate) fn on_outcome(&mut self, outcome: Outcome, rng: &mut impl Rng) {
        match self {
            MacState::Wifi { state, .. } => state.on_outcome(outcome, rng),
            MacState::Pcsma { last_idle, .. } => *last_idle = false,
            MacState::Tdma { .. } | MacState::Aloha(_) => {}
        }
    }

    pub(crate) fn wifi(&self) -> Option<&WifiState> {
        match self {
            MacState::Wifi { state, .. } => Some(state),
            _ => None,
        }
    }
}
