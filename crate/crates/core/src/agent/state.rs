use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::Observation;

/// One action–observation pair. Sensing (action 0) observes IDLE or BUSY; a
/// transmission of length `R ≥ 1` observes SUCCESSFUL or COLLIDED.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelState {
    action: usize,
    observation: Observation,
}

impl ChannelState {
    /// Filler for history positions before the first decision.
    pub const INITIAL: ChannelState = ChannelState {
        action: 0,
        observation: Observation::Idle,
    };

    pub fn new(action: usize, observation: Observation) -> Result<Self> {
        let sensing_obs = matches!(observation, Observation::Idle | Observation::Busy);
        if (action == 0) != sensing_obs {
            return Err(Error::InvalidArgument(format!(
                "action {action} cannot observe {observation:?}"
            )));
        }
        Ok(ChannelState {
            action,
            observation,
        })
    }

    pub fn action(&self) -> usize {
        self.action
    }

    pub fn observation(&self) -> Observation {
        self.observation
    }

    /// One-hot action (`max_action + 1` wide) followed by one-hot observation (4 wide).
    pub fn encode_into(&self, max_action: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), encoding_width(max_action));
        out.fill(0.0);
        out[self.action] = 1.0;
        out[max_action + 1 + self.observation.index()] = 1.0;
    }
}

/// Features per channel state.
pub fn encoding_width(max_action: usize) -> usize {
    max_action + 1 + Observation::ALL.len()
}

/// Encodes a window of channel states, oldest first, into `out`.
pub fn encode_window<'a>(
    window: impl IntoIterator<Item = &'a ChannelState>,
    max_action: usize,
    out: &mut [f64],
) {
    let w = encoding_width(max_action);
    for (c, chunk) in window.into_iter().zip(out.chunks_exact_mut(w)) {
        c.encode_into(max_action, chunk);
    }
}

/// The last `M` channel states, oldest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    window: VecDeque<ChannelState>,
    max_action: usize,
}

impl AgentState {
    pub fn new(history_len: usize, max_action: usize) -> Self {
        AgentState {
            window: std::iter::repeat_n(ChannelState::INITIAL, history_len).collect(),
            max_action,
        }
    }

    pub fn push(&mut self, c: ChannelState) {
        self.window.pop_front();
        self.window.push_back(c);
    }

    pub fn latest(&self) -> ChannelState {
        *self.window.back().expect("history length is positive")
    }

    pub fn last_observation(&self) -> Observation {
        self.latest().observation
    }

    pub fn entries(&self) -> impl Iterator<Item = &ChannelState> {
        self.window.iter()
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn encode(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.window.len() * encoding_width(self.max_action)];
        encode_window(&self.window, self.max_action, &mut out);
        out
    }
}
