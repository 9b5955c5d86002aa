use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::state::ChannelState;
use crate::error::{Error, Result};

/// Minislots consumed by `action`: one for sensing, `R` for a packet of length `R`.
pub fn duration_of(action: usize) -> usize {
    action.max(1)
}

/// One decision epoch stored without the overlapping state window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbbreviatedExperience {
    /// Newest channel state of `s_t`.
    pub current: ChannelState,
    pub action: usize,
    pub duration: usize,
    /// Reward per node, index 0 = learning node or network.
    pub rewards: Vec<f64>,
    /// `(a_t, z_t)`, the newest channel state of `s_{t+1}`.
    pub next: ChannelState,
    /// Decision epoch counter; consecutive entries of one run differ by one.
    pub step: u64,
}

/// A full experience reconstructed from `M` consecutive abbreviated ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `s_τ`, oldest first.
    pub state: Vec<ChannelState>,
    pub action: usize,
    pub duration: usize,
    pub rewards: Vec<f64>,
    /// `s_{τ+1}`: `state` shifted left by one with `c_{τ+1}` appended.
    pub next_state: Vec<ChannelState>,
}

impl Sample {
    /// Newest channel state of `s_{τ+1}`.
    pub fn next_channel_state(&self) -> ChannelState {
        *self.next_state.last().expect("windows are non-empty")
    }
}

/// FIFO experience buffer.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    entries: VecDeque<AbbreviatedExperience>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &AbbreviatedExperience> {
        self.entries.iter()
    }

    /// Appends one epoch, evicting the oldest entry when full.
    pub fn record(&mut self, e: AbbreviatedExperience) -> Result<()> {
        if e.duration != duration_of(e.action) {
            return Err(Error::InvalidArgument(format!(
                "action {} lasts {} minislots, not {}",
                e.action,
                duration_of(e.action),
                e.duration
            )));
        }
        if e.next.action() != e.action {
            return Err(Error::InvalidArgument(format!(
                "next channel state {:?} does not carry action {}",
                e.next, e.action
            )));
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(e);
        Ok(())
    }

    /// Window start positions whose `history_len` entries are consecutive epochs.
    pub fn valid_starts(&self, history_len: usize) -> Vec<usize> {
        if history_len == 0 || self.entries.len() < history_len {
            return Vec::new();
        }
        // run[k]: length of the consecutive-step run ending at k.
        let mut run = vec![1usize; self.entries.len()];
        for k in 1..self.entries.len() {
            if self.entries[k].step == self.entries[k - 1].step + 1 {
                run[k] = run[k - 1] + 1;
            }
        }
        (0..=self.entries.len() - history_len)
            .filter(|&s| run[s + history_len - 1] >= history_len)
            .collect()
    }

    /// The full experience whose window starts at buffer position `start`.
    pub fn reconstruct(&self, start: usize, history_len: usize) -> Sample {
        let window = self.entries.range(start..start + history_len);
        let state: Vec<ChannelState> = window.clone().map(|e| e.current).collect();
        let last = &self.entries[start + history_len - 1];
        let mut next_state: Vec<ChannelState> = state[1..].to_vec();
        next_state.push(last.next);
        Sample {
            state,
            action: last.action,
            duration: last.duration,
            rewards: last.rewards.clone(),
            next_state,
        }
    }

    /// Draws `batch` full experiences uniformly, with replacement, among the
    /// valid windows of `history_len` consecutive entries.
    pub fn sample_continuous(&self, batch: usize, history_len: usize, rng: &mut impl Rng) -> Result<Vec<Sample>> {
        if self.entries.len() < history_len + 1 {
            return Err(Error::BufferTooSmall {
                have: self.entries.len(),
                need: history_len + 1,
            });
        }
        let starts = self.valid_starts(history_len);
        if starts.is_empty() {
            return Err(Error::Empty("contiguous replay windows"));
        }
        Ok((0..batch)
            .map(|_| self.reconstruct(starts[rng.gen_range(0..starts.len())], history_len))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::state::AgentState;
    use crate::netsim::Observation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sense(obs: Observation) -> ChannelState {
        ChannelState::new(0, obs).unwrap()
    }

    /// Records a deterministic trajectory, returning the live state before each step.
    fn trajectory(buf: &mut ReplayBuffer, steps: u64, m: usize) -> Vec<AgentState> {
        let mut live = AgentState::new(m, 3);
        let mut history = Vec::new();
        for t in 0..steps {
            history.push(live.clone());
            let action = (t % 4) as usize;
            let obs = match (action, t % 3) {
                (0, 0) => Observation::Busy,
                (0, _) => Observation::Idle,
                (_, 0) => Observation::Collided,
                _ => Observation::Successful,
            };
            let next = ChannelState::new(action, obs).unwrap();
            buf.record(AbbreviatedExperience {
                current: live.latest(),
                action,
                duration: duration_of(action),
                rewards: vec![t as f64, 0.0],
                next,
                step: t,
            })
            .unwrap();
            live.push(next);
        }
        history.push(live);
        history
    }

    #[test]
    fn rejects_inconsistent_duration() {
        let mut buf = ReplayBuffer::new(4).unwrap();
        let e = AbbreviatedExperience {
            current: ChannelState::INITIAL,
            action: 3,
            duration: 1,
            rewards: vec![0.0],
            next: ChannelState::new(3, Observation::Successful).unwrap(),
            step: 0,
        };
        assert!(buf.record(e).is_err());
    }

    #[test]
    fn fifo_eviction_at_capacity() {
        let mut buf = ReplayBuffer::new(1000).unwrap();
        trajectory(&mut buf, 1001, 2);
        assert_eq!(buf.len(), 1000);
        assert_eq!(buf.entries().next().unwrap().step, 1);
        assert_eq!(buf.entries().last().unwrap().step, 1000);
    }

    #[test]
    fn three_entries_two_starts() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        trajectory(&mut buf, 3, 2);
        assert_eq!(buf.valid_starts(2), vec![0, 1]);
    }

    #[test]
    fn too_small_buffer_has_no_samples() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        trajectory(&mut buf, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            buf.sample_continuous(4, 3, &mut rng),
            Err(Error::BufferTooSmall { have: 3, need: 4 })
        ));
    }

    #[test]
    fn reconstruction_matches_live_state() {
        let m = 4;
        let mut buf = ReplayBuffer::new(50).unwrap();
        let live = trajectory(&mut buf, 30, m);
        for start in buf.valid_starts(m) {
            let s = buf.reconstruct(start, m);
            let tau = start + m - 1;
            let want: Vec<_> = live[tau].entries().copied().collect();
            let want_next: Vec<_> = live[tau + 1].entries().copied().collect();
            assert_eq!(s.state, want);
            assert_eq!(s.next_state, want_next);
            assert_eq!(s.state[1..], s.next_state[..m - 1]);
            assert_eq!(s.rewards[0], tau as f64);
        }
    }

    #[test]
    fn windows_skip_step_gaps() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        for (i, step) in [0u64, 1, 2, 10, 11, 12].into_iter().enumerate() {
            let obs = if i % 2 == 0 { Observation::Idle } else { Observation::Busy };
            buf.record(AbbreviatedExperience {
                current: sense(Observation::Idle),
                action: 0,
                duration: 1,
                rewards: vec![0.0],
                next: sense(obs),
                step,
            })
            .unwrap();
        }
        assert_eq!(buf.valid_starts(2), vec![0, 1, 3, 4]);
        assert_eq!(buf.valid_starts(3), vec![0, 3]);
        assert!(buf.valid_starts(4).is_empty());
    }
}
