use rand::Rng;

use crate::error::Result;
use crate::fairness::{best_action, Alpha, QValues, ScoreMode};
use crate::netsim::Observation;

/// Carrier-sense ε-greedy. After a non-IDLE observation the only choice is to
/// sense, without consuming randomness. Otherwise a uniform draw below
/// `epsilon` explores uniformly over `0..=max_action`; the remaining mass
/// takes the fairness argmax of `q_values`, which is only evaluated then.
pub fn select_action(
    last_observation: Observation,
    q_values: impl FnOnce() -> Result<QValues>,
    epsilon: f64,
    alpha: Alpha,
    mode: ScoreMode,
    max_action: usize,
    rng: &mut impl Rng,
) -> Result<usize> {
    if last_observation != Observation::Idle {
        return Ok(0);
    }
    if rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..=max_action));
    }
    Ok(best_action(&q_values()?, alpha, mode, true))
}

/// One step of the exploration schedule.
pub fn update_epsilon(epsilon: f64, decay: f64, floor: f64) -> f64 {
    (decay * epsilon).max(floor)
}
