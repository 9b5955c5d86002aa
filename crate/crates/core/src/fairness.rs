//! α-fairness utilities and the action scores built from per-node Q-values.
//!
//! The utility family interpolates between sum throughput (α = 0),
//! proportional fairness (α = 1) and max-min fairness (α → ∞, approximated
//! by a large finite α). Every Q-value is raised to [`Q_FLOOR`] before it is
//! fed to the utility, since the power and log branches are undefined at
//! nonpositive arguments and approximation error can push estimates below 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest value passed to [`alpha_utility`] by the scoring functions.
pub const Q_FLOOR: f64 = 1e-6;

/// Fairness exponent α ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const SUM_THROUGHPUT: Alpha = Alpha(0.0);
    pub const PROPORTIONAL: Alpha = Alpha(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha must be finite and nonnegative, got {alpha}"
            )));
        }
        Ok(Alpha(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn is_log(self) -> bool {
        self.0 == 1.0
    }

    /// Utility of an already-validated, strictly positive argument.
    #[inline]
    fn eval(self, x: f64) -> f64 {
        if self.is_log() {
            x.ln()
        } else if self.0 == 0.0 {
            x
        } else {
            x.powf(1.0 - self.0) / (1.0 - self.0)
        }
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(value: Alpha) -> f64 {
        value.0
    }
}

/// `log(x)` when α = 1, otherwise `x^(1-α) / (1-α)`.
///
/// Inputs below [`Q_FLOOR`] are raised to it; negative inputs are rejected.
pub fn alpha_utility(x: f64, alpha: Alpha) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "utility argument must be nonnegative, got {x}"
        )));
    }
    Ok(alpha.eval(x.max(Q_FLOOR)))
}

#[inline]
fn clamped_utility(x: f64, alpha: Alpha) -> f64 {
    // NaN propagates so a diverged network shows up in the score.
    if x.is_nan() {
        return f64::NAN;
    }
    alpha.eval(x.max(Q_FLOOR))
}

/// Q-value estimates indexed `[node][action]`, node 0 being the learning
/// network and nodes `1..=L` the coexisting nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct QValues {
    nodes: usize,
    actions: usize,
    data: Vec<f64>,
}

impl QValues {
    pub fn zeros(nodes: usize, actions: usize) -> Self {
        QValues {
            nodes,
            actions,
            data: vec![0.0; nodes * actions],
        }
    }

    /// Wraps a row-major `[node][action]` buffer.
    pub fn from_vec(nodes: usize, actions: usize, data: Vec<f64>) -> Result<Self> {
        if nodes == 0 || actions == 0 || data.len() != nodes * actions {
            return Err(Error::ShapeMismatch {
                expected: format!("{nodes}x{actions}"),
                got: format!("{} values", data.len()),
            });
        }
        Ok(QValues {
            nodes,
            actions,
            data,
        })
    }

    /// Builds a matrix from per-node rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != actions) {
            return Err(Error::ShapeMismatch {
                expected: format!("rows of length {actions}"),
                got: "ragged rows".into(),
            });
        }
        QValues::from_vec(rows.len(), actions, rows.concat())
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn max_action(&self) -> usize {
        self.actions - 1
    }

    #[inline]
    pub fn get(&self, node: usize, action: usize) -> f64 {
        self.data[node * self.actions + action]
    }

    pub fn set(&mut self, node: usize, action: usize, value: f64) {
        self.data[node * self.actions + action] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> QValues {
        QValues {
            nodes: self.nodes,
            actions: self.actions,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.actions {
            return Err(Error::ActionOutOfRange {
                action,
                max: self.max_action(),
            });
        }
        Ok(())
    }
}

/// How per-node Q-values are combined into one scalar per action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreMode {
    /// One learning node: plain sum of utilities.
    Single,
    /// A learning network of `agents` nodes sharing the column-0 estimate.
    Multi { agents: usize },
}

/// `Σ_i f_α(q[i][action])`.
pub fn score_single(q: &QValues, action: usize, alpha: Alpha) -> Result<f64> {
    q.check_action(action)?;
    Ok(single_unchecked(q, action, alpha))
}

/// `(N-L)·f_α(q[0][a]/(N-L)) + Σ_{i≥1} f_α(q[i][a])`, with `N-L = num_agents`.
pub fn score_multi(q: &QValues, action: usize, alpha: Alpha, num_agents: usize) -> Result<f64> {
    q.check_action(action)?;
    if num_agents == 0 {
        return Err(Error::InvalidArgument(
            "a learning network needs at least one node".into(),
        ));
    }
    Ok(multi_unchecked(q, action, alpha, num_agents))
}

fn single_unchecked(q: &QValues, action: usize, alpha: Alpha) -> f64 {
    let own = clamped_utility(q.get(0, action), alpha);
    others_utility(q, action, alpha, own)
}

/// Adds the coexisting nodes' utilities to `own`, in node order.
fn others_utility(q: &QValues, action: usize, alpha: Alpha, own: f64) -> f64 {
    (1..q.nodes).fold(own, |acc, i| acc + clamped_utility(q.get(i, action), alpha))
}

fn multi_unchecked(q: &QValues, action: usize, alpha: Alpha, agents: usize) -> f64 {
    let n = agents as f64;
    let own = n * clamped_utility(q.get(0, action) / n, alpha);
    others_utility(q, action, alpha, own)
}

/// Score of `action` under `mode`.
pub fn score(q: &QValues, action: usize, alpha: Alpha, mode: ScoreMode) -> Result<f64> {
    match mode {
        ScoreMode::Single => score_single(q, action, alpha),
        ScoreMode::Multi { agents } => score_multi(q, action, alpha, agents),
    }
}

/// Highest-scoring action; ties go to the smallest index. When
/// `may_transmit` is false only action 0 is feasible.
pub fn best_action(q: &QValues, alpha: Alpha, mode: ScoreMode, may_transmit: bool) -> usize {
    if !may_transmit {
        return 0;
    }
    let agents = match mode {
        ScoreMode::Single => None,
        ScoreMode::Multi { agents } => Some(agents.max(1)),
    };
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for a in 0..q.actions {
        let s = match agents {
            None => single_unchecked(q, a, alpha),
            Some(n) => multi_unchecked(q, a, alpha, n),
        };
        // NaN never wins, so a diverged network degrades to sensing.
        if s > best_score {
            best_score = s;
            best = a;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alpha(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    fn column(values: &[f64]) -> QValues {
        QValues::from_rows(&values.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn utility_examples() {
        assert_eq!(alpha_utility(0.5, alpha(0.0)).unwrap(), 0.5);
        assert_eq!(alpha_utility(1.0, alpha(1.0)).unwrap(), 0.0);
        assert!((alpha_utility(0.5, alpha(2.0)).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn utility_rejects_negative_inputs() {
        assert!(alpha_utility(-0.1, alpha(1.0)).is_err());
        assert!(Alpha::new(-1.0).is_err());
        assert!(Alpha::new(f64::NAN).is_err());
    }

    #[test]
    fn utility_clamps_zero() {
        assert_eq!(alpha_utility(0.0, alpha(1.0)).unwrap(), Q_FLOOR.ln());
        assert!(alpha_utility(0.0, alpha(50.0)).unwrap().is_finite());
    }

    #[test]
    fn single_score_examples() {
        assert_eq!(score_single(&column(&[1.0, 1.0]), 0, alpha(1.0)).unwrap(), 0.0);
        assert_eq!(score_single(&column(&[0.5, 0.25]), 0, alpha(0.0)).unwrap(), 0.75);
        let s = score_single(&column(&[0.5, 0.25]), 0, alpha(2.0)).unwrap();
        assert!((s + 6.0).abs() < 1e-12);
    }

    #[test]
    fn multi_score_examples() {
        let q = column(&[0.4, 0.2]);
        assert!((score_multi(&q, 0, alpha(0.0), 2).unwrap() - 0.6).abs() < 1e-15);
        let expected = 3.0 * 0.2f64.ln();
        assert!((score_multi(&q, 0, alpha(1.0), 2).unwrap() - expected).abs() < 1e-12);
        assert!((expected + 4.8283).abs() < 1e-4);
    }

    #[test]
    fn out_of_range_action_is_rejected() {
        let q = QValues::zeros(2, 3);
        assert!(matches!(
            score_single(&q, 3, alpha(0.0)),
            Err(Error::ActionOutOfRange { action: 3, max: 2 })
        ));
        assert!(score_multi(&q, 0, alpha(0.0), 0).is_err());
    }

    #[test]
    fn ties_break_to_smallest_action() {
        let q = QValues::from_rows(&[vec![1.0, 2.0, 2.0], vec![0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(best_action(&q, alpha(0.0), ScoreMode::Single, true), 1);
        assert_eq!(best_action(&q, alpha(0.0), ScoreMode::Single, false), 0);
    }

    #[test]
    fn log_scores_differ_by_log_ratio() {
        // Equal entries within each column: differences are (L+1)(ln qa - ln qb).
        let q = QValues::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let a = score_single(&q, 1, alpha(1.0)).unwrap();
        let b = score_single(&q, 0, alpha(1.0)).unwrap();
        assert!((a - b - 3.0 * (0.7f64.ln() - 0.3f64.ln())).abs() < 1e-12);
    }

    fn qmatrix() -> impl Strategy<Value = QValues> {
        (1usize..4, 1usize..6).prop_flat_map(|(n, a)| {
            proptest::collection::vec(0.0f64..100.0, n * a)
                .prop_map(move |v| QValues::from_vec(n, a, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn sum_mode_is_column_sum(q in qmatrix()) {
            for a in 0..q.actions() {
                let direct: f64 = (0..q.nodes()).map(|i| q.get(i, a).max(Q_FLOOR)).sum();
                prop_assert_eq!(score_single(&q, a, Alpha::SUM_THROUGHPUT).unwrap(), direct);
            }
        }

        #[test]
        fn sum_mode_argmax_is_scale_invariant(q in qmatrix(), c in 0.01f64..100.0) {
            // Lift the entries off the floor so scaling cannot change which ones clamp.
            let q = QValues::from_vec(q.nodes(), q.actions(), q.as_slice().iter().map(|v| v + 1.0).collect()).unwrap();
            let a = best_action(&q, Alpha::SUM_THROUGHPUT, ScoreMode::Single, true);
            let b = best_action(&q.scaled(c), Alpha::SUM_THROUGHPUT, ScoreMode::Single, true);
            let sa = score_single(&q, a, Alpha::SUM_THROUGHPUT).unwrap();
            let sb = score_single(&q, b, Alpha::SUM_THROUGHPUT).unwrap();
            // Equal up to rounding ties.
            prop_assert!(a == b || (sa - sb).abs() <= 1e-9 * sa.abs());
        }

        #[test]
        fn single_agent_multi_equals_single(q in qmatrix(), al in 0.0f64..60.0) {
            let al = Alpha::new(al).unwrap();
            for a in 0..q.actions() {
                prop_assert_eq!(score_multi(&q, a, al, 1).unwrap(), score_single(&q, a, al).unwrap());
            }
        }
    }

    #[test]
    fn utility_is_strictly_increasing() {
        // Up to ~1e3, the largest Q magnitude in practice; beyond that x^-49 underflows.
        let grid: Vec<f64> = (0..110).map(|k| Q_FLOOR * 1.2f64.powi(k)).collect();
        for al in [0.0, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            let al = alpha(al);
            for w in grid.windows(2) {
                let (lo, hi) = (alpha_utility(w[0], al).unwrap(), alpha_utility(w[1], al).unwrap());
                assert!(hi > lo, "alpha {:?} at {} -> {}", al, w[0], w[1]);
            }
        }
    }
}
