use serde::{Deserialize, Serialize};

/// Dispatches the learning network's transmissions to its member nodes in
/// cyclic order. Sensing does not advance the cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gateway {
    members: usize,
    next: usize,
}

impl Gateway {
    /// A network of `members ≥ 1` nodes; member ids are `1..=members`.
    pub fn new(members: usize) -> Self {
        Gateway {
            members: members.max(1),
            next: 0,
        }
    }

    pub fn members(&self) -> usize {
        self.members
    }

    /// Member id that carries `action`, or `None` when the network senses.
    pub fn dispatch(&mut self, action: usize) -> Option<usize> {
        if action == 0 {
            return None;
        }
        let id = self.next + 1;
        self.next = (self.next + 1) % self.members;
        Some(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin() {
        let mut g = Gateway::new(2);
        let ids: Vec<_> = [3, 10, 1, 7].iter().map(|a| g.dispatch(*a)).collect();
        assert_eq!(ids, vec![Some(1), Some(2), Some(1), Some(2)]);
    }

    #[test]
    fn sensing_does_not_advance() {
        let mut g = Gateway::new(3);
        assert_eq!(g.dispatch(4), Some(1));
        assert_eq!(g.dispatch(0), None);
        assert_eq!(g.dispatch(0), None);
        assert_eq!(g.dispatch(4), Some(2));
    }
}
