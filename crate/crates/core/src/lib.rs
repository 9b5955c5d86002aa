//! Carrier-sense deep-reinforcement-learning multiple access (CS-DLMA).
//!
//! A minislot-resolution simulator of heterogeneous MAC protocols sharing one
//! channel, a learning node that trains a variable-duration multi-dimensional
//! deep Q-network towards an α-fairness objective, and a closed-form
//! model-aware benchmark to validate it against.

pub mod agent;
pub mod error;
pub mod fairness;
pub mod harness;
pub mod netsim;
pub mod neuralnet;
pub mod oracle;

pub use error::{Error, Result};
