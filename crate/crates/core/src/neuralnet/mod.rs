//! A small neural-network engine for the Q-network: an LSTM memory layer or
//! plain feedforward layers, ReLU hidden units, a linear output head, exact
//! gradients by backpropagation through time, and RMSProp.

pub mod checkpoint;
mod linalg;
mod network;
mod rmsprop;

pub use network::{Architecture, ForwardCache, Layout, NetworkShape, QNetwork, StateBatch, TensorSpec};
pub use rmsprop::{RmsProp, RmsPropConfig};
