//! Best-arm identification over bit-constrained agent-to-learner channels.
//!
//! Each of K agents owns one arm and reports a quantized empirical mean to a
//! central learner on an exponentially sparse schedule. The learner runs
//! batched successive elimination on the decoded means.

pub mod algorithms;
pub mod bandit;
pub mod confidence;
pub mod config;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod quantizer;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
