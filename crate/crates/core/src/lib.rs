//! Detecting the agents most willing to game a payout model.
//!
//! The crate simulates agents that strategically inflate a reported decision
//! rate, ranks agents by estimated willingness to game using causal effect
//! estimators and non-causal baselines, and scores rankings against ground
//! truth.

pub mod baselines;
pub mod domain;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod optimize;
pub mod ranking;
pub mod rng;
pub mod strategic;
pub mod synthgen;

pub use domain::{
    split_dataset, AgentId, AgentSpec, Dataset, HiddenTruth, ObservationRecord, Ranking,
};
pub use error::{Error, Result};
pub use rng::Rng;
