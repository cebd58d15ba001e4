//! Simulation core for a multi-cell downlink mmWave-NOMA network in which every
//! gNB runs a tabular Q-learning agent that jointly decides user-cell
//! association for cell-edge users and per-beam transmit power.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. Everything a
//! run needs (channel draws, clustering, SINR evaluation, HARQ, the agents)
//! is driven by seeded ChaCha streams, so a run is a pure function of its
//! configuration and seed. File formats and the CLI live in the `mmnoma`
//! companion crate.
//!
//! Module map:
//!
//! - [`phy`]: steering vectors, LoS channel vectors, matched beamforming weights.
//! - [`deployment`]: Poisson cluster placement, correlation k-means, edge users.
//! - [`noma`]: SIC decoding order and intra-beam power factors.
//! - [`interference`]: per-link SINR, intra-beam and inter-cell interference, sum rate.
//! - [`agent`]: Q-table, action coding, epsilon-greedy selection, UE priority lists.
//! - [`baseline`]: uniform power allocation with SINR-priority association.
//! - [`mac`]: Poisson traffic, queues, asynchronous HARQ.
//! - [`metrics`]: per-run accounting, eCCDF, cumulative reward.
//! - [`engine`]: the TTI loop tying the above together.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agent;
pub mod baseline;
pub mod config;
pub mod deployment;
pub mod engine;
pub mod error;
pub mod interference;
pub mod mac;
pub mod metrics;
pub mod noma;
pub mod phy;
pub mod rng;
pub mod units;

pub use config::SimConfig;
pub use engine::{Algorithm, RunOutput, RunSpec, Simulation};
pub use error::{Error, Result};
