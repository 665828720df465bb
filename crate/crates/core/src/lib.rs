//! Uplink simulator for cell-free massive MIMO deployed on a radio stripe.
//!
//! Access points are daisy-chained along a single front-haul cable. Each AP
//! refines the soft estimates it receives from its predecessor with a
//! normalized LMMSE combiner over an augmented observation (its own antennas
//! plus the incoming soft estimate), and forwards effective-channel estimates
//! and their error variances downstream. The last AP hands everything to the
//! CPU.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: geometry, pathloss, spatial correlation, pilot assignment
//! - [`channel`]: Rayleigh draws, pilot phase, MMSE estimation, payload
//! - [`stripe`]: the sequential N-LMMSE engine
//! - [`baselines`]: centralized LMMSE (L4) and distributed MR (L2)
//! - [`metrics`]: SINR/SE, empirical CDFs, front-haul accounting
//! - [`experiment`]: seeded Monte Carlo driver and sweeps
//! - [`output`]: CSV / JSON artifacts
//! - [`selftest`]: fast invariant checks on a tiny instance

pub mod baselines;
pub mod channel;
pub mod config;
mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod output;
pub mod scenario;
pub mod selftest;
pub mod stripe;

pub use config::{CorrelationModel, SimulationConfig, UePower};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use metrics::Scheme;
