//! Link budget, key-rate and photon-event simulation for a LEO satellite
//! carrying one half of an entangled-photon QKD link.
//!
//! - [`orbit`]: pass geometry, slew rates and point-ahead.
//! - [`link`]: uplink attenuation and sky background.
//! - [`keyrate`]: coincidence, QBER and secure-key rate models.
//! - [`sim`]: event-level Monte Carlo, coincidence matching, clock recovery.
//! - [`data_budget`]: on-board storage arithmetic and the time-tag codec.
//! - [`scenario`]: configuration files, commands and CSV output.

// Negated comparisons are used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data_budget;
pub mod error;
pub mod keyrate;
pub mod link;
pub mod orbit;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
