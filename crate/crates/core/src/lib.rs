//! Exact simulation of the repeat-until-success (RUS) distributed
//! controlled-Z gate between two single-photon sources.
//!
//! - [`quantum`]: dense state vectors, unitaries and partial projections.
//! - [`protocol`]: time-bin encoding, mutually unbiased bases, the partial
//!   Bell measurement and its correction gates.
//! - [`optics`]: two-photon Fock-space scattering through the beam-splitter
//!   and Bell-multiport realizations of that measurement.
//! - [`engine`]: Monte Carlo execution of the repeat-until-success loop with
//!   finite detector efficiency.
//! - [`stats`]: the small amount of statistics the checks need.

pub mod engine;
pub mod optics;
pub mod protocol;
pub mod quantum;
pub mod stats;
