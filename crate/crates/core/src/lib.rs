//! Stochastic simulator of TLS-limited transmon energy relaxation under
//! electric-field TLS control, with the measurement, protocol and
//! statistics stack needed to characterize it.
//!
//! Module map:
//!
//! - [`bath`]: tunneling-model TLS defects and their spectral diffusion.
//! - [`decay`]: instantaneous and sweep-averaged qubit decay rates.
//! - [`measurement`]: excitation-delay-measure T1 experiments and the
//!   exponential fit.
//! - [`protocols`]: interleaved campaigns, voltage optimization, champion
//!   hunts, AC-parameter and temperature sweeps.
//! - [`analysis`]: harmonic means, effective qubit numbers, quality factors
//!   and model fits over record collections.
//! - [`config`] and [`io`]: run configuration, record files and tables.
//!
//! Internal units: time in µs (wall clock in s), energies in GHz, rates in
//! µs⁻¹ or rad/µs, temperature in mK, bias in V.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bath;
pub mod config;
pub mod decay;
mod error;
pub mod exec;
pub mod io;
pub mod measurement;
pub mod protocols;
pub mod rng;
pub mod units;
pub mod world;

pub use error::{Error, Result};
pub use exec::Exec;
pub use world::World;
