//! Closed-time-path description of a moving cavity mirror.
//!
//! A mirror of mass `m` bounds a one-dimensional cavity of length `d`. Tracing
//! out the field yields noise kernels N and dissipation kernels M that act on
//! the mirror displacement through memory integrals. This crate builds those
//! kernels from the cavity mode basis, integrates the resulting
//! integro-differential equation of motion, and compares the mechanical energy
//! dissipated by a trajectory against the energy radiated into photon pairs.
//!
//! Units are natural (c = ħ = k_B = 1).

// `!(a > b)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod casimir;
pub mod cavity;
pub mod config;
pub mod dynamics;
pub mod energetics;
pub mod error;
pub mod fixed;
pub mod io;
#[cfg(feature = "mpfr")]
pub mod precise;
pub mod quadrature;
pub mod summation;
pub mod thermal;
pub mod trajectory;
pub mod kernels;

pub use cavity::{CavitySpec, CouplingMatrix};
pub use config::RunConfig;
pub use dynamics::{EvolveOptions, MemoryMethod, MirrorSpec, Potential};
pub use energetics::{BalanceOptions, EnergyReport, FrequencyMode, Precision};
pub use error::{Error, Result};
pub use kernels::MirrorKernels;
pub use thermal::ThermalSpectrum;
pub use trajectory::{Spectrum, TimeGrid, Trajectory};
