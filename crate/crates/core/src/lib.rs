//! Simulation and analysis of two-step photoionization loading of barium
//! ions into a linear Paul trap.
//!
//! - [`constants`]: physical constants, isotope registry, transition data
//! - [`beam`]: effusive oven beam and its Doppler-shift distribution
//! - [`excitation`]: steady-state 791 nm response and the UV ionization step
//! - [`loading`]: loading-rate spectra, power scans, Poisson trials, sources
//! - [`trap`]: Mathieu parameters, secular frequencies, ion-chain equilibria
//! - [`fitting`]: Levenberg–Marquardt engine and line-shape models

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod constants;
pub mod excitation;
pub mod fitting;
pub mod loading;
pub mod quadrature;
pub mod rng;
pub mod trap;
