//! Simulation and auditing toolkit for collective-spin quantum batteries.
//!
//! A battery of `N` spin-1/2 cells with `H_B = J_z` is charged by a kicked
//! top. The crate computes the actual charging power next to the two usual
//! upper bounds (variance product and energy-space Fisher information), the
//! full-space spectral statistics of the charger, N-sweeps with power-law
//! fits, and closed-form scenarios in which the bounds mislead.

pub mod counterexamples;
pub mod error;
pub mod floquet;
pub mod observables;
pub mod oracle;
pub mod scaling;
pub mod spectral;
pub mod spin;
pub mod table;

pub use error::{Error, Result};
