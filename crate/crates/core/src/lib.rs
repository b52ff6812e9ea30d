//! Deterministic-chaos semi-classical model of spin-1/2 Stern-Gerlach statistics.
//!
//! A magnetic moment with a two-well torque law is carried along a straight
//! path through the field of a current loop. The time-varying field drives a
//! damped nonlinear oscillation whose end state (up near 0, down near pi) is
//! sensitive to the initial angle. Averaging many perturbed runs and smoothing
//! over neighbouring angles gives a down-probability curve comparable to
//! `sin^2(theta/2)`.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod magnetics;
pub mod output;
pub mod pipeline;

pub use error::{Error, Result};
