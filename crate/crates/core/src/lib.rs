//! Finite-blocklength oblivious relaying and variable-length noisy lossy
//! source coding.
//!
//! The crate is organized bottom-up:
//!
//! * [`prob`]: finite distributions, kernels and information measures;
//! * [`ibrd`]: information bottleneck / noisy rate-distortion solvers and
//!   dispersions;
//! * [`poisson`]: seeded Poisson processes, proposal streams, Poisson
//!   functional representation and the Poisson-matching decoder;
//! * [`codec`]: prefix codes for selection indices and derandomization;
//! * [`schemes`]: executable one-shot and block coding schemes;
//! * [`bounds`]: computable achievability bounds and second-order curves;
//! * [`experiment`]: declarative Monte-Carlo sweeps with CSV/SVG reports;
//! * [`commands`]: bodies of the command-line subcommands.

pub mod bounds;
pub mod codec;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod ibrd;
pub mod poisson;
pub mod prob;
pub mod schemes;
mod serde_f64;

pub use error::{Error, Result};
