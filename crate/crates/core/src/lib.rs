//! Simulation and evaluation toolkit for a robotic drumming prosthesis with
//! EMG-controlled grip stiffness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod csvio;
pub mod dataset;
pub mod emg;
pub mod error;
pub mod musician;
pub mod onset;
pub mod performer;
pub mod stick;
pub mod sync;

pub use error::{Error, Result};
