//! Simulation of gradient clock synchronization on static networks.
//!
//! A run takes a [`RunConfig`] describing the topology, hardware drift,
//! message schedule and protocol parameters, and produces a [`Trace`] of
//! every node's logical clock. [`metrics`] turns a trace into skew figures
//! and bound verdicts, and [`oracle`] re-simulates it with a fixed-step
//! integrator for cross-checking.

pub mod cli;
pub mod clocks;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod protocol;
pub mod topology;
pub mod trace;

pub use engine::{run, RunConfig};
pub use error::{Error, Result};
pub use trace::Trace;
