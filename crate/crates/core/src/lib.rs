//! Asynchronous multistage checkpointing for reverse-mode sweeps.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`schedule`] builds optimal single-level schedules and two-level plans.
//! * [`perf_model`] evaluates the closed-form run-time model.
//! * [`storage`] holds the Level-1 slot pool and the Level-2 backends.
//! * [`runtime`] executes an operator pair under a strategy.
//! * [`simulator`] replays strategies on a virtual clock.
//! * [`harness`] provides the LSTM benchmark used by the CLI.

pub mod error;
pub mod harness;
pub mod perf_model;
pub mod runtime;
pub mod schedule;
pub mod simulator;
pub mod storage;

pub use error::{Error, Result};
