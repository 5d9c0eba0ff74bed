//! Executes an [`OperatorPair`] under full storage, Revolve, or
//! asynchronous multistage checkpointing.
//!
//! Compute runs on the caller's thread. For the multistage strategy the
//! Level-2 backend's single transfer worker stores every boundary state
//! during the forward sweep (never more than one store in flight) and
//! prefetches the next lower boundary while the current interval is being
//! reversed. Level-1 memory is metered in bytes: checkpoint slots, taped
//! states, and transfer snapshots or prefetch buffers; the live working
//! state is not counted.

mod calibrate;
mod multistage;
mod ops;
mod runner;
mod stats;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perf_model::interval_length;
use crate::schedule::{plan_multistage, revolve_schedule, ScheduleAction, ScheduleParams};
use crate::storage::Level2Backend;

pub use calibrate::{calibrate, Calibration};
pub use multistage::{run_backward_sweep, run_forward_sweep, ForwardSweep};
pub use ops::OperatorPair;
pub use runner::ExecContext;
pub use stats::ExecutionStats;

/// Environment variable that turns prefetching into synchronous fetches.
pub const DISABLE_PREFETCH_ENV: &str = "CKPT_DISABLE_PREFETCH";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalChoice {
    Explicit(usize),
    /// Measure `t_a` and `t_t` first, then use `ceil(t_t / t_a)`.
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    FullStorage,
    Revolve { s: usize },
    Multistage { s: usize, interval: IntervalChoice },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FullStorage => "full",
            Strategy::Revolve { .. } => "revolve",
            Strategy::Multistage { .. } => "multistage",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeOptions {
    pub prefetch: bool,
    /// Trial steps for `IntervalChoice::Calibrated`.
    pub calibration_steps: usize,
}

impl Default for RuntimeOptions {
    fn default() -> Self {
        RuntimeOptions { prefetch: true, calibration_steps: 5 }
    }
}

impl RuntimeOptions {
    /// Defaults, with prefetching disabled when `CKPT_DISABLE_PREFETCH=1`.
    pub fn from_env() -> Self {
        let disabled = std::env::var(DISABLE_PREFETCH_ENV).is_ok_and(|v| v.trim() == "1");
        RuntimeOptions { prefetch: !disabled, ..RuntimeOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Execution<A> {
    /// Adjoint of state 0.
    pub adjoint: A,
    pub stats: ExecutionStats,
    /// Interval actually used by a multistage run.
    pub interval: Option<usize>,
    pub calibration: Option<Calibration>,
    /// True when a multistage run degenerated to Revolve.
    pub fallback: bool,
}

/// Runs one forward and backward sweep, with options read from the environment.
pub fn execute<O: OperatorPair>(
    strategy: &Strategy,
    ops: &O,
    initial: &O::State,
    backend: Option<&dyn Level2Backend>,
) -> Result<Execution<O::Adjoint>> {
    execute_with(&RuntimeOptions::from_env(), strategy, ops, initial, backend)
}

pub fn execute_with<O: OperatorPair>(
    options: &RuntimeOptions,
    strategy: &Strategy,
    ops: &O,
    initial: &O::State,
    backend: Option<&dyn Level2Backend>,
) -> Result<Execution<O::Adjoint>> {
    let n = ops.steps();
    if n == 0 {
        return Err(Error::InvalidParams("operator pair has no steps".into()));
    }

    let mut calibration = None;
    let mut interval = None;
    let mut plan = None;
    if let Strategy::Multistage { s, interval: choice } = *strategy {
        let backend =
            backend.ok_or_else(|| Error::InvalidParams("multistage needs a level-2 backend".into()))?;
        let chosen = match choice {
            IntervalChoice::Explicit(i) => i,
            IntervalChoice::Calibrated => {
                let c = calibrate(ops, initial, backend, options.calibration_steps)?;
                calibration = Some(c);
                interval_length(c.t_t, c.t_a)
            }
        };
        interval = Some(chosen);
        plan = Some((plan_multistage(n, s, chosen)?, backend));
    }

    // calibration is not part of the measured sweep
    let started = Instant::now();
    let mut ctx = ExecContext::new();
    let mut fallback = false;
    match *strategy {
        Strategy::FullStorage => {
            let mut actions = vec![ScheduleAction::tape(0, n)];
            actions.extend((0..n).rev().map(ScheduleAction::reverse));
            runner::ScheduleRunner::new(ops, 0).run(&mut ctx, &actions, 0, initial.clone())?;
        }
        Strategy::Revolve { s } => {
            let actions = revolve_schedule(ScheduleParams::new(n, s)?)?;
            runner::ScheduleRunner::new(ops, s).run(&mut ctx, &actions, 0, initial.clone())?;
        }
        Strategy::Multistage { s, .. } => {
            let (plan, backend) = plan.expect("planned above");
            if plan.fallback {
                fallback = true;
                let inner = &plan.intervals[0];
                runner::ScheduleRunner::new(ops, s).run(&mut ctx, &inner.actions, 0, initial.clone())?;
            } else {
                let sweep = run_forward_sweep(&plan, ops, initial, backend, &mut ctx)?;
                run_backward_sweep(&plan, ops, backend, sweep, options, &mut ctx)?;
            }
        }
    }

    let (adjoint, mut stats) = ctx.finish();
    stats.wall_seconds = started.elapsed().as_secs_f64();
    let adjoint = adjoint.ok_or_else(|| Error::InvalidParams("schedule never reached the final state".into()))?;
    Ok(Execution { adjoint, stats, interval, calibration, fallback })
}
