//! Forward sweep that streams boundary states to Level 2, and the interval
//! by interval backward sweep that prefetches them again.

use super::ops::OperatorPair;
use super::runner::{ExecContext, ScheduleRunner};
use super::RuntimeOptions;
use crate::error::{Error, Result};
use crate::schedule::{MultistagePlan, StepIndex};
use crate::storage::{CheckpointPayload, Level2Backend, TransferTicket};

/// What the forward sweep leaves behind for the backward sweep.
pub struct ForwardSweep<S> {
    /// Keys stored to Level 2, ascending.
    pub keys: Vec<StepIndex>,
    /// The last boundary state, still resident as its transfer snapshot.
    pub(crate) last_boundary: Option<S>,
    pub(crate) last_store: Option<TransferTicket>,
}

pub fn run_forward_sweep<O: OperatorPair>(
    plan: &MultistagePlan,
    ops: &O,
    initial: &O::State,
    backend: &dyn Level2Backend,
    ctx: &mut ExecContext<O::Adjoint>,
) -> Result<ForwardSweep<O::State>> {
    let size = ops.state_size();
    let n = plan.n;
    let mut keys = Vec::with_capacity(plan.boundaries.len());
    let mut in_flight: Option<TransferTicket> = None;
    let mut snapshot: Option<O::State> = None;
    let mut boundaries = plan.boundaries.iter().peekable();
    let mut state = initial.clone();

    for k in 0..n {
        if boundaries.peek().map(|b| b.0) == Some(k) {
            boundaries.next();
            if let Some(ticket) = in_flight.take() {
                // at most one store in flight: block until the previous one lands
                let stats = &mut ctx.stats;
                stats.stalled(|| backend.wait(&ticket))?;
            }
            if snapshot.take().is_some() {
                ctx.meter.release(size);
            }
            let bytes = ops.encode_state(&state);
            let ticket = backend.begin_store(CheckpointPayload::new(StepIndex(k), bytes))?;
            ctx.stats.stores_issued += 1;
            ctx.meter.charge(size);
            snapshot = Some(state.clone());
            in_flight = Some(ticket);
            keys.push(StepIndex(k));
        }
        state = ops.forward_step(k, &state);
        ctx.stats.forward_evals += 1;
        ctx.stats.sweep_evals += 1;
    }
    ctx.adjoint = Some(ops.adjoint_seed(&state));

    Ok(ForwardSweep { keys, last_boundary: snapshot, last_store: in_flight })
}

pub fn run_backward_sweep<O: OperatorPair>(
    plan: &MultistagePlan,
    ops: &O,
    backend: &dyn Level2Backend,
    sweep: ForwardSweep<O::State>,
    options: &RuntimeOptions,
    ctx: &mut ExecContext<O::Adjoint>,
) -> Result<()> {
    let size = ops.state_size();
    let mut runner = ScheduleRunner::new(ops, plan.s);
    let mut resident = sweep.last_boundary;
    let mut pending: Option<TransferTicket> = None;
    let last_store = sweep.last_store;

    for (j, interval) in plan.intervals.iter().enumerate().rev() {
        let start_state = match resident.take() {
            Some(state) => state,
            None => {
                let ticket = match pending.take() {
                    Some(ticket) => ticket,
                    None => {
                        let ticket = backend.begin_fetch(interval.start)?;
                        ctx.stats.prefetches_issued += 1;
                        ctx.meter.charge(size);
                        ticket
                    }
                };
                let fetched = ctx.stats.stalled(|| backend.wait(&ticket))?;
                let payload = fetched.into_payload().ok_or(Error::MissingKey(interval.start.0))?;
                if payload.step != interval.start {
                    return Err(Error::MissingKey(interval.start.0));
                }
                ops.decode_state(&payload.bytes)?
            }
        };
        // the boundary state becomes the live working state
        ctx.meter.release(size);

        if options.prefetch && j > 0 {
            // a store still in flight for this key is served first by the worker
            let below = plan.intervals[j - 1].start;
            pending = Some(backend.begin_fetch(below)?);
            ctx.stats.prefetches_issued += 1;
            ctx.meter.charge(size);
        }

        runner.run(ctx, &interval.actions, interval.start.0, start_state)?;
    }
    if let Some(ticket) = last_store {
        backend.wait(&ticket)?;
    }
    Ok(())
}
