use std::collections::HashMap;

use super::ops::OperatorPair;
use super::stats::{ExecutionStats, L1Meter};
use crate::error::{Error, Result};
use crate::schedule::{ScheduleAction, SlotId, StepIndex};
use crate::storage::{CheckpointPayload, Level1Pool};

/// Mutable state shared by every phase of one execution.
pub struct ExecContext<A> {
    pub stats: ExecutionStats,
    pub(crate) meter: L1Meter,
    /// Adjoint of the lowest state reversed so far; starts as the seed.
    pub adjoint: Option<A>,
}

impl<A> ExecContext<A> {
    pub fn new() -> Self {
        ExecContext { stats: ExecutionStats::default(), meter: L1Meter::default(), adjoint: None }
    }

    /// Stats with the memory peak filled in.
    pub fn finish(mut self) -> (Option<A>, ExecutionStats) {
        self.stats.peak_l1_bytes = self.meter.peak();
        (self.adjoint, self.stats)
    }
}

impl<A> Default for ExecContext<A> {
    fn default() -> Self {
        Self::new()
    }
}

/// Executes schedule actions against real operators.
pub(crate) struct ScheduleRunner<'a, O: OperatorPair> {
    ops: &'a O,
    pool: Level1Pool,
}

impl<'a, O: OperatorPair> ScheduleRunner<'a, O> {
    pub fn new(ops: &'a O, slots: usize) -> Self {
        ScheduleRunner { ops, pool: Level1Pool::new(slots, ops.state_size()) }
    }

    fn forward(&self, ctx: &mut ExecContext<O::Adjoint>, step: usize, state: &O::State) -> O::State {
        let next = self.ops.forward_step(step, state);
        ctx.stats.forward_evals += 1;
        if step + 1 == self.ops.steps() && ctx.adjoint.is_none() {
            ctx.adjoint = Some(self.ops.adjoint_seed(&next));
        }
        next
    }

    /// Runs `actions` with state `start` live.
    pub fn run(
        &mut self,
        ctx: &mut ExecContext<O::Adjoint>,
        actions: &[ScheduleAction],
        start: usize,
        start_state: O::State,
    ) -> Result<()> {
        let size = self.ops.state_size();
        let release_after = last_reads(actions);
        let mut live_step = start;
        let mut live = start_state;
        let mut tape: Vec<O::State> = Vec::new();
        let mut tape_base = 0usize;

        let mismatch = |what: &str, expected: usize, got: usize| {
            Error::InvalidParams(format!("schedule expects {what} {expected}, runtime is at {got}"))
        };

        for (i, action) in actions.iter().enumerate() {
            match *action {
                ScheduleAction::Advance { from, to } => {
                    if from.0 != live_step {
                        return Err(mismatch("state", from.0, live_step));
                    }
                    for k in from.0..to.0 {
                        live = self.forward(ctx, k, &live);
                    }
                    live_step = to.0;
                }
                ScheduleAction::TapeForward { from, to } => {
                    if from.0 != live_step {
                        return Err(mismatch("state", from.0, live_step));
                    }
                    tape_base = from.0;
                    for k in from.0..to.0 {
                        let next = self.forward(ctx, k, &live);
                        tape.push(std::mem::replace(&mut live, next));
                        ctx.meter.charge(size);
                    }
                    live_step = to.0;
                }
                ScheduleAction::SaveCheckpoint { step, slot } => {
                    if step.0 != live_step {
                        return Err(mismatch("state", step.0, live_step));
                    }
                    let before = self.pool.occupancy();
                    let payload = CheckpointPayload::new(StepIndex(live_step), self.ops.encode_state(&live));
                    self.pool.save(slot, payload)?;
                    if self.pool.occupancy() > before {
                        ctx.meter.charge(size);
                    }
                }
                ScheduleAction::LoadCheckpoint { slot } => {
                    let payload = self.pool.load(slot)?;
                    live = self.ops.decode_state(&payload.bytes)?;
                    live_step = payload.step.0;
                    if release_after.get(&i) == Some(&slot) {
                        self.pool.release(slot)?;
                        ctx.meter.release(size);
                    }
                }
                ScheduleAction::Reverse { step } => {
                    let state = tape.pop().ok_or(Error::InvalidParams(format!("state {step} not taped")))?;
                    if tape_base + tape.len() != step.0 {
                        return Err(mismatch("taped state", step.0, tape_base + tape.len()));
                    }
                    let adjoint = ctx
                        .adjoint
                        .as_ref()
                        .ok_or(Error::InvalidParams("reverse before the final state was reached".into()))?;
                    ctx.adjoint = Some(self.ops.backward_step(step.0, &state, adjoint));
                    ctx.stats.backward_evals += 1;
                    ctx.meter.release(size);
                }
                ScheduleAction::Done => break,
            }
        }
        Ok(())
    }
}

/// Maps the index of each slot's final load to that slot.
fn last_reads(actions: &[ScheduleAction]) -> HashMap<usize, SlotId> {
    let mut last: HashMap<SlotId, usize> = HashMap::new();
    let mut out = HashMap::new();
    for (i, action) in actions.iter().enumerate() {
        match *action {
            ScheduleAction::SaveCheckpoint { slot, .. } => {
                if let Some(j) = last.remove(&slot) {
                    out.insert(j, slot);
                }
            }
            ScheduleAction::LoadCheckpoint { slot } => {
                last.insert(slot, i);
            }
            _ => {}
        }
    }
    out.extend(last.into_iter().map(|(slot, j)| (j, slot)));
    out
}
