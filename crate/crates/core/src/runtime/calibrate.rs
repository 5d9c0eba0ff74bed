use std::time::Instant;

use serde::Serialize;

use super::ops::OperatorPair;
use crate::error::{Error, Result};
use crate::schedule::StepIndex;
use crate::storage::{CheckpointPayload, Level2Backend};

/// Median per-operation times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub t_a: f64,
    pub t_b: f64,
    pub t_t: f64,
}

/// Times `trial_steps` forward steps (after one warm-up), as many backward
/// steps, and as many Level-2 stores, each followed by a verifying fetch.
pub fn calibrate<O: OperatorPair>(
    ops: &O,
    initial: &O::State,
    backend: &dyn Level2Backend,
    trial_steps: usize,
) -> Result<Calibration> {
    if trial_steps < 3 {
        return Err(Error::InvalidParams(format!("calibration needs at least 3 trial steps, got {trial_steps}")));
    }
    let n = ops.steps();

    let mut states = Vec::with_capacity(trial_steps);
    let mut state = initial.clone();
    let mut step = 0;
    // warm-up
    let _ = ops.forward_step(0, initial);
    let mut forward = Vec::with_capacity(trial_steps);
    for _ in 0..trial_steps {
        if step == n {
            step = 0;
            state = initial.clone();
        }
        states.push((step, state.clone()));
        let t0 = Instant::now();
        state = ops.forward_step(step, &state);
        forward.push(t0.elapsed().as_secs_f64());
        step += 1;
    }

    let seed = ops.adjoint_seed(&state);
    let mut backward = Vec::with_capacity(trial_steps);
    for (k, s) in &states {
        let t0 = Instant::now();
        let adjoint = ops.backward_step(*k, s, &seed);
        backward.push(t0.elapsed().as_secs_f64());
        drop(adjoint);
    }

    let mut transfer = Vec::with_capacity(trial_steps);
    for (i, (_, s)) in states.iter().enumerate() {
        let payload = CheckpointPayload::new(StepIndex(i), ops.encode_state(s));
        let t0 = Instant::now();
        let ticket = backend.begin_store(payload.clone())?;
        backend.wait(&ticket)?;
        transfer.push(t0.elapsed().as_secs_f64());
        let back = backend.wait(&backend.begin_fetch(StepIndex(i))?)?.into_payload();
        if back.as_ref() != Some(&payload) {
            return Err(Error::ChecksumMismatch {
                path: format!("level-2 key {i}").into(),
                reason: "calibration round trip changed the payload".into(),
            });
        }
    }

    Ok(Calibration { t_a: median(&mut forward), t_b: median(&mut backward), t_t: median(&mut transfer) })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}
