use std::time::Instant;

use serde::Serialize;

/// Counters collected during one execution.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExecutionStats {
    /// Every forward-step execution, including the Level-2 streaming sweep.
    pub forward_evals: u64,
    pub backward_evals: u64,
    /// Forward steps spent in the streaming sweep that feeds Level 2.
    pub sweep_evals: u64,
    pub stores_issued: u64,
    pub prefetches_issued: u64,
    /// Compute-thread time blocked on transfers.
    pub stall_seconds: f64,
    /// Peak of checkpoint slot, tape and transfer staging bytes held in Level 1.
    pub peak_l1_bytes: u64,
    pub wall_seconds: f64,
}

impl ExecutionStats {
    /// Forward executions after the streaming sweep, per step.
    pub fn schedule_recompute_factor(&self, n: usize) -> f64 {
        (self.forward_evals - self.sweep_evals) as f64 / n as f64
    }

    pub(crate) fn stalled<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stall_seconds += start.elapsed().as_secs_f64();
        out
    }
}

/// Byte counter for Level-1 checkpoint memory.
#[derive(Debug, Default)]
pub(crate) struct L1Meter {
    current: u64,
    peak: u64,
}

impl L1Meter {
    pub fn charge(&mut self, bytes: usize) {
        self.current += bytes as u64;
        self.peak = self.peak.max(self.current);
    }

    pub fn release(&mut self, bytes: usize) {
        self.current = self.current.checked_sub(bytes as u64).expect("L1 meter underflow");
    }

    pub fn peak(&self) -> u64 {
        self.peak
    }
}
