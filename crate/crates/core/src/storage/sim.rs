use std::collections::HashMap;
use std::sync::Mutex;

use super::backend::{Device, TransferEngine};
use super::CheckpointPayload;
use crate::error::{Error, Result};
use crate::schedule::StepIndex;

/// In-memory Level 2 whose transfers take `latency + len / bandwidth`
/// seconds of real time, multiplied by `time_scale`. The delay is applied
/// by [`TransferEngine`] as a serial link: a transfer starts when it is
/// issued or when the previous one ends, whichever is later, independent
/// of when the worker thread gets to run.
#[derive(Debug)]
pub struct SimulatedDevice {
    bandwidth: f64,
    latency: f64,
    time_scale: f64,
    data: Mutex<HashMap<StepIndex, CheckpointPayload>>,
}

impl SimulatedDevice {
    /// `bandwidth` in bytes per second, `latency` in seconds.
    pub fn new(bandwidth: f64, latency: f64) -> Self {
        assert!(bandwidth > 0.0, "bandwidth must be positive");
        assert!(latency >= 0.0, "latency must be non-negative");
        SimulatedDevice { bandwidth, latency, time_scale: 1.0, data: Mutex::new(HashMap::new()) }
    }

    pub fn instant() -> Self {
        SimulatedDevice::new(f64::INFINITY, 0.0)
    }

    pub fn with_time_scale(mut self, scale: f64) -> Self {
        assert!(scale >= 0.0);
        self.time_scale = scale;
        self
    }

    /// Configured transfer time for `len` bytes, in seconds.
    pub fn transfer_seconds(&self, len: usize) -> f64 {
        (self.latency + len as f64 / self.bandwidth) * self.time_scale
    }

}

impl Device for SimulatedDevice {
    fn write(&self, payload: &CheckpointPayload) -> Result<()> {
        self.data.lock().unwrap_or_else(|e| e.into_inner()).insert(payload.step, payload.clone());
        Ok(())
    }

    fn read(&self, key: StepIndex) -> Result<CheckpointPayload> {
        let payload = self
            .data
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key)
            .cloned()
            .ok_or(Error::MissingKey(key.0))?;
        Ok(payload)
    }

    fn contains(&self, key: StepIndex) -> bool {
        self.data.lock().unwrap_or_else(|e| e.into_inner()).contains_key(&key)
    }

    fn link_seconds(&self, len: usize) -> Option<f64> {
        Some(self.transfer_seconds(len))
    }
}

pub fn simulated_backend(bandwidth: f64, latency: f64) -> TransferEngine<SimulatedDevice> {
    TransferEngine::new(SimulatedDevice::new(bandwidth, latency))
}
