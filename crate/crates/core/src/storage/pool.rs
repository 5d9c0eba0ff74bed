use super::CheckpointPayload;
use crate::error::{Error, Result};
use crate::schedule::SlotId;

/// Fixed set of Level-1 checkpoint slots, confined to the compute thread.
#[derive(Debug)]
pub struct Level1Pool {
    slot_size: usize,
    slots: Vec<Option<CheckpointPayload>>,
    occupancy: usize,
    peak_occupancy: usize,
}

impl Level1Pool {
    pub fn new(capacity: usize, slot_size: usize) -> Self {
        Level1Pool { slot_size, slots: vec![None; capacity], occupancy: 0, peak_occupancy: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_size(&self) -> usize {
        self.slot_size
    }

    pub fn occupancy(&self) -> usize {
        self.occupancy
    }

    pub fn peak_occupancy(&self) -> usize {
        self.peak_occupancy
    }

    /// Bytes currently held.
    pub fn bytes(&self) -> usize {
        self.occupancy * self.slot_size
    }

    pub fn save(&mut self, slot: SlotId, payload: CheckpointPayload) -> Result<()> {
        payload.expect_len(self.slot_size)?;
        let capacity = self.capacity();
        let entry = self
            .slots
            .get_mut(slot.0)
            .ok_or(Error::SlotOutOfRange { slot: slot.0, capacity })?;
        if entry.is_none() {
            self.occupancy += 1;
            self.peak_occupancy = self.peak_occupancy.max(self.occupancy);
        }
        *entry = Some(payload);
        Ok(())
    }

    pub fn load(&self, slot: SlotId) -> Result<&CheckpointPayload> {
        self.slots
            .get(slot.0)
            .ok_or(Error::SlotOutOfRange { slot: slot.0, capacity: self.capacity() })?
            .as_ref()
            .ok_or(Error::EmptySlot(slot.0))
    }

    /// Frees a slot after its last read.
    pub fn release(&mut self, slot: SlotId) -> Result<()> {
        let capacity = self.capacity();
        let entry = self
            .slots
            .get_mut(slot.0)
            .ok_or(Error::SlotOutOfRange { slot: slot.0, capacity })?;
        if entry.take().is_some() {
            self.occupancy -= 1;
        }
        Ok(())
    }
}
