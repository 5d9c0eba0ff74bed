use std::collections::HashMap;

use serde::Serialize;

use super::{MultistagePlan, ScheduleAction, ScheduleParams, SlotId};

/// Outcome of replaying a schedule against an abstract tape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    /// First violation found, if any.
    pub error: Option<String>,
    /// Peak of live slots plus taped states beyond the tape's first.
    pub peak_occupancy: usize,
    pub peak_slots: usize,
    pub forward_executions: u64,
    /// Largest number of times any single step was executed forward.
    pub max_step_executions: u64,
    pub reversed: usize,
}

pub fn validate_schedule(actions: &[ScheduleAction], params: ScheduleParams) -> ValidityReport {
    validate_segment(actions, 0, params.n, params.s)
}

/// Replays `actions` reversing `[start, start + len)` with `s` slots and
/// the state `start` live at the beginning.
pub fn validate_segment(actions: &[ScheduleAction], start: usize, len: usize, s: usize) -> ValidityReport {
    Replay::new(actions, start, len, s).run()
}

/// Validates every inner schedule of a plan and sums their costs.
pub fn validate_plan(plan: &MultistagePlan) -> ValidityReport {
    let mut total = ValidityReport {
        valid: true,
        error: None,
        peak_occupancy: 0,
        peak_slots: 0,
        forward_executions: 0,
        max_step_executions: 0,
        reversed: 0,
    };
    let expected: Vec<usize> = (0..plan.n).step_by(plan.interval.max(1)).collect();
    let boundaries: Vec<usize> = plan.boundaries.iter().map(|b| b.0).collect();
    if !plan.fallback && boundaries != expected {
        total.valid = false;
        total.error = Some(format!("boundaries {boundaries:?} are not the multiples of {}", plan.interval));
    }
    let mut covered = 0;
    for inner in plan.intervals.iter().rev() {
        let report = validate_segment(&inner.actions, inner.start.0, inner.len, plan.s);
        if !report.valid && total.valid {
            total.valid = false;
            total.error = report.error.clone();
        }
        total.peak_occupancy = total.peak_occupancy.max(report.peak_occupancy);
        total.peak_slots = total.peak_slots.max(report.peak_slots);
        total.forward_executions += report.forward_executions;
        total.max_step_executions = total.max_step_executions.max(report.max_step_executions);
        total.reversed += report.reversed;
        covered += inner.len;
    }
    if covered != plan.n && total.valid {
        total.valid = false;
        total.error = Some(format!("intervals cover {covered} of {} steps", plan.n));
    }
    total
}

struct Replay<'a> {
    actions: &'a [ScheduleAction],
    start: usize,
    end: usize,
    s: usize,
    /// For each action index that saves, the index of the last load before
    /// the slot is overwritten.
    release_at: HashMap<usize, usize>,
}

impl<'a> Replay<'a> {
    fn new(actions: &'a [ScheduleAction], start: usize, len: usize, s: usize) -> Self {
        let mut release_at = HashMap::new();
        let mut open: HashMap<SlotId, usize> = HashMap::new();
        for (i, action) in actions.iter().enumerate() {
            match *action {
                ScheduleAction::SaveCheckpoint { slot, .. } => {
                    open.insert(slot, i);
                }
                ScheduleAction::LoadCheckpoint { slot } => {
                    if let Some(&save) = open.get(&slot) {
                        release_at.insert(save, i);
                    }
                }
                _ => {}
            }
        }
        Replay { actions, start, end: start + len, s, release_at }
    }

    fn run(&self) -> ValidityReport {
        let mut report = ValidityReport {
            valid: true,
            error: None,
            peak_occupancy: 0,
            peak_slots: 0,
            forward_executions: 0,
            max_step_executions: 0,
            reversed: 0,
        };
        if let Err(msg) = self.replay(&mut report) {
            report.valid = false;
            report.error = Some(msg);
        }
        report
    }

    fn replay(&self, report: &mut ValidityReport) -> Result<(), String> {
        let len = self.end - self.start;
        let mut current = Some(self.start);
        // slot -> (state, action index after which it is released)
        let mut slots: HashMap<SlotId, (usize, Option<usize>)> = HashMap::new();
        let mut tape: Vec<usize> = Vec::new();
        let mut executions = vec![0u64; len];
        let mut next_reverse = Some(self.end - 1);
        let mut done = false;

        for (i, action) in self.actions.iter().enumerate() {
            if done {
                return Err(format!("action {i} follows done"));
            }
            match *action {
                ScheduleAction::Advance { from, to } | ScheduleAction::TapeForward { from, to } => {
                    let taping = matches!(action, ScheduleAction::TapeForward { .. });
                    if current != Some(from.0) {
                        return Err(format!("action {i}: forward from {from} but live state is {current:?}"));
                    }
                    if to.0 <= from.0 || to.0 > self.end {
                        return Err(format!("action {i}: bad forward range {from}..{to}"));
                    }
                    if !tape.is_empty() {
                        return Err(format!("action {i}: forward while tape holds {tape:?}"));
                    }
                    for k in from.0..to.0 {
                        executions[k - self.start] += 1;
                    }
                    report.forward_executions += (to.0 - from.0) as u64;
                    if taping {
                        tape.extend(from.0..to.0);
                    }
                    current = Some(to.0);
                }
                ScheduleAction::SaveCheckpoint { step, slot } => {
                    if slot.0 >= self.s {
                        return Err(format!("action {i}: slot {} out of range", slot.0));
                    }
                    if current != Some(step.0) {
                        return Err(format!("action {i}: save of {step} but live state is {current:?}"));
                    }
                    slots.insert(slot, (step.0, self.release_at.get(&i).copied()));
                }
                ScheduleAction::LoadCheckpoint { slot } => {
                    let Some(&(step, release)) = slots.get(&slot) else {
                        return Err(format!("action {i}: load of unwritten slot {}", slot.0));
                    };
                    if !tape.is_empty() {
                        return Err(format!("action {i}: load while tape holds {tape:?}"));
                    }
                    current = Some(step);
                    if release == Some(i) {
                        slots.remove(&slot);
                    }
                }
                ScheduleAction::Reverse { step } => {
                    if next_reverse != Some(step.0) {
                        return Err(format!("action {i}: reverse {step}, expected {next_reverse:?}"));
                    }
                    if tape.last() != Some(&step.0) {
                        return Err(format!("action {i}: state {step} is not on the tape"));
                    }
                    tape.pop();
                    report.reversed += 1;
                    next_reverse = step.0.checked_sub(1).filter(|&k| k >= self.start);
                }
                ScheduleAction::Done => done = true,
            }
            let occupancy = slots.len() + tape.len().saturating_sub(1);
            report.peak_slots = report.peak_slots.max(slots.len());
            report.peak_occupancy = report.peak_occupancy.max(occupancy);
            if occupancy > self.s {
                return Err(format!("action {i}: occupancy {occupancy} exceeds {} slots", self.s));
            }
        }
        report.max_step_executions = executions.iter().copied().max().unwrap_or(0);
        if next_reverse.is_some() {
            return Err(format!("schedule ends before reversing state {}", next_reverse.unwrap()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::revolve_schedule;

    fn params(n: usize, s: usize) -> ScheduleParams {
        ScheduleParams::new(n, s).unwrap()
    }

    #[test]
    fn generated_schedules_are_valid() {
        for n in 1..=20 {
            for s in 1..=6 {
                let actions = revolve_schedule(params(n, s)).unwrap();
                let report = validate_schedule(&actions, params(n, s));
                assert!(report.valid, "n={n} s={s}: {:?}", report.error);
                assert!(report.peak_occupancy <= s);
                assert_eq!(report.reversed, n);
            }
        }
    }

    #[test]
    fn out_of_order_reverse_is_rejected() {
        let actions = [
            ScheduleAction::tape(0, 4),
            ScheduleAction::reverse(2),
            ScheduleAction::reverse(3),
            ScheduleAction::reverse(1),
            ScheduleAction::reverse(0),
            ScheduleAction::Done,
        ];
        let report = validate_schedule(&actions, params(4, 3));
        assert!(!report.valid);
        assert!(report.error.unwrap().contains("expected Some(3)"));
    }

    #[test]
    fn tape_beyond_budget_is_rejected() {
        let actions = [
            ScheduleAction::tape(0, 4),
            ScheduleAction::reverse(3),
            ScheduleAction::reverse(2),
            ScheduleAction::reverse(1),
            ScheduleAction::reverse(0),
            ScheduleAction::Done,
        ];
        assert!(validate_schedule(&actions, params(4, 3)).valid);
        let report = validate_schedule(&actions, params(4, 2));
        assert!(!report.valid);
        assert_eq!(report.peak_occupancy, 3);
    }

    #[test]
    fn unwritten_slot_and_missing_reverse() {
        let actions = [ScheduleAction::load(0), ScheduleAction::Done];
        assert!(!validate_schedule(&actions, params(2, 1)).valid);

        let actions = [ScheduleAction::tape(0, 2), ScheduleAction::reverse(1), ScheduleAction::Done];
        let report = validate_schedule(&actions, params(2, 1));
        assert!(!report.valid);
        assert_eq!(report.reversed, 1);
    }

    #[test]
    fn reverse_needs_taped_state() {
        let actions = [
            ScheduleAction::save(0, 0),
            ScheduleAction::advance(0, 1),
            ScheduleAction::reverse(1),
        ];
        assert!(!validate_schedule(&actions, params(2, 1)).valid);
    }

    #[test]
    fn slot_out_of_range() {
        let actions = [ScheduleAction::save(0, 1)];
        let report = validate_schedule(&actions, params(3, 1));
        assert!(report.error.unwrap().contains("out of range"));
    }
}
