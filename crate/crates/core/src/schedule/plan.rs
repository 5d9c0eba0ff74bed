use serde::Serialize;

use super::{count_forward_evals, revolve_schedule, ScheduleAction, ScheduleParams, StepIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerKind {
    /// The whole interval fits Level 1: tape it and reverse.
    Tape,
    Revolve,
}

/// Schedule for one interval `[start, start + len)`, in absolute step indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalSchedule {
    pub start: StepIndex,
    pub len: usize,
    pub kind: InnerKind,
    pub actions: Vec<ScheduleAction>,
}

impl IntervalSchedule {
    pub fn end(&self) -> usize {
        self.start.0 + self.len
    }

    pub fn forward_evals(&self) -> u64 {
        count_forward_evals(&self.actions)
    }
}

/// Two-level plan: every `interval`-th state goes to Level 2 during the
/// forward sweep, and each interval is reversed from its boundary state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultistagePlan {
    pub n: usize,
    pub s: usize,
    pub interval: usize,
    /// States stored to Level 2; empty when the plan falls back to Revolve.
    pub boundaries: Vec<StepIndex>,
    /// Inner schedules in ascending step order.
    pub intervals: Vec<IntervalSchedule>,
    pub fallback: bool,
}

impl MultistagePlan {
    /// Forward executions of the inner schedules. The streaming sweep that
    /// produces the boundary states adds `n` more unless the plan falls back.
    pub fn inner_forward_evals(&self) -> u64 {
        self.intervals.iter().map(IntervalSchedule::forward_evals).sum()
    }

    pub fn interval_containing(&self, step: usize) -> Option<&IntervalSchedule> {
        self.intervals.iter().find(|iv| iv.start.0 <= step && step < iv.end())
    }
}

pub fn plan_multistage(n: usize, s: usize, interval: usize) -> Result<MultistagePlan> {
    if n == 0 || interval == 0 {
        return Err(Error::InvalidParams("n and interval must be positive".into()));
    }

    if interval >= n {
        let actions = revolve_schedule(ScheduleParams::new(n, s)?)?;
        return Ok(MultistagePlan {
            n,
            s,
            interval,
            boundaries: Vec::new(),
            intervals: vec![IntervalSchedule { start: StepIndex(0), len: n, kind: InnerKind::Revolve, actions }],
            fallback: true,
        });
    }

    let mut boundaries = Vec::new();
    let mut intervals = Vec::new();
    for start in (0..n).step_by(interval) {
        let len = interval.min(n - start);
        boundaries.push(StepIndex(start));
        let (kind, actions) = if len <= s + 1 {
            let mut actions = vec![ScheduleAction::tape(start, start + len)];
            actions.extend((start..start + len).rev().map(ScheduleAction::reverse));
            actions.push(ScheduleAction::Done);
            (InnerKind::Tape, actions)
        } else {
            let local = revolve_schedule(ScheduleParams::new(len, s)?)?;
            (InnerKind::Revolve, local.into_iter().map(|a| a.shifted(start)).collect())
        };
        intervals.push(IntervalSchedule { start: StepIndex(start), len, kind, actions });
    }

    Ok(MultistagePlan { n, s, interval, boundaries, intervals, fallback: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{min_forward_evals, validate_plan};

    #[test]
    fn tape_intervals_when_memory_suffices() {
        let plan = plan_multistage(12, 100, 4).unwrap();
        assert!(!plan.fallback);
        assert_eq!(plan.boundaries, vec![StepIndex(0), StepIndex(4), StepIndex(8)]);
        assert!(plan.intervals.iter().all(|iv| iv.kind == InnerKind::Tape));
        assert_eq!(plan.inner_forward_evals(), 12);
    }

    #[test]
    fn falls_back_when_interval_exceeds_n() {
        let plan = plan_multistage(5, 2, 8).unwrap();
        assert!(plan.fallback);
        assert!(plan.boundaries.is_empty());
        let revolve = revolve_schedule(ScheduleParams::new(5, 2).unwrap()).unwrap();
        assert_eq!(plan.intervals.len(), 1);
        assert_eq!(plan.intervals[0].actions, revolve);
    }

    #[test]
    fn remainder_interval_is_shorter() {
        let plan = plan_multistage(10, 2, 4).unwrap();
        assert_eq!(plan.boundaries, vec![StepIndex(0), StepIndex(4), StepIndex(8)]);
        let lens: Vec<usize> = plan.intervals.iter().map(|iv| iv.len).collect();
        assert_eq!(lens, vec![4, 4, 2]);
        assert_eq!(plan.intervals[0].kind, InnerKind::Revolve);
        assert_eq!(plan.intervals[2].kind, InnerKind::Tape);
        let report = validate_plan(&plan);
        assert!(report.valid, "{:?}", report.error);
        assert_eq!(report.reversed, 10);
        let expected = 2 * min_forward_evals(4, 2).unwrap() + min_forward_evals(2, 2).unwrap();
        assert_eq!(report.forward_executions, expected);
    }

    #[test]
    fn infeasible_inner_schedule_propagates() {
        assert!(matches!(plan_multistage(10, 0, 4), Err(Error::InfeasibleSchedule { .. })));
        // unit intervals never need a slot
        assert!(plan_multistage(10, 0, 1).is_ok());
    }

    #[test]
    fn zero_arguments_rejected() {
        assert!(plan_multistage(0, 1, 1).is_err());
        assert!(plan_multistage(4, 1, 0).is_err());
    }
}
