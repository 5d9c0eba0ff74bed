//! Single-level checkpointing schedules and two-level interval plans.
//!
//! Slot convention: `s` counts checkpoint slots in addition to the live
//! working state. A `TapeForward { from, to }` keeps the states
//! `from..to` for immediate reversal; the first of them is the state that
//! was live when the tape started, the remaining `to - from - 1` states
//! draw on the same budget as the slots. With this convention a sweep of
//! `n` steps needs no recomputation exactly when `s >= n - 1`.
//!
//! Schedules are built from the dynamic program
//!
//! ```text
//! cost(n, s) = n                                              if s >= n - 1
//! cost(n, s) = min_{1<=k<n} k + cost(n - k, s - 1) + cost(k, s)  otherwise
//! ```
//!
//! where `k` is the position of the first checkpoint after the start
//! state. Ties go to the smallest `k`.

mod plan;
mod validate;

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use plan::{plan_multistage, InnerKind, IntervalSchedule, MultistagePlan};
pub use validate::{validate_plan, validate_schedule, validate_segment, ValidityReport};

/// Index of a program state: state `k` is the state after `k` forward steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepIndex(pub usize);

impl StepIndex {
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for StepIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A Level-1 checkpoint slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotId(pub usize);

impl SlotId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub n: usize,
    pub s: usize,
}

impl ScheduleParams {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        let params = ScheduleParams { n, s };
        params.check()?;
        Ok(params)
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if self.n > 1 && self.s == 0 {
            return Err(Error::InfeasibleSchedule { n: self.n, s: self.s });
        }
        Ok(())
    }
}

/// One step of a checkpointing schedule. Serializes as
/// `{"op": "advance", "from": 0, "to": 3}` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ScheduleAction {
    /// Recompute forward without keeping intermediates.
    Advance { from: StepIndex, to: StepIndex },
    #[serde(rename = "save")]
    SaveCheckpoint { step: StepIndex, slot: SlotId },
    #[serde(rename = "load")]
    LoadCheckpoint { slot: SlotId },
    /// Run forward keeping states `from..to` for reversal.
    #[serde(rename = "tape")]
    TapeForward { from: StepIndex, to: StepIndex },
    Reverse { step: StepIndex },
    Done,
}

impl ScheduleAction {
    pub fn advance(from: usize, to: usize) -> Self {
        ScheduleAction::Advance { from: StepIndex(from), to: StepIndex(to) }
    }

    pub fn save(step: usize, slot: usize) -> Self {
        ScheduleAction::SaveCheckpoint { step: StepIndex(step), slot: SlotId(slot) }
    }

    pub fn load(slot: usize) -> Self {
        ScheduleAction::LoadCheckpoint { slot: SlotId(slot) }
    }

    pub fn tape(from: usize, to: usize) -> Self {
        ScheduleAction::TapeForward { from: StepIndex(from), to: StepIndex(to) }
    }

    pub fn reverse(step: usize) -> Self {
        ScheduleAction::Reverse { step: StepIndex(step) }
    }

    /// Forward steps this action executes.
    pub fn forward_steps(&self) -> usize {
        match *self {
            ScheduleAction::Advance { from, to } | ScheduleAction::TapeForward { from, to } => {
                to.0.saturating_sub(from.0)
            }
            _ => 0,
        }
    }

    /// The same action with every step index moved by `offset`.
    pub fn shifted(self, offset: usize) -> Self {
        let sh = |k: StepIndex| StepIndex(k.0 + offset);
        match self {
            ScheduleAction::Advance { from, to } => ScheduleAction::Advance { from: sh(from), to: sh(to) },
            ScheduleAction::SaveCheckpoint { step, slot } => {
                ScheduleAction::SaveCheckpoint { step: sh(step), slot }
            }
            ScheduleAction::TapeForward { from, to } => {
                ScheduleAction::TapeForward { from: sh(from), to: sh(to) }
            }
            ScheduleAction::Reverse { step } => ScheduleAction::Reverse { step: sh(step) },
            other => other,
        }
    }
}

/// Exact ratio of forward-step executions to steps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RecomputeFactor {
    pub forward_evals: u64,
    pub steps: u64,
}

impl RecomputeFactor {
    pub fn new(forward_evals: u64, steps: u64) -> Self {
        assert!(steps > 0, "recompute factor over zero steps");
        RecomputeFactor { forward_evals, steps }
    }

    pub fn as_f64(&self) -> f64 {
        self.forward_evals as f64 / self.steps as f64
    }

    pub fn is_one(&self) -> bool {
        self.forward_evals == self.steps
    }
}

impl PartialEq for RecomputeFactor {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for RecomputeFactor {}

impl PartialOrd for RecomputeFactor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RecomputeFactor {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.forward_evals as u128 * other.steps as u128;
        let rhs = other.forward_evals as u128 * self.steps as u128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for RecomputeFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.forward_evals, self.steps)
    }
}

const INFEASIBLE: u64 = u64::MAX;

/// Minimal forward executions and first-checkpoint positions for every
/// `n <= max_n`, `s <= max_s`.
#[derive(Debug, Clone)]
pub struct CostTable {
    max_n: usize,
    max_s: usize,
    cost: Vec<u64>,
    split: Vec<u32>,
}

impl CostTable {
    pub fn build(max_n: usize, max_s: usize) -> Self {
        let max_n = max_n.max(1);
        let width = max_n + 1;
        let mut cost = vec![INFEASIBLE; width * (max_s + 1)];
        let mut split = vec![0u32; width * (max_s + 1)];
        let at = |n: usize, s: usize| s * width + n;

        cost[at(1, 0)] = 1;
        for s in 1..=max_s {
            for n in 1..=max_n {
                if s + 1 >= n {
                    cost[at(n, s)] = n as u64;
                    continue;
                }
                let mut best = INFEASIBLE;
                let mut best_k = 0;
                for k in 1..n {
                    let right = cost[at(n - k, s - 1)];
                    if right == INFEASIBLE {
                        continue;
                    }
                    let total = k as u64 + right + cost[at(k, s)];
                    if total < best {
                        best = total;
                        best_k = k;
                    }
                }
                cost[at(n, s)] = best;
                split[at(n, s)] = best_k as u32;
            }
        }
        CostTable { max_n, max_s, cost, split }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn max_s(&self) -> usize {
        self.max_s
    }

    fn index(&self, n: usize, s: usize) -> usize {
        assert!(n >= 1 && n <= self.max_n, "n={n} outside table (max {})", self.max_n);
        let s = s.min(n.saturating_sub(1)).min(self.max_s);
        s * (self.max_n + 1) + n
    }

    fn covers(&self, n: usize, s: usize) -> bool {
        n <= self.max_n && s.min(n.saturating_sub(1)) <= self.max_s
    }

    /// Minimal forward-step executions, `None` when infeasible.
    pub fn cost(&self, n: usize, s: usize) -> Option<u64> {
        let c = self.cost[self.index(n, s)];
        (c != INFEASIBLE).then_some(c)
    }

    /// Smallest optimal first-checkpoint offset; 0 when the span is taped.
    pub fn split(&self, n: usize, s: usize) -> usize {
        self.split[self.index(n, s)] as usize
    }
}

static SHARED_TABLE: Mutex<Option<Arc<CostTable>>> = Mutex::new(None);

/// A process-wide table covering at least `(n, s)`.
pub fn shared_table(n: usize, s: usize) -> Arc<CostTable> {
    let s_needed = s.min(n.saturating_sub(1));
    let mut guard = SHARED_TABLE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(table) = guard.as_ref() {
        if table.covers(n, s) {
            return Arc::clone(table);
        }
    }
    let (old_n, old_s) = guard.as_ref().map_or((1, 0), |t| (t.max_n, t.max_s));
    let table = Arc::new(CostTable::build(n.max(old_n), s_needed.max(old_s)));
    *guard = Some(Arc::clone(&table));
    table
}

/// Minimal number of forward-step executions needed to reverse `n` steps.
pub fn min_forward_evals(n: usize, s: usize) -> Result<u64> {
    ScheduleParams::new(n, s)?;
    shared_table(n, s).cost(n, s).ok_or(Error::InfeasibleSchedule { n, s })
}

pub fn recompute_factor(n: usize, s: usize) -> Result<RecomputeFactor> {
    Ok(RecomputeFactor::new(min_forward_evals(n, s)?, n as u64))
}

/// Optimal single-level schedule over `[0, n)`.
pub fn revolve_schedule(params: ScheduleParams) -> Result<Vec<ScheduleAction>> {
    params.check()?;
    let table = shared_table(params.n, params.s);
    let mut out = Vec::new();
    let mut emitter = Emitter {
        table: &table,
        free: (0..params.s).rev().map(SlotId).collect(),
        out: &mut out,
    };
    emitter.emit(0, params.n, params.s, None);
    out.push(ScheduleAction::Done);
    Ok(out)
}

struct Emitter<'a> {
    table: &'a CostTable,
    free: Vec<SlotId>,
    out: &'a mut Vec<ScheduleAction>,
}

impl Emitter<'_> {
    /// Reverse `[start, start + len)` with the state `start` live. `held` is
    /// the slot already holding `start`; it counts toward `budget`.
    fn emit(&mut self, start: usize, len: usize, budget: usize, held: Option<SlotId>) {
        if budget + 1 >= len {
            if let Some(slot) = held {
                // last read happened with the preceding load
                self.free.push(slot);
            }
            self.out.push(ScheduleAction::tape(start, start + len));
            self.out
                .extend((start..start + len).rev().map(ScheduleAction::reverse));
            return;
        }

        let slot = match held {
            Some(slot) => slot,
            None => {
                let slot = self.free.pop().expect("slot budget exhausted");
                self.out.push(ScheduleAction::save(start, slot.0));
                slot
            }
        };
        let k = self.table.split(len, budget);
        debug_assert!(k >= 1 && k < len);
        self.out.push(ScheduleAction::advance(start, start + k));
        self.emit(start + k, len - k, budget - 1, None);
        self.out.push(ScheduleAction::load(slot.0));
        self.emit(start, k, budget, Some(slot));
    }
}

/// Forward-step executions of a schedule, without validating it.
pub fn count_forward_evals(actions: &[ScheduleAction]) -> u64 {
    actions.iter().map(|a| a.forward_steps() as u64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_needs_no_checkpoint() {
        let actions = revolve_schedule(ScheduleParams::new(1, 0).unwrap()).unwrap();
        assert_eq!(
            actions,
            vec![ScheduleAction::tape(0, 1), ScheduleAction::reverse(0), ScheduleAction::Done]
        );
        assert!(recompute_factor(1, 0).unwrap().is_one());
    }

    #[test]
    fn enough_slots_tapes_everything() {
        let actions = revolve_schedule(ScheduleParams::new(4, 3).unwrap()).unwrap();
        assert_eq!(count_forward_evals(&actions), 4);
        assert_eq!(actions[0], ScheduleAction::tape(0, 4));
        assert!(recompute_factor(64, 100).unwrap().is_one());
    }

    #[test]
    fn zero_slots_is_infeasible() {
        assert!(matches!(
            ScheduleParams::new(2, 0),
            Err(Error::InfeasibleSchedule { n: 2, s: 0 })
        ));
        assert!(recompute_factor(5, 0).is_err());
        assert!(ScheduleParams::new(0, 3).is_err());
    }

    #[test]
    fn one_slot_cost() {
        // tape the last two steps, rerun from the start for everything else
        for n in 2..30u64 {
            assert_eq!(min_forward_evals(n as usize, 1).unwrap(), n * (n + 1) / 2 - 1);
        }
    }

    #[test]
    fn ratio_ordering_is_exact() {
        let a = RecomputeFactor::new(19, 10);
        let b = RecomputeFactor::new(38, 20);
        assert_eq!(a, b);
        assert!(RecomputeFactor::new(3, 2) < RecomputeFactor::new(19, 10));
        assert_eq!(a.to_string(), "19/10");
    }

    #[test]
    fn shifted_moves_indices_only() {
        let a = ScheduleAction::save(2, 1).shifted(10);
        assert_eq!(a, ScheduleAction::save(12, 1));
        assert_eq!(ScheduleAction::load(3).shifted(5), ScheduleAction::load(3));
    }

    #[test]
    fn json_dump_format() {
        let actions = revolve_schedule(ScheduleParams::new(3, 1).unwrap()).unwrap();
        let json = serde_json::to_string(&actions).unwrap();
        assert!(json.starts_with(r#"[{"op":"save","step":0,"slot":0},{"op":"advance","from":0,"to":"#));
        assert!(json.ends_with(r#"{"op":"done"}]"#));
        let back: Vec<ScheduleAction> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, actions);
    }
}
