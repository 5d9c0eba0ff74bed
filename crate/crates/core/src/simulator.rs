//! Virtual-clock replay of the three strategies.
//!
//! Every forward step costs `t_a`, every backward step `t_b`, and every
//! Level-2 store or fetch occupies the single transfer lane for `t_t`.
//! Compute stalls only when it needs a transfer that has not finished.
//!
//! Two cost accountings are offered for the multistage strategy.
//! [`Accounting::Model`] credits the streaming sweep with the first forward
//! execution of every step, so only re-executions inside an interval are
//! charged again; this is the accounting under which the closed-form
//! multistage time holds. [`Accounting::Executed`] charges every forward
//! execution the runtime actually performs, including the rerun of each
//! interval from its restored boundary.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::perf_model::PerfParams;
use crate::runtime::{IntervalChoice, Strategy};
use crate::schedule::{plan_multistage, revolve_schedule, ScheduleAction, ScheduleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ForwardCompute,
    BackwardCompute,
    Store,
    Fetch,
    Stall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    Compute,
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineEvent {
    pub kind: EventKind,
    /// Step range `[from, to)`.
    pub from: usize,
    pub to: usize,
    pub start: f64,
    pub end: f64,
    pub lane: Lane,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timeline {
    pub strategy: String,
    pub total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<usize>,
    pub events: Vec<TimelineEvent>,
}

impl Timeline {
    pub fn lane(&self, lane: Lane) -> impl Iterator<Item = &TimelineEvent> {
        self.events.iter().filter(move |e| e.lane == lane)
    }

    pub fn stall_seconds(&self) -> f64 {
        self.events.iter().filter(|e| e.kind == EventKind::Stall).map(|e| e.end - e.start).sum()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Accounting {
    #[default]
    Model,
    Executed,
}

/// Simulates with [`Accounting::Model`]. The strategy's `s` is used; `p.s`
/// is ignored.
pub fn simulate(strategy: &Strategy, p: &PerfParams) -> Result<Timeline> {
    simulate_with(strategy, p, Accounting::Model)
}

pub fn simulate_with(strategy: &Strategy, p: &PerfParams, accounting: Accounting) -> Result<Timeline> {
    p.check()?;
    let n = p.n;
    let mut clock = Clock::new(p);
    let mut interval = None;

    match *strategy {
        Strategy::FullStorage => {
            for k in 0..n {
                clock.forward(k);
            }
            for k in (0..n).rev() {
                clock.backward(k);
            }
        }
        Strategy::Revolve { s } => {
            let actions = revolve_schedule(ScheduleParams::new(n, s)?)?;
            clock.replay(&actions, None);
        }
        Strategy::Multistage { s, interval: choice } => {
            let i = match choice {
                IntervalChoice::Explicit(i) => i,
                IntervalChoice::Calibrated => p.interval(),
            };
            interval = Some(i);
            let plan = plan_multistage(n, s, i)?;
            if plan.fallback {
                clock.replay(&plan.intervals[0].actions, None);
            } else {
                // forward sweep streaming boundaries
                let mut boundaries = plan.boundaries.iter().map(|b| b.0).peekable();
                let mut last_store_end = f64::NEG_INFINITY;
                for k in 0..n {
                    if boundaries.peek() == Some(&k) {
                        boundaries.next();
                        clock.stall_until(last_store_end);
                        last_store_end = clock.transfer(EventKind::Store, k, clock.now);
                    }
                    clock.forward(k);
                }

                let mut fetch_end: Option<f64> = None;
                for (j, inner) in plan.intervals.iter().enumerate().rev() {
                    if let Some(end) = fetch_end.take() {
                        clock.stall_until(end);
                    }
                    if j > 0 {
                        let below = plan.intervals[j - 1].start.0;
                        fetch_end = Some(clock.transfer(EventKind::Fetch, below, clock.now));
                    }
                    let credit = match accounting {
                        Accounting::Model => Some(vec![1u32; inner.len]),
                        Accounting::Executed => None,
                    };
                    clock.replay_from(&inner.actions, inner.start.0, credit);
                }
            }
        }
    }

    if clock.events.iter().any(|e| !(e.end >= e.start)) {
        return Err(Error::InvalidParams("simulation produced a negative-length event".into()));
    }
    Ok(Timeline { strategy: strategy.name().to_string(), total: clock.now, interval, events: clock.events })
}

struct Clock<'a> {
    p: &'a PerfParams,
    now: f64,
    lane_free: f64,
    events: Vec<TimelineEvent>,
}

impl<'a> Clock<'a> {
    fn new(p: &'a PerfParams) -> Self {
        Clock { p, now: 0.0, lane_free: 0.0, events: Vec::new() }
    }

    fn compute(&mut self, kind: EventKind, step: usize, duration: f64) {
        let start = self.now;
        self.now += duration;
        self.events.push(TimelineEvent { kind, from: step, to: step + 1, start, end: self.now, lane: Lane::Compute });
    }

    fn forward(&mut self, step: usize) {
        self.compute(EventKind::ForwardCompute, step, self.p.t_a);
    }

    fn backward(&mut self, step: usize) {
        self.compute(EventKind::BackwardCompute, step, self.p.t_b);
    }

    fn stall_until(&mut self, time: f64) {
        if time > self.now {
            let start = self.now;
            self.now = time;
            self.events.push(TimelineEvent {
                kind: EventKind::Stall,
                from: 0,
                to: 0,
                start,
                end: time,
                lane: Lane::Compute,
            });
        }
    }

    /// Queues a transfer issued at `issued`; returns its completion time.
    fn transfer(&mut self, kind: EventKind, step: usize, issued: f64) -> f64 {
        let start = issued.max(self.lane_free);
        let end = start + self.p.t_t;
        self.lane_free = end;
        self.events.push(TimelineEvent { kind, from: step, to: step + 1, start, end, lane: Lane::Transfer });
        end
    }

    fn replay(&mut self, actions: &[ScheduleAction], credit: Option<Vec<u32>>) {
        self.replay_from(actions, 0, credit);
    }

    /// Plays a schedule. `credit[k]` forward executions of step
    /// `base + k` are free.
    fn replay_from(&mut self, actions: &[ScheduleAction], base: usize, mut credit: Option<Vec<u32>>) {
        for action in actions {
            match *action {
                ScheduleAction::Advance { from, to } | ScheduleAction::TapeForward { from, to } => {
                    for k in from.0..to.0 {
                        let free = credit.as_mut().is_some_and(|c| {
                            let slot = &mut c[k - base];
                            let had = *slot > 0;
                            *slot = slot.saturating_sub(1);
                            had
                        });
                        if !free {
                            self.forward(k);
                        }
                    }
                }
                ScheduleAction::Reverse { step } => self.backward(step.0),
                _ => {}
            }
        }
    }
}
