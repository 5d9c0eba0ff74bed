//! Closed-form run times for full storage, Revolve and asynchronous
//! multistage checkpointing, and the recompute-factor curves derived from
//! them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{recompute_factor, shared_table};

/// Model inputs. Times are seconds per step (`t_a` forward, `t_b`
/// backward) and per state transfer to Level 2 (`t_t`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfParams {
    pub n: usize,
    pub s: usize,
    pub t_a: f64,
    pub t_b: f64,
    pub t_t: f64,
}

impl PerfParams {
    pub fn new(n: usize, s: usize, t_a: f64, t_b: f64, t_t: f64) -> Result<Self> {
        let p = PerfParams { n, s, t_a, t_b, t_t };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        for (name, t) in [("t_a", self.t_a), ("t_b", self.t_b), ("t_t", self.t_t)] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// Interval the model would pick for these timings.
    pub fn interval(&self) -> usize {
        interval_length(self.t_t, self.t_a)
    }
}

/// Forward and backward sweep with unlimited memory.
pub fn t_infinity(p: &PerfParams) -> f64 {
    p.n as f64 * p.t_a + p.n as f64 * p.t_b
}

pub fn t_revolve(p: &PerfParams) -> Result<f64> {
    let r = recompute_factor(p.n, p.s)?;
    Ok(p.n as f64 * r.as_f64() * p.t_a + p.n as f64 * p.t_b)
}

/// `ceil(t_t / t_a)`, at least 1.
pub fn interval_length(t_t: f64, t_a: f64) -> usize {
    let ratio = t_t / t_a;
    if !(ratio.is_finite() && ratio > 1.0) {
        return 1;
    }
    ratio.ceil() as usize
}

pub fn t_async(p: &PerfParams) -> Result<f64> {
    t_async_with_interval(p, p.interval())
}

/// Model time for an explicitly chosen interval.
pub fn t_async_with_interval(p: &PerfParams, interval: usize) -> Result<f64> {
    if interval >= p.n {
        return t_revolve(p);
    }
    let r = recompute_factor(interval, p.s)?;
    Ok(p.n as f64 * r.as_f64() * p.t_a + p.n as f64 * p.t_b)
}

/// One row of the recompute-factor curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub n: usize,
    pub revolve: f64,
    pub asynchronous: Vec<f64>,
    /// Model times `t_infinity, t_revolve, t_async(I)...`, when timings were given.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curves {
    pub s: usize,
    pub intervals: Vec<usize>,
    pub rows: Vec<CurveRow>,
}

impl Curves {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,revolve");
        for i in &self.intervals {
            let _ = write!(out, ",async_I{i}");
        }
        if self.rows.first().is_some_and(|r| !r.times.is_empty()) {
            out.push_str(",t_inf,t_revolve");
            for i in &self.intervals {
                let _ = write!(out, ",t_async_I{i}");
            }
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{}", row.n, sig6(row.revolve));
            for v in row.asynchronous.iter().chain(&row.times) {
                let _ = write!(out, ",{}", sig6(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Revolve and multistage recompute factors for `n = 1, 2, 4, ...` up to
/// `n_max`.
pub fn emit_curves(s: usize, intervals: &[usize], n_max: usize) -> Result<Curves> {
    if n_max == 0 {
        return Err(Error::InvalidParams("n_max must be at least 1".into()));
    }
    if intervals.contains(&0) {
        return Err(Error::InvalidParams("intervals must be positive".into()));
    }
    // one table build for the whole sweep
    shared_table(n_max, s);
    let mut rows = Vec::new();
    let mut n = 1usize;
    while n <= n_max {
        let revolve = recompute_factor(n, s)?.as_f64();
        let asynchronous = intervals
            .iter()
            .map(|&i| recompute_factor(i.min(n), s).map(|r| r.as_f64()))
            .collect::<Result<Vec<_>>>()?;
        rows.push(CurveRow { n, revolve, asynchronous, times: Vec::new() });
        n = match n.checked_mul(2) {
            Some(next) => next,
            None => break,
        };
    }
    Ok(Curves { s, intervals: intervals.to_vec(), rows })
}

/// [`emit_curves`] plus model times for every row.
pub fn emit_curves_with_times(
    s: usize,
    intervals: &[usize],
    n_max: usize,
    t_a: f64,
    t_b: f64,
    t_t: f64,
) -> Result<Curves> {
    let mut curves = emit_curves(s, intervals, n_max)?;
    for row in &mut curves.rows {
        let p = PerfParams::new(row.n, s, t_a, t_b, t_t)?;
        row.times.push(t_infinity(&p));
        row.times.push(t_revolve(&p)?);
        for &i in intervals {
            row.times.push(t_async_with_interval(&p, i)?);
        }
    }
    Ok(curves)
}

/// Formats with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
