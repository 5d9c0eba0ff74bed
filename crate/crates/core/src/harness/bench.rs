use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::lstm::{LstmCell, LstmState};
use crate::error::{Error, Result};
use crate::runtime::{execute_with, Execution, RuntimeOptions, Strategy};
use crate::storage::{file_backend, simulated_backend, Level2Backend};

#[derive(Debug, Clone, PartialEq)]
pub enum BackendConfig {
    /// Files in a fresh subdirectory of `scratch`, or of the system temp dir.
    File { scratch: Option<PathBuf> },
    /// In-memory store; `bandwidth` in bytes per second, `latency` in seconds.
    Sim { bandwidth: f64, latency: f64 },
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub strategy: Strategy,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub runs: usize,
    pub backend: BackendConfig,
    pub options: RuntimeOptions,
}

impl BenchConfig {
    pub fn new(strategy: Strategy, n: usize, d: usize, backend: BackendConfig) -> Self {
        BenchConfig { strategy, n, d, seed: 0, runs: 5, backend, options: RuntimeOptions::from_env() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub d: usize,
    pub strategy: Strategy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<usize>,
    pub runs: usize,
    /// Fastest of `runs` runs.
    pub wall_seconds: f64,
    pub forward_evals: u64,
    pub sweep_evals: u64,
    /// `forward_evals / n`.
    pub recompute_factor_measured: f64,
    pub peak_l1_bytes: u64,
    /// Stall time of the fastest run.
    pub stall_seconds: f64,
    /// SHA-256 of the encoded step-0 adjoint, hex.
    pub gradient_checksum: String,
}

pub fn gradient_checksum(adjoint: &LstmState) -> String {
    Sha256::digest(adjoint.to_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one forward-backward iteration `config.runs` times and reports the fastest.
pub fn bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.runs == 0 {
        return Err(Error::InvalidParams("runs must be positive".into()));
    }
    if config.n == 0 {
        return Err(Error::InvalidParams("n must be positive".into()));
    }
    let cell = LstmCell::random(config.d, config.n, config.seed)?;
    let initial = cell.random_state(config.seed.wrapping_add(1));

    let mut best: Option<Execution<LstmState>> = None;
    let mut checksum = None;
    for _ in 0..config.runs {
        // a fresh backend per run so no run sees another's files
        let scratch;
        let backend: Option<Box<dyn Level2Backend>> = match (&config.strategy, &config.backend) {
            (Strategy::Multistage { .. }, BackendConfig::File { scratch: dir }) => {
                let mut builder = tempfile::Builder::new();
                builder.prefix("ckpt-bench-");
                scratch = match dir {
                    Some(dir) => {
                        std::fs::create_dir_all(dir)?;
                        builder.tempdir_in(dir)?
                    }
                    None => builder.tempdir()?,
                };
                Some(Box::new(file_backend(scratch.path())?))
            }
            (Strategy::Multistage { .. }, BackendConfig::Sim { bandwidth, latency }) => {
                if !(*bandwidth > 0.0) || !(*latency >= 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "simulated backend needs bandwidth > 0 and latency >= 0, got {bandwidth} and {latency}"
                    )));
                }
                Some(Box::new(simulated_backend(*bandwidth, *latency)))
            }
            _ => None,
        };
        let run = execute_with(&config.options, &config.strategy, &cell, &initial, backend.as_deref())?;
        drop(backend);

        let sum = gradient_checksum(&run.adjoint);
        match &checksum {
            None => checksum = Some(sum),
            Some(prev) if *prev != sum => {
                return Err(Error::InvalidParams("gradient differs between repeated runs".into()));
            }
            Some(_) => {}
        }
        if best.as_ref().map_or(true, |b| run.stats.wall_seconds < b.stats.wall_seconds) {
            best = Some(run);
        }
    }

    let best = best.expect("at least one run");
    let stats = &best.stats;
    Ok(BenchReport {
        n: config.n,
        d: config.d,
        strategy: config.strategy,
        interval: best.interval,
        runs: config.runs,
        wall_seconds: stats.wall_seconds,
        forward_evals: stats.forward_evals,
        sweep_evals: stats.sweep_evals,
        recompute_factor_measured: stats.forward_evals as f64 / config.n as f64,
        peak_l1_bytes: stats.peak_l1_bytes,
        stall_seconds: stats.stall_seconds,
        gradient_checksum: checksum.expect("at least one run"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::IntervalChoice;

    fn config(strategy: Strategy, n: usize) -> BenchConfig {
        BenchConfig {
            strategy,
            n,
            d: 4,
            seed: 11,
            runs: 1,
            backend: BackendConfig::Sim { bandwidth: f64::INFINITY, latency: 0.0 },
            options: RuntimeOptions::default(),
        }
    }

    #[test]
    fn full_storage_counts() {
        let report = bench(&config(Strategy::FullStorage, 8)).unwrap();
        assert_eq!(report.forward_evals, 8);
        assert_eq!(report.recompute_factor_measured, 1.0);
        assert_eq!(report.peak_l1_bytes, 8 * 64);
        assert_eq!(report.gradient_checksum.len(), 64);
    }

    #[test]
    fn strategies_agree() {
        let full = bench(&config(Strategy::FullStorage, 20)).unwrap();
        let revolve = bench(&config(Strategy::Revolve { s: 2 }, 20)).unwrap();
        let multi =
            bench(&config(Strategy::Multistage { s: 2, interval: IntervalChoice::Explicit(5) }, 20)).unwrap();
        assert_eq!(full.gradient_checksum, revolve.gradient_checksum);
        assert_eq!(full.gradient_checksum, multi.gradient_checksum);
        assert_eq!(multi.interval, Some(5));
    }

    #[test]
    fn file_backend_in_scratch_dir() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(Strategy::Multistage { s: 2, interval: IntervalChoice::Explicit(4) }, 12);
        cfg.backend = BackendConfig::File { scratch: Some(dir.path().to_path_buf()) };
        cfg.runs = 2;
        let report = bench(&cfg).unwrap();
        assert_eq!(report.sweep_evals, 12);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
