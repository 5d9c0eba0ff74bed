use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use msckpt::harness::{bench, BackendConfig, BenchConfig};
use msckpt::perf_model::{emit_curves, emit_curves_with_times, PerfParams};
use msckpt::runtime::{IntervalChoice, RuntimeOptions, Strategy};
use msckpt::schedule::{plan_multistage, revolve_schedule, ScheduleParams};
use msckpt::simulator::{simulate_with, Accounting};

/// Multistage checkpointing: schedules, model curves, simulated timelines and LSTM benchmarks.
#[derive(Parser)]
#[command(name = "ckpt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a Revolve schedule, or a multistage plan with --interval, as JSON.
    Schedule {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        interval: Option<usize>,
    },
    /// Print recompute-factor curves as CSV, with model times when all of --ta, --tb, --tt are given.
    Model {
        #[arg(long)]
        s: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        intervals: Vec<usize>,
        #[arg(long)]
        n_max: usize,
        #[arg(long, requires_all = ["tb", "tt"])]
        ta: Option<f64>,
        #[arg(long, requires_all = ["ta", "tt"])]
        tb: Option<f64>,
        #[arg(long, requires_all = ["ta", "tb"])]
        tt: Option<f64>,
    },
    /// Print a simulated timeline as JSON.
    Simulate {
        #[arg(long, value_enum)]
        strategy: StrategyKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        ta: f64,
        #[arg(long)]
        tb: f64,
        #[arg(long)]
        tt: f64,
        /// Multistage interval; defaults to ceil(tt / ta).
        #[arg(long)]
        interval: Option<usize>,
        #[arg(long, value_enum, default_value_t = AccountingArg::Model)]
        accounting: AccountingArg,
    },
    /// Run the LSTM benchmark and print a report as JSON.
    Bench {
        #[arg(long, value_enum)]
        strategy: StrategyKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        s: Option<usize>,
        /// Multistage interval; calibrated when omitted.
        #[arg(long)]
        interval: Option<usize>,
        #[arg(long, value_enum, default_value_t = BackendKind::Sim)]
        backend: BackendKind,
        #[arg(long, env = "CKPT_SCRATCH_DIR")]
        scratch_dir: Option<PathBuf>,
        /// Simulated link bandwidth in bytes per second.
        #[arg(long, default_value_t = 1e9)]
        sim_bandwidth: f64,
        /// Simulated per-transfer latency in seconds.
        #[arg(long, default_value_t = 5e-4)]
        sim_latency: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyKind {
    #[value(alias = "full-storage", alias = "fullstorage")]
    Full,
    Revolve,
    Multistage,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    File,
    Sim,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccountingArg {
    Model,
    Executed,
}

fn strategy(kind: StrategyKind, s: Option<usize>, interval: IntervalChoice) -> Strategy {
    let need_s = || {
        s.unwrap_or_else(|| {
            Cli::command().error(ErrorKind::MissingRequiredArgument, "--s is required for this strategy").exit()
        })
    };
    match kind {
        StrategyKind::Full => Strategy::FullStorage,
        StrategyKind::Revolve => Strategy::Revolve { s: need_s() },
        StrategyKind::Multistage => Strategy::Multistage { s: need_s(), interval },
    }
}

fn choice(interval: Option<usize>) -> IntervalChoice {
    interval.map_or(IntervalChoice::Calibrated, IntervalChoice::Explicit)
}

fn run(command: Command) -> Result<String, Box<dyn std::error::Error>> {
    Ok(match command {
        Command::Schedule { n, s, interval } => match interval {
            None => serde_json::to_string(&revolve_schedule(ScheduleParams::new(n, s)?)?)?,
            Some(i) => serde_json::to_string(&plan_multistage(n, s, i)?)?,
        },
        Command::Model { s, intervals, n_max, ta, tb, tt } => {
            let curves = match (ta, tb, tt) {
                (Some(ta), Some(tb), Some(tt)) => emit_curves_with_times(s, &intervals, n_max, ta, tb, tt)?,
                _ => emit_curves(s, &intervals, n_max)?,
            };
            return Ok(curves.to_csv());
        }
        Command::Simulate { strategy: kind, n, s, ta, tb, tt, interval, accounting } => {
            let strategy = strategy(kind, s, choice(interval));
            let params = PerfParams::new(n, s.unwrap_or(0), ta, tb, tt)?;
            let accounting = match accounting {
                AccountingArg::Model => Accounting::Model,
                AccountingArg::Executed => Accounting::Executed,
            };
            serde_json::to_string(&simulate_with(&strategy, &params, accounting)?)?
        }
        Command::Bench {
            strategy: kind,
            n,
            d,
            s,
            interval,
            backend,
            scratch_dir,
            sim_bandwidth,
            sim_latency,
            seed,
            runs,
        } => {
            let backend = match backend {
                BackendKind::File => BackendConfig::File { scratch: scratch_dir },
                BackendKind::Sim => BackendConfig::Sim { bandwidth: sim_bandwidth, latency: sim_latency },
            };
            let config = BenchConfig {
                strategy: strategy(kind, s, choice(interval)),
                n,
                d,
                seed,
                runs,
                backend,
                options: RuntimeOptions::from_env(),
            };
            serde_json::to_string(&bench(&config)?)?
        }
    } + "\n")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ckpt: error: {e}");
            ExitCode::FAILURE
        }
    }
}
