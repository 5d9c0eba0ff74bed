//! LSTM benchmark: a framework-free LSTM as an [`OperatorPair`](crate::runtime::OperatorPair)
//! and a driver that times one forward-backward iteration.

mod bench;
mod lstm;

pub use bench::{bench, gradient_checksum, BackendConfig, BenchConfig, BenchReport};
pub use lstm::{LstmCell, LstmState};
