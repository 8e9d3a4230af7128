//! Experiment harness behind the `swar` binary: resolved run
//! configurations, the synthetic-selection and RL drivers, and the static
//! SVG plot writer. Everything here is also a library so test suites can
//! drive experiments in-process.

pub mod config;
pub mod rl;
pub mod svg;
pub mod synth_run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid invocation; the binary maps this to exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Env(#[from] swar_core::envs::EnvError),
    #[error(transparent)]
    Agent(#[from] swar_core::agents::AgentError),
    #[error(transparent)]
    Synth(#[from] swar_core::synth::SynthError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("plot: {0}")]
    Plot(String),
}

/// Worker-thread cap for seed parallelism: `SWAR_THREADS` if set and
/// positive, otherwise the available parallelism, never more than `jobs`.
pub fn worker_cap(jobs: usize) -> usize {
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    std::env::var("SWAR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(avail)
        .min(jobs.max(1))
}
