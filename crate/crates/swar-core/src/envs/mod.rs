//! Native episodic environments behind a uniform interface, plus the
//! redundant-action wrapper that injects nuisance dimensions with a known
//! ground-truth mask.
//!
//! Both environments are pure-horizon: `done` signals the time limit, never
//! a terminal state, so TD targets keep bootstrapping at the cut.

mod maze;
mod pendulum;
mod redundant;

pub use maze::FourRewardMaze;
pub use pendulum::Pendulum;
pub use redundant::RedundantWrapper;

use rand::RngCore;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("action dimension mismatch: expected {expected}, got {got}")]
    ActionDim { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("episode over; reset before stepping")]
    EpisodeOver,
    #[error("unknown environment `{0}`; valid names: pendulum, maze")]
    UnknownEnv(String),
}

/// Static description of an environment's interface.
#[derive(Debug, Clone)]
pub struct EnvSpec {
    pub name: &'static str,
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub horizon: usize,
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// One replay tuple.
#[derive(Debug, Clone)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    /// True terminal only; pure-horizon cuts stay false so targets keep
    /// bootstrapping.
    pub done: bool,
}

pub trait Env {
    fn spec(&self) -> &EnvSpec;
    /// Starts a new episode and returns the initial observation.
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError>;
}

/// Builds a base environment by CLI name.
pub fn make_env(name: &str) -> Result<Box<dyn Env>, EnvError> {
    match name.to_ascii_lowercase().as_str() {
        "pendulum" => Ok(Box::new(Pendulum::new())),
        "maze" => Ok(Box::new(FourRewardMaze::new())),
        other => Err(EnvError::UnknownEnv(other.to_string())),
    }
}

/// One row of an episode trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub step: usize,
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub done: bool,
}

/// Dumps an episode as CSV with header `step,s0..,a0..,r,done`.
pub fn write_trace_csv<W: Write>(mut w: W, rows: &[TraceRow]) -> std::io::Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let mut header = vec!["step".to_string()];
    header.extend((0..rows[0].s.len()).map(|i| format!("s{i}")));
    header.extend((0..rows[0].a.len()).map(|i| format!("a{i}")));
    header.push("r".into());
    header.push("done".into());
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let mut fields = vec![row.step.to_string()];
        fields.extend(row.s.iter().map(|v| v.to_string()));
        fields.extend(row.a.iter().map(|v| v.to_string()));
        fields.push(row.r.to_string());
        fields.push((row.done as u8).to_string());
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}
