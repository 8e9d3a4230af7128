//! `swar` binary: synthetic selection benchmarks and redundant-action RL
//! experiment runs. Usage errors exit with code 2; runtime failures with 1.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use swar_cli::config::{resolve_rl, resolve_synth, RlFlags, SynthFlags};
use swar_cli::rl::run_rl;
use swar_cli::synth_run::run_synth;
use swar_cli::HarnessError;

#[derive(Parser)]
#[command(
    name = "swar",
    about = "Selection benchmarks and redundant-action RL experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the curriculum selector on a synthetic dataset across seeds.
    Synth(SynthArgs),
    /// Train RL agents on an environment across seeds.
    Rl(RlArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Dataset name: syn1..syn6.
    #[arg(long)]
    dataset: Option<String>,
    /// Feature dimension (at least 11).
    #[arg(long)]
    dim: Option<usize>,
    /// Training iterations per seed.
    #[arg(long)]
    steps: Option<u64>,
    /// Seed list: `3`, `0,1,2`, or inclusive `0..4`.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Final sparsity weight of the curriculum.
    #[arg(long)]
    lambda_end: Option<f64>,
    /// Initial selection-proportion target of the curriculum.
    #[arg(long)]
    pr_start: Option<f64>,
    /// JSON config file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RlArgs {
    /// Environment name: pendulum or maze.
    #[arg(long)]
    env: Option<String>,
    /// Comma list of agents: oracle, td3, td-swar, dyn-swar.
    #[arg(long)]
    agent: Option<String>,
    /// Redundant action dimensions appended by the wrapper.
    #[arg(long)]
    redundant: Option<usize>,
    /// Environment steps per seed.
    #[arg(long)]
    steps: Option<u64>,
    /// Seed list: `3`, `0,1,2`, or inclusive `0..4`.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Final sparsity weight for both selector agents.
    #[arg(long)]
    lambda_end: Option<f64>,
    /// Initial selection-proportion target.
    #[arg(long)]
    pr_start: Option<f64>,
    /// Steps between evaluation points.
    #[arg(long)]
    eval_interval: Option<u64>,
    /// JSON config file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run() -> Result<(), HarnessError> {
    match Cli::parse().cmd {
        Cmd::Synth(a) => {
            let cfg = resolve_synth(SynthFlags {
                dataset: a.dataset,
                dim: a.dim,
                steps: a.steps,
                seeds: a.seeds,
                out: a.out,
                lambda_end: a.lambda_end,
                pr_start: a.pr_start,
                config: a.config,
            })?;
            let report = run_synth(&cfg)?;
            let last = report.iterations.last();
            println!(
                "synth {} dim={} seeds={}: final TPR {:.1} FDR {:.1} -> {}",
                report.dataset,
                report.dim,
                report.seeds.len(),
                last.map_or(f64::NAN, |s| s.tpr_mean),
                last.map_or(f64::NAN, |s| s.fdr_mean),
                cfg.out.display()
            );
        }
        Cmd::Rl(a) => {
            let cfg = resolve_rl(RlFlags {
                env: a.env,
                agent: a.agent,
                redundant: a.redundant,
                steps: a.steps,
                seeds: a.seeds,
                out: a.out,
                lambda_end: a.lambda_end,
                pr_start: a.pr_start,
                eval_interval: a.eval_interval,
                config: a.config,
            })?;
            let summary = run_rl(&cfg)?;
            for agent in &summary.agents {
                println!(
                    "rl {} +{} {}: final return {:.2} (std {:.2}), AUC {:.3e}",
                    summary.env,
                    summary.redundant,
                    agent.agent,
                    agent.final_return_mean,
                    agent.final_return_std,
                    agent.auc_mean
                );
            }
            println!("-> {}", cfg.out.display());
        }
    }
    Ok(())
}

fn main() {
    std::process::exit(match run() {
        Ok(()) => 0,
        Err(HarnessError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    });
}
