//! RL experiment driver: seeded training runs with periodic noise-free
//! evaluation, per-seed curve CSVs (flushed at every evaluation point so
//! interrupted runs keep valid prefixes), a cross-seed `summary.json`, and
//! a `curves.svg` learning-curve plot.
//!
//! Determinism: every random draw comes from a stream derived via
//! `rng_tree(seed, [agent, purpose, ...])`, so construction order and seed
//! scheduling across worker threads cannot change any run's draws.

use crate::config::{AgentKind, RlRunConfig};
use crate::svg::{write_svg, Series};
use crate::{worker_cap, HarnessError};
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;
use swar_core::agents::{
    BufferedTd3, DynSwarAgent, DynSwarConfig, RlAgent, TdSwarAgent, TdSwarConfig,
};
use swar_core::envs::{make_env, Env, RedundantWrapper, Transition};
use swar_core::rng::rng_tree;
use swar_core::selector::Mask;
use swar_core::td3::{CriticMasking, Td3Agent};

pub const CSV_HEADER: &str = "step,episode,return,critic_loss,tpr,fdr,lambda,p_r,wall_ms";

#[derive(Debug, Clone, Serialize)]
pub struct SeedStats {
    pub seed: u64,
    pub final_return: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentSummary {
    pub agent: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub final_return_mean: f64,
    pub final_return_std: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub per_seed: Vec<SeedStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RlSummary {
    pub env: String,
    pub redundant: usize,
    pub steps: u64,
    pub eval_interval: u64,
    /// Evaluation-curve mean over this many final points.
    pub final_window: usize,
    pub seeds: Vec<u64>,
    pub agents: Vec<AgentSummary>,
}

/// Evaluation points of one seed's run.
#[derive(Debug, Clone)]
pub struct SeedCurve {
    pub seed: u64,
    pub steps: Vec<u64>,
    pub returns: Vec<f64>,
}

/// Number of trailing evaluation points averaged into `final_return`.
pub const FINAL_WINDOW: usize = 10;

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trapezoidal area under the (step, return) evaluation curve.
pub fn curve_auc(steps: &[u64], returns: &[f64]) -> f64 {
    let mut auc = 0.0;
    for i in 1..steps.len() {
        let dx = (steps[i] - steps[i - 1]) as f64;
        auc += dx * (returns[i] + returns[i - 1]) / 2.0;
    }
    auc
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Builds the environment an agent trains on. Everything except the
/// oracle steps the wrapped env; the oracle uses the base env directly,
/// ignoring the redundancy setting.
fn build_env(cfg: &RlRunConfig, kind: AgentKind) -> Result<(Box<dyn Env>, Option<Mask>), HarnessError> {
    let base = make_env(&cfg.env_name)?;
    if kind == AgentKind::Oracle {
        return Ok((base, None));
    }
    let wrapped = RedundantWrapper::new(base, cfg.redundant);
    let gt = wrapped.ground_truth_mask().clone();
    Ok((Box::new(wrapped), Some(gt)))
}

fn build_agent(
    cfg: &RlRunConfig,
    kind: AgentKind,
    env: &dyn Env,
    seed: u64,
) -> Box<dyn RlAgent> {
    let spec = env.spec();
    let mut rng = rng_tree(seed, &[kind.name(), "init"]);
    let capacity = cfg.steps.max(1) as usize;
    match kind {
        AgentKind::Oracle | AgentKind::Td3 => Box::new(BufferedTd3::new(
            Td3Agent::new(
                spec.state_dim,
                &spec.action_low,
                &spec.action_high,
                cfg.td3.clone(),
                CriticMasking::None,
                &mut rng,
            ),
            capacity,
        )),
        AgentKind::TdSwar => {
            let planned = cfg.steps.saturating_sub(cfg.td3.warmup_steps).max(1);
            let mut swar = TdSwarConfig::for_updates(planned);
            swar.td3 = cfg.td3.clone();
            swar.selector_hidden = cfg.selector_hidden.clone();
            swar.selector_lr = cfg.td_selector_lr;
            swar.curriculum.lambda_end = cfg.td_lambda_end;
            swar.curriculum.p_r_start = cfg.td_pr_start;
            Box::new(TdSwarAgent::new(
                spec.state_dim,
                &spec.action_low,
                &spec.action_high,
                swar,
                capacity,
                &mut rng,
            ))
        }
        AgentKind::DynSwar => Box::new(DynSwarAgent::new(
            spec.state_dim,
            &spec.action_low,
            &spec.action_high,
            DynSwarConfig {
                td3: cfg.td3.clone(),
                selector_hidden: cfg.selector_hidden.clone(),
                selector_lr: cfg.dyn_selector_lr,
                dyn_hidden: cfg.dyn_hidden.clone(),
                dyn_lr: cfg.dyn_lr,
                dyn_epochs: cfg.dyn_epochs,
                dyn_batch: cfg.dyn_batch,
                lambda_end: cfg.dyn_lambda_end,
                p_r_start: cfg.dyn_pr_start,
                state_only_selector: false,
            },
            capacity,
            &mut rng,
        )),
    }
}

/// Mean return of `episodes` noise-free episodes, drawn from a stream
/// keyed by the evaluation step so points are independent of one another.
fn eval_return(
    env: &mut dyn Env,
    agent: &dyn RlAgent,
    kind: AgentKind,
    seed: u64,
    at_step: u64,
    episodes: usize,
) -> Result<f64, HarnessError> {
    let label = at_step.to_string();
    let mut rng = rng_tree(seed, &[kind.name(), "eval", &label]);
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut s = env.reset(&mut rng);
        loop {
            let a = agent.act(&s, false, at_step, &mut rng)?;
            let out = env.step(&a).map_err(HarnessError::Env)?;
            total += out.reward;
            if out.done {
                break;
            }
            s = out.obs;
        }
    }
    Ok(total / episodes as f64)
}

/// One seed's full training run; writes `curve_seed{seed}.csv` into `dir`.
fn run_single(
    cfg: &RlRunConfig,
    kind: AgentKind,
    seed: u64,
    dir: &Path,
) -> Result<SeedCurve, HarnessError> {
    let t0 = Instant::now();
    let (mut env, gt) = build_env(cfg, kind)?;
    let (mut eval_env, _) = build_env(cfg, kind)?;
    let mut agent = build_agent(cfg, kind, env.as_ref(), seed);

    let mut env_rng = rng_tree(seed, &[kind.name(), "env"]);
    let mut explore_rng = rng_tree(seed, &[kind.name(), "explore"]);
    let mut update_rng = rng_tree(seed, &[kind.name(), "update"]);
    let mut warm_rng = rng_tree(seed, &[kind.name(), "warmup-train"]);

    let path = dir.join(format!("curve_seed{seed}.csv"));
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "{CSV_HEADER}")?;

    let warmup = agent.warmup_steps().min(cfg.steps);
    let mut s = env.reset(&mut env_rng);
    let mut episode = 0u64;
    let mut last_critic: Option<f64> = None;
    let mut curve = SeedCurve { seed, steps: Vec::new(), returns: Vec::new() };

    for step in 0..cfg.steps {
        if step == warmup {
            agent.end_warmup(&mut warm_rng)?;
        }
        let a = agent.act(&s, true, step, &mut explore_rng)?;
        let out = env.step(&a).map_err(HarnessError::Env)?;
        agent.observe(Transition {
            s: s.clone(),
            a,
            r: out.reward,
            s_next: out.obs.clone(),
            // Both bundled environments are pure-horizon; the time cut is
            // not a terminal state, so targets keep bootstrapping.
            done: false,
        });
        if out.done {
            s = env.reset(&mut env_rng);
            episode += 1;
        } else {
            s = out.obs;
        }
        if step >= warmup {
            let diag = agent.update(step, &mut update_rng)?;
            last_critic = Some(diag.critic_loss);
        }

        let now = step + 1;
        if now % cfg.eval_interval == 0 || now == cfg.steps {
            let ret = eval_return(eval_env.as_mut(), agent.as_ref(), kind, seed, now, cfg.eval_episodes)?;
            // Selection quality is blank until training has started: before
            // the first update the selector is untrained noise.
            let (tpr, fdr) = if now > warmup {
                match &gt {
                    Some(mask) => match agent.probe_selection(mask, cfg.probe_rows)? {
                        Some((t, f)) => (Some(t), Some(f)),
                        None => (None, None),
                    },
                    None => (None, None),
                }
            } else {
                (None, None)
            };
            let (lambda, p_r) = match agent.curriculum_state() {
                Some((l, p)) => (Some(l), Some(p)),
                None => (None, None),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                now,
                episode,
                ret,
                fmt_opt(last_critic),
                fmt_opt(tpr),
                fmt_opt(fdr),
                fmt_opt(lambda),
                fmt_opt(p_r),
                t0.elapsed().as_millis()
            )?;
            w.flush()?;
            curve.steps.push(now);
            curve.returns.push(ret);
        }
    }
    Ok(curve)
}

/// Runs all seeds for one agent, in waves capped by `SWAR_THREADS`.
fn run_agent_seeds(
    cfg: &RlRunConfig,
    kind: AgentKind,
    dir: &Path,
) -> Result<Vec<SeedCurve>, HarnessError> {
    let cap = worker_cap(cfg.seeds.len());
    let mut curves = Vec::with_capacity(cfg.seeds.len());
    for wave in cfg.seeds.chunks(cap) {
        let results: Vec<Result<SeedCurve, HarnessError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = wave
                .iter()
                .map(|&seed| scope.spawn(move || run_single(cfg, kind, seed, dir)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                .collect()
        });
        for r in results {
            curves.push(r?);
        }
    }
    Ok(curves)
}

/// Mean and std across seeds at each shared evaluation step.
fn cross_seed_series(label: &str, curves: &[SeedCurve]) -> Series {
    let n_points = curves.iter().map(|c| c.steps.len()).min().unwrap_or(0);
    let mut xs = Vec::with_capacity(n_points);
    let mut mean = Vec::with_capacity(n_points);
    let mut std = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let vals: Vec<f64> = curves.iter().map(|c| c.returns[i]).collect();
        let (m, sd) = mean_std(&vals);
        xs.push(curves[0].steps[i] as f64);
        mean.push(m);
        std.push(sd);
    }
    Series { label: label.to_string(), xs, mean, std }
}

pub fn run_rl(cfg: &RlRunConfig) -> Result<RlSummary, HarnessError> {
    if cfg.agents.is_empty() {
        return Err(HarnessError::Usage("agent list is empty".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(HarnessError::Usage("seed list is empty".into()));
    }
    fs::create_dir_all(&cfg.out)?;

    let mut agent_summaries = Vec::with_capacity(cfg.agents.len());
    let mut series = Vec::with_capacity(cfg.agents.len());
    for &kind in &cfg.agents {
        let dir = cfg.out.join(kind.name());
        fs::create_dir_all(&dir)?;
        let curves = run_agent_seeds(cfg, kind, &dir)?;

        let mut per_seed = Vec::with_capacity(curves.len());
        for c in &curves {
            let tail = c.returns.len().saturating_sub(FINAL_WINDOW);
            let (final_return, _) = mean_std(&c.returns[tail..]);
            per_seed.push(SeedStats {
                seed: c.seed,
                final_return,
                auc: curve_auc(&c.steps, &c.returns),
            });
        }
        let (final_return_mean, final_return_std) =
            mean_std(&per_seed.iter().map(|s| s.final_return).collect::<Vec<_>>());
        let (auc_mean, auc_std) = mean_std(&per_seed.iter().map(|s| s.auc).collect::<Vec<_>>());
        let note = (kind == AgentKind::Oracle && cfg.redundant > 0).then(|| {
            format!(
                "redundancy ignored for stepping: the oracle acts on the unwrapped {} action dims",
                make_env(&cfg.env_name).map(|e| e.spec().action_dim).unwrap_or(0)
            )
        });
        agent_summaries.push(AgentSummary {
            agent: kind.name().to_string(),
            note,
            final_return_mean,
            final_return_std,
            auc_mean,
            auc_std,
            per_seed,
        });
        series.push(cross_seed_series(kind.name(), &curves));
    }

    let summary = RlSummary {
        env: cfg.env_name.clone(),
        redundant: cfg.redundant,
        steps: cfg.steps,
        eval_interval: cfg.eval_interval,
        final_window: FINAL_WINDOW,
        seeds: cfg.seeds.clone(),
        agents: agent_summaries,
    };
    let mut f = BufWriter::new(File::create(cfg.out.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut f, &summary)?;
    writeln!(f)?;
    f.flush()?;

    write_svg(
        &cfg.out.join("curves.svg"),
        &format!("{} (+{} redundant dims)", cfg.env_name, cfg.redundant),
        "environment steps",
        "evaluation return",
        &series,
    )?;
    Ok(summary)
}
