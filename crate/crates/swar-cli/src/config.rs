//! Resolved run configurations. Flag values are merged over an optional
//! JSON config file (same keys as the flags, kebab-case); flags win.

use crate::HarnessError;
use serde::Deserialize;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use swar_core::envs::make_env;
use swar_core::synth::{InvaseConfig, SynSpec, SynVariant};
use swar_core::td3::Td3Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Oracle,
    Td3,
    TdSwar,
    DynSwar,
}

impl AgentKind {
    pub const VALID_NAMES: &'static str = "oracle, td3, td-swar, dyn-swar";

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => Ok(Self::Oracle),
            "td3" => Ok(Self::Td3),
            "td-swar" | "td_swar" => Ok(Self::TdSwar),
            "dyn-swar" | "dyn_swar" => Ok(Self::DynSwar),
            other => Err(HarnessError::Usage(format!(
                "unknown agent `{other}`; valid names: {}",
                Self::VALID_NAMES
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Oracle => "oracle",
            Self::Td3 => "td3",
            Self::TdSwar => "td-swar",
            Self::DynSwar => "dyn-swar",
        }
    }
}

/// Seed list syntax: a single number, a comma list `0,1,2`, or an
/// inclusive range `0..4`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = |detail: &str| {
        HarnessError::Usage(format!(
            "invalid seeds `{s}`: {detail} (expected e.g. `3`, `0,1,2`, or `0..4`)"
        ))
    };
    let s = s.trim();
    if s.is_empty() {
        return Err(bad("empty"));
    }
    if let Some((a, b)) = s.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| bad("bad range start"))?;
        let hi: u64 = b.trim().parse().map_err(|_| bad("bad range end"))?;
        if hi < lo {
            return Err(bad("range end below start"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| bad("bad number")))
        .collect()
}

/// Comma list of agent names, order preserved (it becomes the summary and
/// plot order).
pub fn parse_agents(s: &str) -> Result<Vec<AgentKind>, HarnessError> {
    let agents: Vec<AgentKind> = s
        .split(',')
        .map(AgentKind::parse)
        .collect::<Result<_, _>>()?;
    if agents.is_empty() {
        return Err(HarnessError::Usage("agent list is empty".into()));
    }
    Ok(agents)
}

/// Raw JSON config file: every key optional, same names as the CLI flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub dataset: Option<String>,
    pub dim: Option<usize>,
    pub env: Option<String>,
    pub agent: Option<String>,
    pub redundant: Option<usize>,
    pub steps: Option<u64>,
    pub seeds: Option<String>,
    pub out: Option<PathBuf>,
    pub lambda_end: Option<f64>,
    pub pr_start: Option<f64>,
    pub eval_interval: Option<u64>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, HarnessError> {
    let file = File::open(path).map_err(|e| {
        HarnessError::Usage(format!("cannot read config file {}: {e}", path.display()))
    })?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        HarnessError::Usage(format!("bad config file {}: {e}", path.display()))
    })
}

/// Flag values for a `swar synth` run before merging.
#[derive(Debug, Default)]
pub struct SynthFlags {
    pub dataset: Option<String>,
    pub dim: Option<usize>,
    pub steps: Option<u64>,
    pub seeds: Option<String>,
    pub out: Option<PathBuf>,
    pub lambda_end: Option<f64>,
    pub pr_start: Option<f64>,
    pub config: Option<PathBuf>,
}

/// Flag values for a `swar rl` run before merging.
#[derive(Debug, Default)]
pub struct RlFlags {
    pub env: Option<String>,
    pub agent: Option<String>,
    pub redundant: Option<usize>,
    pub steps: Option<u64>,
    pub seeds: Option<String>,
    pub out: Option<PathBuf>,
    pub lambda_end: Option<f64>,
    pub pr_start: Option<f64>,
    pub eval_interval: Option<u64>,
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SynthRunConfig {
    pub dataset: SynVariant,
    pub dim: usize,
    pub n_samples: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub lambda_end: f64,
    pub p_r_start: f64,
    pub invase: InvaseConfig,
}

impl SynthRunConfig {
    /// Curriculum over the first 80% of training with the configured
    /// endpoints.
    pub fn curriculum(&self) -> swar_core::selector::Curriculum {
        let mut c = swar_core::synth::default_curriculum(self.invase.iters);
        c.lambda_end = self.lambda_end;
        c.p_r_start = self.p_r_start;
        c
    }
}

#[derive(Debug, Clone)]
pub struct RlRunConfig {
    pub env_name: String,
    /// Summary and plot order follows this list.
    pub agents: Vec<AgentKind>,
    pub redundant: usize,
    pub steps: u64,
    pub seeds: Vec<u64>,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub out: PathBuf,
    pub td3: Td3Config,
    pub selector_hidden: Vec<usize>,
    pub td_selector_lr: f64,
    pub td_lambda_end: f64,
    pub dyn_hidden: Vec<usize>,
    pub dyn_lr: f64,
    pub dyn_epochs: usize,
    pub dyn_batch: usize,
    pub dyn_selector_lr: f64,
    pub dyn_lambda_end: f64,
    pub td_pr_start: f64,
    pub dyn_pr_start: f64,
    /// Buffer rows probed for the selection TPR/FDR columns.
    pub probe_rows: usize,
}

impl RlRunConfig {
    pub fn defaults(env_name: &str, agents: Vec<AgentKind>, out: PathBuf) -> Self {
        Self {
            env_name: env_name.to_string(),
            agents,
            redundant: 0,
            steps: 100_000,
            seeds: (0..=4).collect(),
            eval_interval: 2_000,
            eval_episodes: 10,
            out,
            td3: Td3Config::default(),
            selector_hidden: vec![100, 200],
            td_selector_lr: 3e-4,
            td_lambda_end: 0.2,
            dyn_hidden: vec![256, 256],
            dyn_lr: 1e-3,
            dyn_epochs: 50,
            dyn_batch: 128,
            dyn_selector_lr: 1e-3,
            dyn_lambda_end: 0.01,
            td_pr_start: 0.5,
            dyn_pr_start: 0.0,
            probe_rows: 256,
        }
    }
}

fn reject_foreign_keys(mode: &str, keys: &[(&str, bool)]) -> Result<(), HarnessError> {
    for (name, present) in keys {
        if *present {
            return Err(HarnessError::Usage(format!(
                "config key `{name}` does not apply to {mode} runs"
            )));
        }
    }
    Ok(())
}

pub fn resolve_synth(flags: SynthFlags) -> Result<SynthRunConfig, HarnessError> {
    let file = match &flags.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    reject_foreign_keys(
        "synth",
        &[
            ("env", file.env.is_some()),
            ("agent", file.agent.is_some()),
            ("redundant", file.redundant.is_some()),
            ("eval-interval", file.eval_interval.is_some()),
        ],
    )?;
    let dataset_name = flags
        .dataset
        .or(file.dataset)
        .ok_or_else(|| HarnessError::Usage("--dataset is required for synth runs".into()))?;
    let dataset: SynVariant = dataset_name
        .parse()
        .map_err(|e: swar_core::synth::SynthError| HarnessError::Usage(e.to_string()))?;
    let dim = flags.dim.or(file.dim).unwrap_or(11);
    // Validate the dimension early so the error is a usage error.
    SynSpec::new(dataset, dim, 2).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let seeds = parse_seeds(&flags.seeds.or(file.seeds).unwrap_or_else(|| "0,1,2".into()))?;
    let iters = flags.steps.or(file.steps).unwrap_or(10_000) as usize;
    if iters == 0 {
        return Err(HarnessError::Usage("--steps must be positive".into()));
    }
    let out = flags
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("runs/synth-{dataset}")));
    Ok(SynthRunConfig {
        dataset,
        dim,
        n_samples: 20_000,
        seeds,
        out,
        lambda_end: flags.lambda_end.or(file.lambda_end).unwrap_or(0.2),
        p_r_start: flags.pr_start.or(file.pr_start).unwrap_or(0.5),
        invase: InvaseConfig {
            iters,
            ..InvaseConfig::default()
        },
    })
}

pub fn resolve_rl(flags: RlFlags) -> Result<RlRunConfig, HarnessError> {
    let file = match &flags.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    reject_foreign_keys(
        "rl",
        &[("dataset", file.dataset.is_some()), ("dim", file.dim.is_some())],
    )?;
    let env_name = flags
        .env
        .or(file.env)
        .ok_or_else(|| HarnessError::Usage("--env is required for rl runs".into()))?;
    make_env(&env_name).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let agent_list = flags
        .agent
        .or(file.agent)
        .ok_or_else(|| {
            HarnessError::Usage(format!(
                "--agent is required for rl runs; valid names: {}",
                AgentKind::VALID_NAMES
            ))
        })?;
    let agents = parse_agents(&agent_list)?;
    let seeds = parse_seeds(&flags.seeds.or(file.seeds).unwrap_or_else(|| "0..4".into()))?;
    let steps = flags.steps.or(file.steps).unwrap_or(100_000);
    if steps == 0 {
        return Err(HarnessError::Usage("--steps must be positive".into()));
    }
    let eval_interval = flags
        .eval_interval
        .or(file.eval_interval)
        .unwrap_or(2_000);
    if eval_interval == 0 {
        return Err(HarnessError::Usage("--eval-interval must be positive".into()));
    }
    let out = flags
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("runs/rl-{env_name}")));
    let mut cfg = RlRunConfig::defaults(&env_name, agents, out);
    cfg.redundant = flags.redundant.or(file.redundant).unwrap_or(0);
    cfg.steps = steps;
    cfg.seeds = seeds;
    cfg.eval_interval = eval_interval;
    if let Some(le) = flags.lambda_end.or(file.lambda_end) {
        cfg.td_lambda_end = le;
        cfg.dyn_lambda_end = le;
    }
    if let Some(pr) = flags.pr_start.or(file.pr_start) {
        cfg.td_pr_start = pr;
        cfg.dyn_pr_start = pr;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    #[test]
    fn seeds_forms() {
        assert_eq!(parse_seeds("3").unwrap(), vec![3]);
        assert_eq!(parse_seeds("0,1,2").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds(" 7 , 9 ").unwrap(), vec![7, 9]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("4..2").is_err());
        assert!(parse_seeds("a,b").is_err());
    }

    #[test]
    fn agent_names() {
        assert_eq!(parse_agents("oracle,td3").unwrap(), vec![AgentKind::Oracle, AgentKind::Td3]);
        assert_eq!(
            parse_agents("td-swar,dyn-swar").unwrap(),
            vec![AgentKind::TdSwar, AgentKind::DynSwar]
        );
        let err = parse_agents("sac").unwrap_err();
        assert!(err.to_string().contains(AgentKind::VALID_NAMES), "{err}");
    }

    #[test]
    fn synth_defaults_and_overrides() {
        let cfg = resolve_synth(SynthFlags {
            dataset: Some("syn4".into()),
            ..SynthFlags::default()
        })
        .unwrap();
        assert_eq!(cfg.dataset, SynVariant::Syn4);
        assert_eq!(cfg.dim, 11);
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.invase.iters, 10_000);
        assert_eq!(cfg.lambda_end, 0.2);

        let cfg = resolve_synth(SynthFlags {
            dataset: Some("syn5".into()),
            dim: Some(100),
            steps: Some(500),
            lambda_end: Some(0.3),
            ..SynthFlags::default()
        })
        .unwrap();
        assert_eq!(cfg.dim, 100);
        assert_eq!(cfg.invase.iters, 500);
        assert_eq!(cfg.lambda_end, 0.3);
    }

    #[test]
    fn synth_rejects_unknown_dataset_and_small_dim() {
        let err = resolve_synth(SynthFlags {
            dataset: Some("syn9".into()),
            ..SynthFlags::default()
        })
        .unwrap_err();
        assert!(matches!(err, HarnessError::Usage(_)));
        assert!(err.to_string().contains("syn1"), "{err}");

        let err = resolve_synth(SynthFlags {
            dataset: Some("syn1".into()),
            dim: Some(5),
            ..SynthFlags::default()
        })
        .unwrap_err();
        assert!(matches!(err, HarnessError::Usage(_)));
    }

    #[test]
    fn rl_defaults() {
        let cfg = resolve_rl(RlFlags {
            env: Some("pendulum".into()),
            agent: Some("td3".into()),
            ..RlFlags::default()
        })
        .unwrap();
        assert_eq!(cfg.steps, 100_000);
        assert_eq!(cfg.seeds.len(), 5);
        assert_eq!(cfg.eval_interval, 2_000);
        assert_eq!(cfg.td_lambda_end, 0.2);
        assert_eq!(cfg.dyn_lambda_end, 0.01);
        assert_eq!(cfg.td_pr_start, 0.5);
        assert_eq!(cfg.dyn_pr_start, 0.0);
    }

    #[test]
    fn rl_lambda_end_flag_overrides_both_endpoints() {
        let cfg = resolve_rl(RlFlags {
            env: Some("maze".into()),
            agent: Some("td-swar,dyn-swar".into()),
            lambda_end: Some(0.07),
            ..RlFlags::default()
        })
        .unwrap();
        assert_eq!(cfg.td_lambda_end, 0.07);
        assert_eq!(cfg.dyn_lambda_end, 0.07);
    }

    #[test]
    fn rl_rejects_unknown_env() {
        let err = resolve_rl(RlFlags {
            env: Some("walker2d".into()),
            agent: Some("td3".into()),
            ..RlFlags::default()
        })
        .unwrap_err();
        assert!(matches!(err, HarnessError::Usage(_)));
        assert!(err.to_string().contains("pendulum"), "{err}");
    }

    #[test]
    fn file_config_merges_under_flags() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(
            f,
            r#"{{"env": "pendulum", "agent": "td3", "steps": 5000, "lambda-end": 0.5}}"#
        )
        .unwrap();
        let cfg = resolve_rl(RlFlags {
            steps: Some(700),
            config: Some(f.path().to_path_buf()),
            ..RlFlags::default()
        })
        .unwrap();
        assert_eq!(cfg.env_name, "pendulum");
        assert_eq!(cfg.steps, 700, "flag wins over file");
        assert_eq!(cfg.td_lambda_end, 0.5, "file fills unset flags");
    }

    #[test]
    fn file_config_rejects_unknown_and_foreign_keys() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"learning-rate": 0.1}}"#).unwrap();
        let err = resolve_rl(RlFlags {
            env: Some("maze".into()),
            agent: Some("td3".into()),
            config: Some(f.path().to_path_buf()),
            ..RlFlags::default()
        })
        .unwrap_err();
        assert!(matches!(err, HarnessError::Usage(_)));

        let mut g = tempfile::NamedTempFile::new().unwrap();
        write!(g, r#"{{"dataset": "syn1"}}"#).unwrap();
        let err = resolve_rl(RlFlags {
            env: Some("maze".into()),
            agent: Some("td3".into()),
            config: Some(g.path().to_path_buf()),
            ..RlFlags::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains("does not apply"), "{err}");
    }

    proptest! {
        #[test]
        fn seed_lists_round_trip(seeds in proptest::collection::vec(0u64..10_000, 1..20)) {
            let joined = seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
            prop_assert_eq!(parse_seeds(&joined).unwrap(), seeds);
        }

        #[test]
        fn seed_ranges_are_inclusive(lo in 0u64..500, span in 0u64..50) {
            let parsed = parse_seeds(&format!("{lo}..{}", lo + span)).unwrap();
            prop_assert_eq!(parsed.len() as u64, span + 1);
            prop_assert_eq!(parsed[0], lo);
            prop_assert_eq!(*parsed.last().unwrap(), lo + span);
        }
    }
}
