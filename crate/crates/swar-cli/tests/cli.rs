//! Binary and driver contract tests: exit codes, output schemas, and
//! byte-level reproducibility of every artifact.

use std::fs;
use std::path::Path;
use std::process::Command;
use swar_cli::config::{AgentKind, RlRunConfig};
use swar_cli::rl::{curve_auc, mean_std, run_rl, CSV_HEADER, FINAL_WINDOW};
use swar_core::td3::Td3Config;

fn swar() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swar"))
}

/// Minimal well-formedness check: every open tag is closed in LIFO order,
/// attribute quotes are balanced, and exactly one root element exists.
fn assert_well_formed_xml(doc: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut roots = 0;
    let mut rest = doc;
    while let Some(open) = rest.find('<') {
        let tail = &rest[open + 1..];
        let close = tail.find('>').expect("unclosed `<`");
        let tag = &tail[..close];
        assert_eq!(tag.matches('"').count() % 2, 0, "unbalanced quotes in <{tag}>");
        if let Some(name) = tag.strip_prefix('/') {
            let top = stack.pop().unwrap_or_else(|| panic!("stray closer </{name}>"));
            assert_eq!(top, name.trim(), "mismatched closer");
            if stack.is_empty() {
                roots += 1;
            }
        } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
            let name: String = tag
                .chars()
                .take_while(|c| !c.is_whitespace() && *c != '>')
                .collect();
            stack.push(name);
        } else if tag.ends_with('/') && stack.is_empty() {
            roots += 1;
        }
        rest = &tail[close + 1..];
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    assert_eq!(roots, 1, "expected exactly one root element");
}

#[test]
fn unknown_names_exit_with_code_2_and_list_valid_names() {
    let out = swar().args(["synth", "--dataset", "syn9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    for name in ["syn1", "syn2", "syn3", "syn4", "syn5", "syn6"] {
        assert!(msg.contains(name), "{msg}");
    }

    let out = swar().args(["rl", "--env", "walker2d", "--agent", "td3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("pendulum") && msg.contains("maze"), "{msg}");

    let out = swar().args(["rl", "--env", "maze", "--agent", "sac"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("oracle") && msg.contains("dyn-swar"), "{msg}");
}

#[test]
fn bad_seed_syntax_is_a_usage_error() {
    let out = swar()
        .args(["synth", "--dataset", "syn1", "--seeds", "2..0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn run_synth_cli(out_dir: &Path) {
    let status = swar()
        .args([
            "synth",
            "--dataset",
            "syn4",
            "--dim",
            "11",
            "--steps",
            "200",
            "--seeds",
            "0,1",
            "--out",
        ])
        .arg(out_dir)
        .env("SWAR_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn synth_outputs_are_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_synth_cli(&a);
    run_synth_cli(&b);
    for name in ["report.json", "probs.csv", "curves.svg"] {
        let fa = fs::read(a.join(name)).unwrap();
        let fb = fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between identical runs");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    let iters = report["iterations"].as_array().unwrap();
    assert_eq!(iters.len(), 4, "hierarchical passes 1..4");
    assert_eq!(iters[0]["iteration"], 1);
    assert_eq!(iters[3]["iteration"], 4);
    let probs = fs::read_to_string(a.join("probs.csv")).unwrap();
    let mut lines = probs.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!(
            "seed,row,{}",
            (1..=11).map(|j| format!("p{j}")).collect::<Vec<_>>().join(",")
        )
    );
    assert_well_formed_xml(&fs::read_to_string(a.join("curves.svg")).unwrap());
}

/// Strips the wall-clock column, the only field allowed to differ between
/// reruns.
fn strip_wall_ms(csv: &str) -> String {
    csv.lines()
        .map(|l| match l.rsplit_once(',') {
            Some((head, _)) => head.to_string(),
            None => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn tiny_rl_cfg(out: &Path, agents: Vec<AgentKind>) -> RlRunConfig {
    let mut cfg = RlRunConfig::defaults("maze", agents, out.to_path_buf());
    cfg.redundant = 2;
    cfg.steps = 400;
    cfg.eval_interval = 100;
    cfg.eval_episodes = 2;
    cfg.seeds = vec![0, 1];
    cfg.td3 = Td3Config {
        hidden: vec![8, 8],
        batch: 16,
        warmup_steps: 64,
        ..Td3Config::default()
    };
    cfg.selector_hidden = vec![8];
    cfg.dyn_hidden = vec![8, 8];
    cfg.dyn_epochs = 2;
    cfg.dyn_batch = 16;
    cfg.probe_rows = 32;
    cfg
}

#[test]
fn rl_outputs_are_reproducible_and_self_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let agents = vec![AgentKind::Td3, AgentKind::DynSwar];
    let summary = run_rl(&tiny_rl_cfg(&a, agents.clone())).unwrap();
    run_rl(&tiny_rl_cfg(&b, agents)).unwrap();

    // Agent order in the summary matches the configured order.
    assert_eq!(summary.agents[0].agent, "td3");
    assert_eq!(summary.agents[1].agent, "dyn-swar");

    for agent in ["td3", "dyn-swar"] {
        for seed in [0u64, 1] {
            let fa = fs::read_to_string(a.join(agent).join(format!("curve_seed{seed}.csv"))).unwrap();
            let fb = fs::read_to_string(b.join(agent).join(format!("curve_seed{seed}.csv"))).unwrap();
            assert_eq!(
                strip_wall_ms(&fa),
                strip_wall_ms(&fb),
                "{agent} seed {seed} differs"
            );
            let mut lines = fa.lines();
            assert_eq!(lines.next().unwrap(), CSV_HEADER);
            let mut prev_step = 0u64;
            for line in lines {
                let fields: Vec<&str> = line.split(',').collect();
                assert_eq!(fields.len(), 9, "bad row `{line}`");
                let step: u64 = fields[0].parse().unwrap();
                assert!(step > prev_step, "steps must be strictly increasing");
                prev_step = step;
                let (tpr, fdr) = (fields[4], fields[5]);
                if agent == "td3" {
                    assert!(tpr.is_empty() && fdr.is_empty(), "td3 has no selector");
                } else if step > 64 {
                    assert!(!tpr.is_empty() && !fdr.is_empty(), "selector stats expected");
                }
            }
        }
    }

    // summary.json identical across reruns (it contains no wall-clock data).
    assert_eq!(
        fs::read(a.join("summary.json")).unwrap(),
        fs::read(b.join("summary.json")).unwrap()
    );
    assert_well_formed_xml(&fs::read_to_string(a.join("curves.svg")).unwrap());

    // Reported statistics are recomputable from the CSVs.
    for agent_sum in &summary.agents {
        for stats in &agent_sum.per_seed {
            let csv = fs::read_to_string(
                a.join(&agent_sum.agent).join(format!("curve_seed{}.csv", stats.seed)),
            )
            .unwrap();
            let (mut steps, mut rets) = (Vec::new(), Vec::new());
            for line in csv.lines().skip(1) {
                let f: Vec<&str> = line.split(',').collect();
                steps.push(f[0].parse::<u64>().unwrap());
                rets.push(f[2].parse::<f64>().unwrap());
            }
            let tail = rets.len().saturating_sub(FINAL_WINDOW);
            let (final_ret, _) = mean_std(&rets[tail..]);
            assert!((final_ret - stats.final_return).abs() < 1e-9);
            assert!((curve_auc(&steps, &rets) - stats.auc).abs() < 1e-9);
        }
    }
}

#[test]
fn oracle_note_and_unwrapped_stepping() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny_rl_cfg(tmp.path(), vec![AgentKind::Oracle]);
    cfg.seeds = vec![0];
    let summary = run_rl(&cfg).unwrap();
    let note = summary.agents[0].note.as_deref().unwrap();
    assert!(note.contains("redundancy ignored"), "{note}");
}

#[test]
fn config_file_round_trip_through_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{"dataset": "syn4", "steps": 150, "seeds": "0", "lambda-end": 0.25}"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let status = swar()
        .args(["synth", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["dataset"], "syn4");
    assert_eq!(report["train_iters"], 150);
    assert_eq!(report["lambda_end"], 0.25);
}
