//! Synthetic selection driver: trains the curriculum selector per seed on
//! freshly generated data, then writes `report.json` (per-iteration TPR/FDR
//! with cross-seed mean and std), `probs.csv` (test-set selection
//! probabilities), and a TPR/FDR plot.

use crate::config::SynthRunConfig;
use crate::rl::mean_std;
use crate::svg::{write_svg, Series};
use crate::{worker_cap, HarnessError};
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use swar_core::rng::rng_tree;
use swar_core::synth::{
    test_probs, train_supervised_invase, IterationStat, SelectionReport, SynDataset, SynSpec,
};

#[derive(Debug, Clone, Serialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub tpr_mean: f64,
    pub tpr_std: f64,
    pub fdr_mean: f64,
    pub fdr_std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub tpr: f64,
    pub fdr: f64,
    pub iterations: Vec<IterationStat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthReport {
    pub dataset: String,
    pub dim: usize,
    pub train_iters: usize,
    pub lambda_end: f64,
    pub p_r_start: f64,
    pub seeds: Vec<u64>,
    pub iterations: Vec<IterationSummary>,
    pub per_seed: Vec<SeedReport>,
}

struct SeedOutcome {
    report: SelectionReport,
    probs: Vec<Vec<f64>>,
}

fn run_seed(cfg: &SynthRunConfig, seed: u64) -> Result<SeedOutcome, HarnessError> {
    let spec = SynSpec::new(cfg.dataset, cfg.dim, cfg.n_samples)
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    let data = SynDataset::generate(spec, &mut rng_tree(seed, &["data"]));
    let outcome =
        train_supervised_invase(&data, &cfg.curriculum(), &cfg.invase, &mut rng_tree(seed, &["train"]))?;
    let probs = test_probs(&outcome.selector, &data)?;
    Ok(SeedOutcome { report: outcome.report, probs })
}

pub fn run_synth(cfg: &SynthRunConfig) -> Result<SynthReport, HarnessError> {
    if cfg.seeds.is_empty() {
        return Err(HarnessError::Usage("seed list is empty".into()));
    }
    fs::create_dir_all(&cfg.out)?;

    let cap = worker_cap(cfg.seeds.len());
    let mut outcomes: Vec<SeedOutcome> = Vec::with_capacity(cfg.seeds.len());
    for wave in cfg.seeds.chunks(cap) {
        let results: Vec<Result<SeedOutcome, HarnessError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = wave
                .iter()
                .map(|&seed| scope.spawn(move || run_seed(cfg, seed)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                .collect()
        });
        for r in results {
            outcomes.push(r?);
        }
    }

    let n_iters = outcomes[0].report.iterations.len();
    let mut iterations = Vec::with_capacity(n_iters);
    for i in 0..n_iters {
        let tprs: Vec<f64> = outcomes.iter().map(|o| o.report.iterations[i].tpr).collect();
        let fdrs: Vec<f64> = outcomes.iter().map(|o| o.report.iterations[i].fdr).collect();
        let (tpr_mean, tpr_std) = mean_std(&tprs);
        let (fdr_mean, fdr_std) = mean_std(&fdrs);
        iterations.push(IterationSummary {
            iteration: outcomes[0].report.iterations[i].iteration,
            tpr_mean,
            tpr_std,
            fdr_mean,
            fdr_std,
        });
    }
    let per_seed: Vec<SeedReport> = cfg
        .seeds
        .iter()
        .zip(&outcomes)
        .map(|(&seed, o)| SeedReport {
            seed,
            tpr: o.report.tpr,
            fdr: o.report.fdr,
            iterations: o.report.iterations.clone(),
        })
        .collect();
    let report = SynthReport {
        dataset: cfg.dataset.name().to_string(),
        dim: cfg.dim,
        train_iters: cfg.invase.iters,
        lambda_end: cfg.lambda_end,
        p_r_start: cfg.p_r_start,
        seeds: cfg.seeds.clone(),
        iterations,
        per_seed,
    };

    let mut f = BufWriter::new(File::create(cfg.out.join("report.json"))?);
    serde_json::to_writer_pretty(&mut f, &report)?;
    writeln!(f)?;
    f.flush()?;

    // Per-instance selection probabilities on each seed's test split.
    let mut p = BufWriter::new(File::create(cfg.out.join("probs.csv"))?);
    let header: Vec<String> = (1..=cfg.dim).map(|j| format!("p{j}")).collect();
    writeln!(p, "seed,row,{}", header.join(","))?;
    for (&seed, o) in cfg.seeds.iter().zip(&outcomes) {
        for (row, probs) in o.probs.iter().enumerate() {
            let vals: Vec<String> = probs.iter().map(|v| v.to_string()).collect();
            writeln!(p, "{seed},{row},{}", vals.join(","))?;
        }
    }
    p.flush()?;

    let xs: Vec<f64> = report.iterations.iter().map(|s| s.iteration as f64).collect();
    let series = [
        Series {
            label: "TPR".into(),
            xs: xs.clone(),
            mean: report.iterations.iter().map(|s| s.tpr_mean).collect(),
            std: report.iterations.iter().map(|s| s.tpr_std).collect(),
        },
        Series {
            label: "FDR".into(),
            xs,
            mean: report.iterations.iter().map(|s| s.fdr_mean).collect(),
            std: report.iterations.iter().map(|s| s.fdr_std).collect(),
        },
    ];
    write_svg(
        &cfg.out.join("curves.svg"),
        &format!("{} ({}-dim) selection quality", report.dataset, cfg.dim),
        "selection pass",
        "percent",
        &series,
    )?;
    Ok(report)
}
