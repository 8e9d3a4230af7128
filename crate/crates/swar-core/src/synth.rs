//! Synthetic selection benchmarks: six generators over uncorrelated
//! Gaussians with known per-instance relevant sets, TPR/FDR scoring, and
//! the supervised selector training loop.
//!
//! Feature indices are 1-based throughout this module, matching the
//! dataset definitions (x1..xd); [`Mask`] positions stay 0-based and the
//! conversion happens at the scoring boundary.

use crate::nn::{bce_rows, Activation, AdamState, DenseNet, NnError};
use crate::selector::{
    clamp_probs, iterative_select, sample_mask, selector_grads_batch, selector_reward,
    Curriculum, Mask, SelectionPenaltyParams, SelectorModel, SelectorError,
};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error("relevant set must be nonempty")]
    EmptyRelevant,
    #[error("unknown dataset `{0}`; valid names: syn1, syn2, syn3, syn4, syn5, syn6")]
    UnknownDataset(String),
    #[error("input_dim must be at least 11, got {0}")]
    DimTooSmall(usize),
    #[error("training diverged at iteration {iter}: {source}")]
    Diverged {
        iter: usize,
        #[source]
        source: NnError,
    },
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynVariant {
    Syn1,
    Syn2,
    Syn3,
    Syn4,
    Syn5,
    Syn6,
}

impl SynVariant {
    pub const ALL: [SynVariant; 6] = [
        SynVariant::Syn1,
        SynVariant::Syn2,
        SynVariant::Syn3,
        SynVariant::Syn4,
        SynVariant::Syn5,
        SynVariant::Syn6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynVariant::Syn1 => "syn1",
            SynVariant::Syn2 => "syn2",
            SynVariant::Syn3 => "syn3",
            SynVariant::Syn4 => "syn4",
            SynVariant::Syn5 => "syn5",
            SynVariant::Syn6 => "syn6",
        }
    }
}

impl fmt::Display for SynVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynVariant {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "syn1" => Ok(SynVariant::Syn1),
            "syn2" => Ok(SynVariant::Syn2),
            "syn3" => Ok(SynVariant::Syn3),
            "syn4" => Ok(SynVariant::Syn4),
            "syn5" => Ok(SynVariant::Syn5),
            "syn6" => Ok(SynVariant::Syn6),
            other => Err(SynthError::UnknownDataset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SynSpec {
    pub variant: SynVariant,
    /// 11 for the base datasets, 100 to append 89 label-independent noise
    /// dimensions.
    pub input_dim: usize,
    pub n_samples: usize,
}

impl SynSpec {
    pub fn new(variant: SynVariant, input_dim: usize, n_samples: usize) -> Result<Self, SynthError> {
        if input_dim < 11 {
            return Err(SynthError::DimTooSmall(input_dim));
        }
        Ok(Self {
            variant,
            input_dim,
            n_samples,
        })
    }
}

/// I.i.d. standard normal features, flat row-major `n x d`.
pub fn gen_features<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<f64> {
    assert!(n > 0 && d > 0);
    (0..n * d).map(|_| rng.sample(StandardNormal)).collect()
}

/// The generator's logit term; only the first 11 coordinates ever enter.
pub fn logit(spec: &SynSpec, x: &[f64]) -> f64 {
    assert!(x.len() >= 11, "logit needs at least 11 coordinates");
    let syn1 = |x: &[f64]| (x[0] * x[1]).exp();
    let syn2 = |x: &[f64]| (x[2] * x[2] + x[3] * x[3] + x[4] * x[4] + x[5] * x[5] - 4.0).exp();
    let syn3 = |x: &[f64]| -10.0 * (2.0 * x[6]).sin() + 2.0 * x[7].abs() + x[8] + (-x[9]).exp();
    match spec.variant {
        SynVariant::Syn1 => syn1(x),
        SynVariant::Syn2 => syn2(x),
        SynVariant::Syn3 => syn3(x),
        SynVariant::Syn4 => {
            if x[10] < 0.0 {
                syn1(x)
            } else {
                syn2(x)
            }
        }
        SynVariant::Syn5 => {
            if x[10] < 0.0 {
                syn1(x)
            } else {
                syn3(x)
            }
        }
        SynVariant::Syn6 => {
            if x[10] < 0.0 {
                syn2(x)
            } else {
                syn3(x)
            }
        }
    }
}

/// `P(Y=1|x) = 1/(1+logit(x))`, clamped into [0,1] (the Syn3 logit can be
/// negative).
pub fn label_prob(spec: &SynSpec, x: &[f64]) -> f64 {
    (1.0 / (1.0 + logit(spec, x))).clamp(0.0, 1.0)
}

/// Bernoulli labels, one per row of `x`.
pub fn gen_labels<R: Rng + ?Sized>(spec: &SynSpec, x: &[f64], rng: &mut R) -> Vec<f64> {
    let d = spec.input_dim;
    assert_eq!(x.len() % d, 0);
    x.chunks_exact(d)
        .map(|row| f64::from(rng.random::<f64>() < label_prob(spec, row)))
        .collect()
}

/// Ground-truth relevant feature indices (1-based, sorted). For Syn4-6 the
/// switching coordinate 11 is always included.
pub fn relevant_set(spec: &SynSpec, x: &[f64]) -> Vec<usize> {
    let syn1 = vec![1, 2];
    let syn2 = vec![3, 4, 5, 6];
    let syn3 = vec![7, 8, 9, 10];
    let with11 = |mut v: Vec<usize>| {
        v.push(11);
        v
    };
    match spec.variant {
        SynVariant::Syn1 => syn1,
        SynVariant::Syn2 => syn2,
        SynVariant::Syn3 => syn3,
        SynVariant::Syn4 => with11(if x[10] < 0.0 { syn1 } else { syn2 }),
        SynVariant::Syn5 => with11(if x[10] < 0.0 { syn1 } else { syn3 }),
        SynVariant::Syn6 => with11(if x[10] < 0.0 { syn2 } else { syn3 }),
    }
}

/// `(TPR %, FDR %)` of a selected index set against the relevant set.
/// An empty selection scores (0, 0) by convention.
pub fn tpr_fdr(selected: &[usize], relevant: &[usize]) -> Result<(f64, f64), SynthError> {
    if relevant.is_empty() {
        return Err(SynthError::EmptyRelevant);
    }
    let hits = selected.iter().filter(|i| relevant.contains(i)).count();
    let tpr = 100.0 * hits as f64 / relevant.len() as f64;
    let fdr = if selected.is_empty() {
        0.0
    } else {
        100.0 * (selected.len() - hits) as f64 / selected.len() as f64
    };
    Ok((tpr, fdr))
}

/// 1-based indices of a mask's selected positions.
pub fn mask_indices(mask: &Mask) -> Vec<usize> {
    mask.ones_indices().into_iter().map(|i| i + 1).collect()
}

#[derive(Debug, Clone)]
pub struct SynDataset {
    pub spec: SynSpec,
    /// Flat row-major `n x d`.
    pub x: Vec<f64>,
    /// Binary labels as 0.0/1.0.
    pub y: Vec<f64>,
    /// Per-instance relevant sets (1-based indices).
    pub relevant: Vec<Vec<usize>>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl SynDataset {
    /// Generates features and labels, splitting the first half for training
    /// and the second half for testing (rows are i.i.d.).
    pub fn generate<R: Rng + ?Sized>(spec: SynSpec, rng: &mut R) -> Self {
        let n = spec.n_samples;
        let d = spec.input_dim;
        let x = gen_features(n, d, rng);
        let y = gen_labels(&spec, &x, rng);
        let relevant = x.chunks_exact(d).map(|row| relevant_set(&spec, row)).collect();
        let half = n / 2;
        Self {
            spec,
            x,
            y,
            relevant,
            train_idx: (0..half).collect(),
            test_idx: (half..n).collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.spec.input_dim;
        &self.x[i * d..(i + 1) * d]
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Writes `x1,..,xd,y` rows with a header.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<(), SynthError> {
        let d = self.spec.input_dim;
        let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},y", header.join(","))?;
        for i in 0..self.n() {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{}", row.join(","), self.y[i])?;
        }
        Ok(())
    }

    /// Reads a dataset written by [`SynDataset::to_csv`], recomputing the
    /// relevant sets and the split from `spec`.
    pub fn from_csv<R: BufRead>(spec: SynSpec, reader: R) -> Result<Self, SynthError> {
        let d = spec.input_dim;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 1 {
                return Err(SynthError::Csv {
                    line: lineno + 1,
                    msg: format!("expected {} fields, got {}", d + 1, fields.len()),
                });
            }
            for f in &fields[..d] {
                x.push(f.parse::<f64>().map_err(|e| SynthError::Csv {
                    line: lineno + 1,
                    msg: e.to_string(),
                })?);
            }
            y.push(fields[d].parse::<f64>().map_err(|e| SynthError::Csv {
                line: lineno + 1,
                msg: e.to_string(),
            })?);
        }
        let n = y.len();
        let spec = SynSpec { n_samples: n, ..spec };
        let relevant = x.chunks_exact(d).map(|row| relevant_set(&spec, row)).collect();
        let half = n / 2;
        Ok(Self {
            spec,
            x,
            y,
            relevant,
            train_idx: (0..half).collect(),
            test_idx: (half..n).collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationStat {
    pub iteration: usize,
    pub tpr: f64,
    pub fdr: f64,
}

/// Test-set selection quality; `tpr`/`fdr` are the single-pass (iteration 1)
/// numbers, `iterations` covers hierarchical passes 1..4.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub tpr: f64,
    pub fdr: f64,
    pub iterations: Vec<IterationStat>,
}

#[derive(Debug, Clone)]
pub struct InvaseConfig {
    pub iters: usize,
    pub batch: usize,
    pub lr: f64,
    pub selector_hidden: Vec<usize>,
    pub predictor_hidden: Vec<usize>,
    /// Hierarchical selection passes reported on the test set.
    pub eval_iterations: usize,
}

impl Default for InvaseConfig {
    fn default() -> Self {
        Self {
            iters: 10_000,
            batch: 128,
            lr: 1e-3,
            selector_hidden: vec![100, 200],
            predictor_hidden: vec![100, 100],
            eval_iterations: 4,
        }
    }
}

/// Curriculum with default endpoints ramping over the first 80% of `iters`.
pub fn default_curriculum(iters: usize) -> Curriculum {
    Curriculum::defaults((iters as f64 * 0.8) as u64)
}

/// Trained selector plus its test-set report.
#[derive(Debug, Clone)]
pub struct InvaseOutcome {
    pub selector: SelectorModel,
    pub report: SelectionReport,
}

/// Joint selector/critic/baseline training on a generated dataset.
///
/// The critic sees `[x (.) m , m]` (masked features with the mask appended
/// so a selected zero is distinguishable from an unselected coordinate);
/// the baseline sees the full `x`. Both predict the label through a
/// terminal sigmoid and the selector is reinforced by their per-sample
/// cross-entropy difference minus the curriculum penalty.
pub fn train_supervised_invase<R: Rng + ?Sized>(
    data: &SynDataset,
    curriculum: &Curriculum,
    cfg: &InvaseConfig,
    rng: &mut R,
) -> Result<InvaseOutcome, SynthError> {
    let d = data.spec.input_dim;
    let mut selector = SelectorModel::new(d, d, &cfg.selector_hidden, rng);
    let mut critic = predictor_net(2 * d, &cfg.predictor_hidden, rng);
    let mut baseline = predictor_net(d, &cfg.predictor_hidden, rng);
    let mut opt_sel = AdamState::new(selector.net());
    let mut opt_cri = AdamState::new(&critic);
    let mut opt_bas = AdamState::new(&baseline);

    let nb = cfg.batch;
    let mut xs = vec![0.0; nb * d];
    let mut critic_in = vec![0.0; nb * 2 * d];
    let mut labels = vec![0.0; nb];
    let mut masks: Vec<Mask> = Vec::with_capacity(nb);

    for iter in 0..cfg.iters {
        let (lambda, p_r) = curriculum.at(iter as u64);
        masks.clear();
        for b in 0..nb {
            let i = data.train_idx[rng.random_range(0..data.train_idx.len())];
            xs[b * d..(b + 1) * d].copy_from_slice(data.row(i));
            labels[b] = data.y[i];
        }
        let sel_trace = selector.forward_batch(&xs, nb)?;
        for b in 0..nb {
            let probs = clamp_probs(&sel_trace.output()[b * d..(b + 1) * d]);
            let m = sample_mask(&probs, rng);
            for j in 0..d {
                let bit = f64::from(m.get(j));
                critic_in[b * 2 * d + j] = xs[b * d + j] * bit;
                critic_in[b * 2 * d + d + j] = bit;
            }
            masks.push(m);
        }

        let step = |net: &mut DenseNet,
                    opt: &mut AdamState,
                    input: &[f64],
                    labels: &[f64],
                    lr: f64|
         -> Result<Vec<f64>, SynthError> {
            let trace = net.forward_batch(input, nb)?;
            let (rows, grad) = bce_rows(trace.output(), labels)?;
            let (grads, _) = net.backward_batch(&trace, &grad)?;
            opt.step(net, &grads, lr)?;
            Ok(rows)
        };
        let wrap = |e: SynthError| match e {
            SynthError::Nn(src) => SynthError::Diverged { iter, source: src },
            other => other,
        };
        let l_c = step(&mut critic, &mut opt_cri, &critic_in, &labels, cfg.lr).map_err(wrap)?;
        let l_b = step(&mut baseline, &mut opt_bas, &xs, &labels, cfg.lr).map_err(wrap)?;

        let pen = SelectionPenaltyParams { lambda, p_r, d };
        let rewards: Vec<f64> = (0..nb)
            .map(|b| selector_reward(l_b[b], l_c[b], &masks[b], &pen))
            .collect();
        let grads = selector_grads_batch(&selector, &xs, &masks, &rewards)?;
        opt_sel
            .step(selector.net_mut(), &grads, cfg.lr)
            .map_err(|e| SynthError::Diverged { iter, source: e })?;
    }

    let report = evaluate_selector(&selector, data, cfg.eval_iterations)?;
    Ok(InvaseOutcome { selector, report })
}

/// Mean per-instance TPR/FDR of the thresholded selector over the test
/// split, for hierarchical passes 1..n_iters.
pub fn evaluate_selector(
    selector: &SelectorModel,
    data: &SynDataset,
    n_iters: usize,
) -> Result<SelectionReport, SynthError> {
    let d = data.spec.input_dim;
    let zeros = vec![0.0; d];
    let mut sums = vec![(0.0, 0.0); n_iters];
    for &i in &data.test_idx {
        let stages = iterative_select(selector, data.row(i), n_iters, &zeros)?;
        for (k, mask) in stages.iter().enumerate() {
            let (tpr, fdr) = tpr_fdr(&mask_indices(mask), &data.relevant[i])?;
            sums[k].0 += tpr;
            sums[k].1 += fdr;
        }
    }
    let n = data.test_idx.len() as f64;
    let iterations: Vec<IterationStat> = sums
        .iter()
        .enumerate()
        .map(|(k, &(t, f))| IterationStat {
            iteration: k + 1,
            tpr: t / n,
            fdr: f / n,
        })
        .collect();
    Ok(SelectionReport {
        tpr: iterations[0].tpr,
        fdr: iterations[0].fdr,
        iterations,
    })
}

/// Mean single-pass selection probabilities over the test split, one row
/// per test sample. Used for the probability dump.
pub fn test_probs(selector: &SelectorModel, data: &SynDataset) -> Result<Vec<Vec<f64>>, SynthError> {
    data.test_idx
        .iter()
        .map(|&i| Ok(selector.select_probs(data.row(i))?))
        .collect()
}

fn predictor_net<R: Rng + ?Sized>(in_dim: usize, hidden: &[usize], rng: &mut R) -> DenseNet {
    let mut dims = vec![in_dim];
    dims.extend_from_slice(hidden);
    dims.push(1);
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Sigmoid);
    DenseNet::new(&dims, &acts, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(variant: SynVariant, dim: usize) -> SynSpec {
        SynSpec::new(variant, dim, 20_000).unwrap()
    }

    #[test]
    fn gen_features_column_stats() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 20_000;
        let d = 11;
        let x = gen_features(n, d, &mut rng);
        for col in 0..d {
            let mean: f64 = (0..n).map(|i| x[i * d + col]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.05, "col {col} mean {mean}");
        }
        // A few off-diagonal covariances.
        for (a, b) in [(0usize, 1usize), (2, 7), (5, 10)] {
            let cov: f64 = (0..n).map(|i| x[i * d + a] * x[i * d + b]).sum::<f64>() / n as f64;
            assert!(cov.abs() < 0.05, "cov({a},{b}) = {cov}");
        }
    }

    #[test]
    fn gen_features_deterministic() {
        let a = gen_features(50, 11, &mut ChaCha8Rng::seed_from_u64(9));
        let b = gen_features(50, 11, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn logit_examples() {
        let mut x = vec![0.0; 11];
        assert_eq!(logit(&spec(SynVariant::Syn1, 11), &x), 1.0);
        assert_eq!(label_prob(&spec(SynVariant::Syn1, 11), &x), 0.5);

        let l = logit(&spec(SynVariant::Syn2, 11), &x);
        assert!((l - (-4.0f64).exp()).abs() < 1e-12);

        let l = logit(&spec(SynVariant::Syn3, 11), &x);
        assert_eq!(l, 1.0);
        assert_eq!(label_prob(&spec(SynVariant::Syn3, 11), &x), 0.5);

        // Switch coordinate routes Syn4 between the Syn1 and Syn2 formulas.
        x[0] = 1.0;
        x[1] = 1.0;
        x[10] = -0.5;
        let s4 = spec(SynVariant::Syn4, 11);
        assert_eq!(logit(&s4, &x), logit(&spec(SynVariant::Syn1, 11), &x));
        x[10] = 0.5;
        assert_eq!(logit(&s4, &x), logit(&spec(SynVariant::Syn2, 11), &x));
    }

    #[test]
    fn label_prob_clamps_negative_logit() {
        // Syn3 with x9 = -5: logit = -5 + 1 = -4, raw 1/(1-4) < 0.
        let mut x = vec![0.0; 11];
        x[8] = -5.0;
        let s = spec(SynVariant::Syn3, 11);
        assert_eq!(label_prob(&s, &x), 0.0);
        // x9 = -0.5: logit = 0.5... raw 1/1.5 ok; x9 = -1.5 gives logit -0.5,
        // raw 2.0, clamped to 1.
        x[8] = -1.5;
        assert_eq!(label_prob(&s, &x), 1.0);
    }

    #[test]
    fn gen_labels_limits() {
        let s = spec(SynVariant::Syn2, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // x3..6 = 0: logit = e^-4 ~ 0 so P(Y=1) ~ 0.982.
        let x = vec![0.0; 11];
        let hits: f64 = (0..2000).map(|_| gen_labels(&s, &x, &mut rng)[0]).sum();
        assert!(hits / 2000.0 > 0.95);

        // Huge sum of squares: logit -> inf, P(Y=1) -> 0.
        let mut x = vec![0.0; 11];
        x[2] = 10.0;
        let hits: f64 = (0..200).map(|_| gen_labels(&s, &x, &mut rng)[0]).sum();
        assert_eq!(hits, 0.0);
    }

    #[test]
    fn gen_labels_monte_carlo_frequency() {
        // Syn1 at x1=x2=1: P(Y=1) = 1/(1+e) ~ 0.26894, 50k draws, 3-sigma
        // band +-0.006.
        let s = spec(SynVariant::Syn1, 11);
        let mut x = vec![0.0; 11];
        x[0] = 1.0;
        x[1] = 1.0;
        let p = 1.0 / (1.0 + std::f64::consts::E);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 50_000;
        let mut hits = 0.0;
        for _ in 0..n {
            hits += gen_labels(&s, &x, &mut rng)[0];
        }
        let freq = hits / n as f64;
        assert!((freq - p).abs() < 0.006, "freq {freq} vs p {p}");
    }

    #[test]
    fn relevant_set_examples() {
        let x_neg = {
            let mut x = vec![0.0; 11];
            x[10] = -0.3;
            x
        };
        let x_pos = {
            let mut x = vec![0.0; 11];
            x[10] = 0.3;
            x
        };
        assert_eq!(relevant_set(&spec(SynVariant::Syn1, 11), &x_pos), vec![1, 2]);
        assert_eq!(relevant_set(&spec(SynVariant::Syn2, 11), &x_pos), vec![3, 4, 5, 6]);
        assert_eq!(relevant_set(&spec(SynVariant::Syn3, 11), &x_pos), vec![7, 8, 9, 10]);
        assert_eq!(relevant_set(&spec(SynVariant::Syn4, 11), &x_neg), vec![1, 2, 11]);
        assert_eq!(relevant_set(&spec(SynVariant::Syn4, 11), &x_pos), vec![3, 4, 5, 6, 11]);
        assert_eq!(relevant_set(&spec(SynVariant::Syn5, 11), &x_neg), vec![1, 2, 11]);
        assert_eq!(relevant_set(&spec(SynVariant::Syn6, 11), &x_pos), vec![7, 8, 9, 10, 11]);
    }

    #[test]
    fn relevant_set_always_contains_switch_dim() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for variant in [SynVariant::Syn4, SynVariant::Syn5, SynVariant::Syn6] {
            let s = spec(variant, 11);
            for _ in 0..200 {
                let x = gen_features(1, 11, &mut rng);
                assert!(relevant_set(&s, &x).contains(&11));
            }
        }
    }

    #[test]
    fn tpr_fdr_examples() {
        let (tpr, fdr) = tpr_fdr(&[1, 2, 5], &[1, 2]).unwrap();
        assert_eq!(tpr, 100.0);
        assert!((fdr - 100.0 / 3.0).abs() < 1e-9);

        let (tpr, fdr) = tpr_fdr(&[3, 4], &[3, 4]).unwrap();
        assert_eq!((tpr, fdr), (100.0, 0.0));

        let (tpr, fdr) = tpr_fdr(&[], &[1]).unwrap();
        assert_eq!((tpr, fdr), (0.0, 0.0));

        assert!(tpr_fdr(&[1], &[]).is_err());
    }

    #[test]
    fn tpr_fdr_exhaustive_vs_brute_force() {
        // All subset pairs of {1..8}: compare against direct set counting.
        for sel_bits in 0u32..256 {
            for rel_bits in 1u32..256 {
                let sel: Vec<usize> = (0..8).filter(|i| sel_bits >> i & 1 == 1).map(|i| i + 1).collect();
                let rel: Vec<usize> = (0..8).filter(|i| rel_bits >> i & 1 == 1).map(|i| i + 1).collect();
                let (tpr, fdr) = tpr_fdr(&sel, &rel).unwrap();
                let inter = (sel_bits & rel_bits).count_ones() as f64;
                let expect_tpr = 100.0 * inter / rel_bits.count_ones() as f64;
                let expect_fdr = if sel.is_empty() {
                    0.0
                } else {
                    100.0 * (sel_bits.count_ones() as f64 - inter) / sel_bits.count_ones() as f64
                };
                assert_eq!(tpr, expect_tpr);
                assert_eq!(fdr, expect_fdr);
            }
        }
    }

    #[test]
    fn dataset_generation_and_split() {
        let s = SynSpec::new(SynVariant::Syn4, 11, 1000).unwrap();
        let data = SynDataset::generate(s, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(data.n(), 1000);
        assert_eq!(data.train_idx.len(), 500);
        assert_eq!(data.test_idx.len(), 500);
        assert!(data.y.iter().all(|&y| y == 0.0 || y == 1.0));
        for i in 0..data.n() {
            assert_eq!(data.relevant[i], relevant_set(&s, data.row(i)));
        }
    }

    #[test]
    fn dim_too_small_rejected() {
        assert!(SynSpec::new(SynVariant::Syn1, 10, 100).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = SynSpec::new(SynVariant::Syn2, 11, 60).unwrap();
        let data = SynDataset::generate(s, &mut ChaCha8Rng::seed_from_u64(4));
        let mut buf = Vec::new();
        data.to_csv(&mut buf).unwrap();
        let back = SynDataset::from_csv(s, &buf[..]).unwrap();
        assert_eq!(back.x, data.x);
        assert_eq!(back.y, data.y);
        assert_eq!(back.relevant, data.relevant);
    }

    #[test]
    fn dataset_name_parsing() {
        assert_eq!("syn3".parse::<SynVariant>().unwrap(), SynVariant::Syn3);
        assert_eq!("SYN6".parse::<SynVariant>().unwrap(), SynVariant::Syn6);
        let err = "syn9".parse::<SynVariant>().unwrap_err();
        assert!(err.to_string().contains("syn1"), "{err}");
    }
}
