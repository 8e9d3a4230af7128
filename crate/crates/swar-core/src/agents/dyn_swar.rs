//! TD3 with a dynamics-pretrained, frozen action selector.
//!
//! During warm-up a single dynamics critic (masked actions) and a single
//! dynamics baseline (full actions) regress per-dimension standardized
//! next-state deltas; the selector is rewarded for masks that keep the
//! critic's prediction loss close to the baseline's. After the configured
//! epochs the selector is frozen and the RL phase runs plain TD3 with
//! every critic action input masked by the selector's thresholded
//! evaluation mask.

use super::{probe_buffer_selection, AgentError, RlAgent, StepDiag};
use crate::envs::Transition;
use crate::nn::{mse_rows, Activation, AdamState, DenseNet};
use crate::selector::{
    clamp_probs, sample_mask, selector_grads_batch, selector_reward, threshold_mask, Curriculum,
    Mask, SelectionPenaltyParams, SelectorModel,
};
use crate::td3::{
    critic_width, push_critic_input, CriticMasking, ReplayBuffer, Td3Agent, Td3Config,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct DynSwarConfig {
    pub td3: Td3Config,
    pub selector_hidden: Vec<usize>,
    pub selector_lr: f64,
    pub dyn_hidden: Vec<usize>,
    pub dyn_lr: f64,
    pub dyn_epochs: usize,
    pub dyn_batch: usize,
    /// Final sparsity weight. Must sit below the smallest per-dim share of
    /// the action-explainable prediction gap, otherwise the penalty's
    /// optimum drops truly influential dims. Standardizing the targets
    /// makes that gap a stable fraction of unit variance (measured 0.038
    /// on the wrapped pendulum with its single torque dim, 0.97 on the
    /// maze across two dims), so one default clears both with margin.
    pub lambda_end: f64,
    /// Starting point of the selection-proportion target, annealed to 0.
    /// Zero disables the proportion curriculum: sweeping the target through
    /// small cardinalities rewards masks that retain spurious dims, and a
    /// dim held there long enough saturates its sigmoid past the point
    /// where the post-ramp penalty can evict it.
    pub p_r_start: f64,
    /// Feed the selector only the state instead of `[s, a]`.
    pub state_only_selector: bool,
}

impl Default for DynSwarConfig {
    fn default() -> Self {
        Self {
            td3: Td3Config::default(),
            selector_hidden: vec![100, 200],
            selector_lr: 1e-3,
            dyn_hidden: vec![256, 256],
            dyn_lr: 1e-3,
            dyn_epochs: 50,
            dyn_batch: 128,
            lambda_end: 0.01,
            p_r_start: 0.0,
            state_only_selector: false,
        }
    }
}

/// Summary of the warm-up selector training, kept for diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DynTrainReport {
    pub iterations: usize,
    /// Final-epoch means.
    pub critic_loss: f64,
    pub baseline_loss: f64,
    pub selector_reward: f64,
    /// Evaluation-mask statistics over evenly spaced buffer rows.
    pub probe_mean_cardinality: f64,
    pub probe_degenerate_rows: usize,
}

fn dyn_net<R: Rng + ?Sized>(
    in_dim: usize,
    hidden: &[usize],
    out_dim: usize,
    rng: &mut R,
) -> DenseNet {
    let mut dims = vec![in_dim];
    dims.extend_from_slice(hidden);
    dims.push(out_dim);
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Identity);
    DenseNet::new(&dims, &acts, rng)
}

/// Trains the selector against one-step dynamics prediction over the
/// warm-up buffer. Regression targets are next-state deltas standardized
/// per dimension with moments taken over the whole buffer, which puts the
/// selector reward on an environment-independent scale. Initialization
/// draw order: dynamics critic, dynamics baseline, selector. Epochs
/// shuffle the buffer without replacement; the final partial chunk is
/// kept. Per-iteration draws: shuffle (per epoch), then one Bernoulli mask
/// per batch row.
pub fn dyn_selector_train<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    state_dim: usize,
    action_dim: usize,
    cfg: &DynSwarConfig,
    rng: &mut R,
) -> Result<(SelectorModel, DynTrainReport), AgentError> {
    let len = buffer.len();
    if len < cfg.dyn_batch {
        return Err(AgentError::InsufficientBuffer {
            len,
            batch: cfg.dyn_batch,
        });
    }
    let sd = state_dim;
    let ad = action_dim;
    let mut mu = vec![0.0; sd];
    for i in 0..len {
        let t = buffer.get(i);
        for j in 0..sd {
            mu[j] += t.s_next[j] - t.s[j];
        }
    }
    for m in &mut mu {
        *m /= len as f64;
    }
    let mut sigma = vec![0.0; sd];
    for i in 0..len {
        let t = buffer.get(i);
        for j in 0..sd {
            let dev = t.s_next[j] - t.s[j] - mu[j];
            sigma[j] += dev * dev;
        }
    }
    for v in &mut sigma {
        *v = (*v / len as f64).sqrt().max(1e-8);
    }
    let cw = critic_width(sd, ad, true);
    let bw = critic_width(sd, ad, false);
    let mut critic = dyn_net(cw, &cfg.dyn_hidden, sd, rng);
    let mut baseline = dyn_net(bw, &cfg.dyn_hidden, sd, rng);
    let sel_in_dim = if cfg.state_only_selector { sd } else { sd + ad };
    let mut selector = SelectorModel::new(sel_in_dim, ad, &cfg.selector_hidden, rng);
    let mut opt_c = AdamState::new(&critic);
    let mut opt_b = AdamState::new(&baseline);
    let mut opt_s = AdamState::new(selector.net());

    let batches_per_epoch = len.div_ceil(cfg.dyn_batch);
    let total_iters = cfg.dyn_epochs * batches_per_epoch;
    let curriculum = Curriculum {
        lambda_start: 0.0,
        lambda_end: cfg.lambda_end,
        p_r_start: cfg.p_r_start,
        p_r_end: 0.0,
        total_steps: ((total_iters as f64 * 0.8) as u64).max(1),
    };

    let mut indices: Vec<usize> = (0..len).collect();
    let mut iter = 0usize;
    let mut tail = (0.0, 0.0, 0.0, 0usize);
    for epoch in 0..cfg.dyn_epochs {
        indices.shuffle(rng);
        let last_epoch = epoch + 1 == cfg.dyn_epochs;
        for chunk in indices.chunks(cfg.dyn_batch) {
            let n = chunk.len();
            let at = |e: &dyn std::fmt::Display| AgentError::AtStep {
                step: iter as u64,
                msg: format!("dynamics pretraining: {e}"),
            };
            let (lambda, p_r) = curriculum.at(iter as u64);
            let pen = SelectionPenaltyParams { lambda, p_r, d: ad };

            let mut s = Vec::with_capacity(n * sd);
            let mut a = Vec::with_capacity(n * ad);
            let mut target = Vec::with_capacity(n * sd);
            for &idx in chunk {
                let t = buffer.get(idx);
                s.extend_from_slice(&t.s);
                a.extend_from_slice(&t.a);
                for j in 0..sd {
                    target.push((t.s_next[j] - t.s[j] - mu[j]) / sigma[j]);
                }
            }
            let mut sel_in = Vec::with_capacity(n * sel_in_dim);
            for i in 0..n {
                sel_in.extend_from_slice(&s[i * sd..(i + 1) * sd]);
                if !cfg.state_only_selector {
                    sel_in.extend_from_slice(&a[i * ad..(i + 1) * ad]);
                }
            }
            let probs = selector.forward_batch(&sel_in, n).map_err(|e| at(&e))?;
            let masks: Vec<Mask> = (0..n)
                .map(|i| {
                    let row = clamp_probs(&probs.output()[i * ad..(i + 1) * ad]);
                    sample_mask(&row, rng)
                })
                .collect();

            let mut cin = Vec::with_capacity(n * cw);
            let mut bin = Vec::with_capacity(n * bw);
            for i in 0..n {
                let (srow, arow) = (&s[i * sd..(i + 1) * sd], &a[i * ad..(i + 1) * ad]);
                push_critic_input(&mut cin, srow, arow, Some(&masks[i]));
                push_critic_input(&mut bin, srow, arow, None);
            }
            let trace_c = critic.forward_batch(&cin, n).map_err(|e| at(&e))?;
            let (rows_c, grad_c) = mse_rows(trace_c.output(), &target, n);
            let (grads_c, _) = critic.backward_batch(&trace_c, &grad_c).map_err(|e| at(&e))?;
            opt_c.step(&mut critic, &grads_c, cfg.dyn_lr).map_err(|e| at(&e))?;

            let trace_b = baseline.forward_batch(&bin, n).map_err(|e| at(&e))?;
            let (rows_b, grad_b) = mse_rows(trace_b.output(), &target, n);
            let (grads_b, _) = baseline
                .backward_batch(&trace_b, &grad_b)
                .map_err(|e| at(&e))?;
            opt_b.step(&mut baseline, &grads_b, cfg.dyn_lr).map_err(|e| at(&e))?;

            let rewards: Vec<f64> = (0..n)
                .map(|i| selector_reward(rows_b[i], rows_c[i], &masks[i], &pen))
                .collect();
            let sel_grads =
                selector_grads_batch(&selector, &sel_in, &masks, &rewards).map_err(|e| at(&e))?;
            opt_s
                .step(selector.net_mut(), &sel_grads, cfg.selector_lr)
                .map_err(|e| at(&e))?;

            if last_epoch {
                tail.0 += rows_c.iter().sum::<f64>() / n as f64;
                tail.1 += rows_b.iter().sum::<f64>() / n as f64;
                tail.2 += rewards.iter().sum::<f64>() / n as f64;
                tail.3 += 1;
            }
            iter += 1;
        }
    }

    // Evaluation-mask probe on evenly spaced rows.
    let probe_n = len.min(256);
    let mut card_sum = 0.0;
    let mut degenerate = 0usize;
    for k in 0..probe_n {
        let t = buffer.get(k * len / probe_n);
        let mut input = Vec::with_capacity(sel_in_dim);
        input.extend_from_slice(&t.s);
        if !cfg.state_only_selector {
            input.extend_from_slice(&t.a);
        }
        let m = threshold_mask(&selector.select_probs(&input)?, 0.5);
        card_sum += m.cardinality() as f64;
        if m.cardinality() == 0 {
            degenerate += 1;
        }
    }
    let denom = tail.3.max(1) as f64;
    let report = DynTrainReport {
        iterations: iter,
        critic_loss: tail.0 / denom,
        baseline_loss: tail.1 / denom,
        selector_reward: tail.2 / denom,
        probe_mean_cardinality: card_sum / probe_n as f64,
        probe_degenerate_rows: degenerate,
    };
    Ok((selector, report))
}

pub struct DynSwarAgent {
    core: Td3Agent,
    buffer: ReplayBuffer,
    cfg: DynSwarConfig,
    pretrain: bool,
    report: Option<DynTrainReport>,
}

impl DynSwarAgent {
    /// Core nets drawn from `rng` in the same order as a mask-input TD3
    /// agent (actor, critic 1, critic 2). The masking holds a placeholder
    /// all-ones mask until `end_warmup` trains and freezes the selector
    /// from its own stream.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        low: &[f64],
        high: &[f64],
        cfg: DynSwarConfig,
        capacity: usize,
        rng: &mut R,
    ) -> Self {
        let core = Td3Agent::new(
            state_dim,
            low,
            high,
            cfg.td3.clone(),
            CriticMasking::Fixed(Mask::ones(low.len())),
            rng,
        );
        Self {
            core,
            buffer: ReplayBuffer::new(capacity),
            cfg,
            pretrain: true,
            report: None,
        }
    }

    /// Injected constant selector; `end_warmup` becomes a no-op.
    pub fn with_frozen_mask<R: Rng + ?Sized>(
        state_dim: usize,
        low: &[f64],
        high: &[f64],
        cfg: DynSwarConfig,
        capacity: usize,
        mask: Mask,
        rng: &mut R,
    ) -> Self {
        let core = Td3Agent::new(
            state_dim,
            low,
            high,
            cfg.td3.clone(),
            CriticMasking::Fixed(mask),
            rng,
        );
        Self {
            core,
            buffer: ReplayBuffer::new(capacity),
            cfg,
            pretrain: false,
            report: None,
        }
    }

    /// Injected pre-trained selector, frozen immediately.
    pub fn with_frozen_selector<R: Rng + ?Sized>(
        state_dim: usize,
        low: &[f64],
        high: &[f64],
        cfg: DynSwarConfig,
        capacity: usize,
        selector: SelectorModel,
        rng: &mut R,
    ) -> Self {
        let core = Td3Agent::new(
            state_dim,
            low,
            high,
            cfg.td3.clone(),
            CriticMasking::Selector(selector),
            rng,
        );
        Self {
            core,
            buffer: ReplayBuffer::new(capacity),
            cfg,
            pretrain: false,
            report: None,
        }
    }

    pub fn core(&self) -> &Td3Agent {
        &self.core
    }

    pub fn report(&self) -> Option<&DynTrainReport> {
        self.report.as_ref()
    }

    pub fn frozen_selector(&self) -> Option<&SelectorModel> {
        match self.core.masking() {
            CriticMasking::Selector(s) => Some(s),
            _ => None,
        }
    }
}

impl RlAgent for DynSwarAgent {
    fn action_dim(&self) -> usize {
        self.core.action_dim()
    }

    fn warmup_steps(&self) -> u64 {
        self.core.cfg.warmup_steps
    }

    fn act(
        &self,
        s: &[f64],
        explore: bool,
        step: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>, AgentError> {
        Ok(self.core.act(s, explore, step, rng)?)
    }

    fn observe(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    fn end_warmup(&mut self, rng: &mut ChaCha8Rng) -> Result<(), AgentError> {
        if !self.pretrain {
            return Ok(());
        }
        let (selector, report) = dyn_selector_train(
            &self.buffer,
            self.core.state_dim(),
            self.core.action_dim(),
            &self.cfg,
            rng,
        )?;
        self.core.set_masking(CriticMasking::Selector(selector));
        self.report = Some(report);
        self.pretrain = false;
        Ok(())
    }

    fn update(&mut self, step: u64, rng: &mut ChaCha8Rng) -> Result<StepDiag, AgentError> {
        let batch = self
            .buffer
            .sample(self.core.cfg.batch, rng)
            .map_err(|e| AgentError::at(step, e))?;
        let diag = self
            .core
            .update(&batch, rng)
            .map_err(|e| AgentError::at(step, e))?;
        Ok(StepDiag {
            critic_loss: diag.critic_loss,
            actor_loss: diag.actor_loss,
            selector_reward: None,
            degenerate_masks: diag.degenerate_masks,
        })
    }

    fn selection_mask(&self, s: &[f64], a: &[f64]) -> Result<Option<Mask>, AgentError> {
        Ok(self.core.masking().mask_for(s, a)?)
    }

    fn probe_selection(
        &self,
        ground_truth: &Mask,
        n: usize,
    ) -> Result<Option<(f64, f64)>, AgentError> {
        let masking = self.core.masking();
        probe_buffer_selection(
            &self.buffer,
            |s, a| Ok(masking.mask_for(s, a)?.expect("dyn-swar masking is never plain")),
            ground_truth,
            n,
        )
        .map(Some)
    }

    fn curriculum_state(&self) -> Option<(f64, f64)> {
        None
    }
}
