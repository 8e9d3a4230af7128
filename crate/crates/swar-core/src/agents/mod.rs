//! Driver-facing agent interface plus the selector-augmented TD3 variants.
//!
//! Every agent owns its replay buffer and samples its own batches, so the
//! training loop stays agent-agnostic: act, observe, end_warmup once at the
//! warm-up boundary, then one `update` per environment step.

pub mod dyn_swar;
pub mod td_swar;

use crate::envs::Transition;
use crate::nn::NnError;
use crate::selector::{mask_or, Mask, SelectorError};
use crate::synth::{mask_indices, tpr_fdr};
use crate::td3::{CriticMasking, ReplayBuffer, Td3Agent, Td3Error};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use dyn_swar::{dyn_selector_train, DynSwarAgent, DynSwarConfig, DynTrainReport};
pub use td_swar::{TdSwarAgent, TdSwarConfig};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("aborted at step {step}: {msg}")]
    AtStep { step: u64, msg: String },
    #[error("warm-up buffer too small: {len} transitions < batch {batch}")]
    InsufficientBuffer { len: usize, batch: usize },
    #[error(transparent)]
    Td3(#[from] Td3Error),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

impl AgentError {
    pub fn at(step: u64, e: impl std::fmt::Display) -> Self {
        AgentError::AtStep {
            step,
            msg: e.to_string(),
        }
    }
}

/// Per-update diagnostics in a shape common to all agents.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepDiag {
    pub critic_loss: f64,
    pub actor_loss: Option<f64>,
    pub selector_reward: Option<f64>,
    /// Batch rows whose evaluation or sampled mask had cardinality zero.
    pub degenerate_masks: usize,
}

/// Evaluation-mask snapshot against the wrapper's ground truth. Always
/// derived from thresholded probabilities, never from sampled masks.
#[derive(Debug, Clone)]
pub struct SelectionTrace {
    pub mask: Mask,
    pub tpr: f64,
    pub fdr: f64,
    pub lambda: Option<f64>,
    pub p_r: Option<f64>,
}

impl SelectionTrace {
    pub fn compute(
        mask: Mask,
        ground_truth: &Mask,
        curriculum: Option<(f64, f64)>,
    ) -> Result<Self, AgentError> {
        let (tpr, fdr) = tpr_fdr(&mask_indices(&mask), &mask_indices(ground_truth))
            .map_err(|e| AgentError::AtStep {
                step: 0,
                msg: e.to_string(),
            })?;
        Ok(Self {
            mask,
            tpr,
            fdr,
            lambda: curriculum.map(|c| c.0),
            p_r: curriculum.map(|c| c.1),
        })
    }
}

/// OR-combination of a dynamics-based mask with a reward-based mask. No
/// reward-model selector is trained here; passing zeros for `reward_mask`
/// reproduces the dynamics-only approximation.
pub fn combined_mask(dyn_mask: &Mask, reward_mask: &Mask) -> Result<Mask, SelectorError> {
    mask_or(dyn_mask, reward_mask)
}

pub trait RlAgent {
    fn action_dim(&self) -> usize;
    fn warmup_steps(&self) -> u64;

    /// Behavior action at environment step `step`. Must not consume rng
    /// draws when `explore` is false.
    fn act(
        &self,
        s: &[f64],
        explore: bool,
        step: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>, AgentError>;

    fn observe(&mut self, t: Transition);

    fn buffer_len(&self) -> usize;

    /// Called exactly once, after the warm-up buffer is full and before the
    /// first `update`.
    fn end_warmup(&mut self, rng: &mut ChaCha8Rng) -> Result<(), AgentError> {
        let _ = rng;
        Ok(())
    }

    /// One gradient step; the agent samples its own batch.
    fn update(&mut self, step: u64, rng: &mut ChaCha8Rng) -> Result<StepDiag, AgentError>;

    /// Evaluation mask for a (state, action) pair; `None` for agents
    /// without a selection mechanism.
    fn selection_mask(&self, s: &[f64], a: &[f64]) -> Result<Option<Mask>, AgentError>;

    /// Mean per-instance selection TPR/FDR over up to `n` evenly spaced
    /// buffer rows, against the wrapper's ground-truth mask.
    fn probe_selection(&self, ground_truth: &Mask, n: usize) -> Result<Option<(f64, f64)>, AgentError>;

    /// Current curriculum position `(lambda, p_r)` for agents still
    /// annealing one.
    fn curriculum_state(&self) -> Option<(f64, f64)>;
}

/// Shared probe: evaluation masks on evenly spaced buffer rows, averaged
/// per-instance TPR/FDR. Deterministic (no sampling).
pub(crate) fn probe_buffer_selection<F>(
    buffer: &ReplayBuffer,
    mask_of: F,
    ground_truth: &Mask,
    n: usize,
) -> Result<(f64, f64), AgentError>
where
    F: Fn(&[f64], &[f64]) -> Result<Mask, AgentError>,
{
    let len = buffer.len();
    if len == 0 {
        return Err(AgentError::Td3(Td3Error::EmptyBuffer));
    }
    let n = n.min(len).max(1);
    let relevant = mask_indices(ground_truth);
    let mut tpr_sum = 0.0;
    let mut fdr_sum = 0.0;
    for k in 0..n {
        let idx = k * len / n;
        let t = buffer.get(idx);
        let m = mask_of(&t.s, &t.a)?;
        let (tpr, fdr) = tpr_fdr(&mask_indices(&m), &relevant).map_err(|e| AgentError::AtStep {
            step: 0,
            msg: e.to_string(),
        })?;
        tpr_sum += tpr;
        fdr_sum += fdr;
    }
    Ok((tpr_sum / n as f64, fdr_sum / n as f64))
}

/// Vanilla TD3 (or its mask-input variant) behind the common interface.
pub struct BufferedTd3 {
    pub agent: Td3Agent,
    pub buffer: ReplayBuffer,
}

impl BufferedTd3 {
    pub fn new(agent: Td3Agent, capacity: usize) -> Self {
        Self {
            agent,
            buffer: ReplayBuffer::new(capacity),
        }
    }
}

impl RlAgent for BufferedTd3 {
    fn action_dim(&self) -> usize {
        self.agent.action_dim()
    }

    fn warmup_steps(&self) -> u64 {
        self.agent.cfg.warmup_steps
    }

    fn act(
        &self,
        s: &[f64],
        explore: bool,
        step: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>, AgentError> {
        Ok(self.agent.act(s, explore, step, rng)?)
    }

    fn observe(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    fn update(&mut self, step: u64, rng: &mut ChaCha8Rng) -> Result<StepDiag, AgentError> {
        let batch = self
            .buffer
            .sample(self.agent.cfg.batch, rng)
            .map_err(|e| AgentError::at(step, e))?;
        let diag = self
            .agent
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
        Ok(self.agent.masking().mask_for(s, a)?)
    }

    fn probe_selection(
        &self,
        ground_truth: &Mask,
        n: usize,
    ) -> Result<Option<(f64, f64)>, AgentError> {
        if matches!(self.agent.masking(), CriticMasking::None) {
            return Ok(None);
        }
        let masking = self.agent.masking();
        probe_buffer_selection(
            &self.buffer,
            |s, a| Ok(masking.mask_for(s, a)?.expect("non-None masking")),
            ground_truth,
            n,
        )
        .map(Some)
    }

    fn curriculum_state(&self) -> Option<(f64, f64)> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::td3::Td3Config;
    use rand::SeedableRng;

    fn tiny_cfg() -> Td3Config {
        Td3Config {
            hidden: vec![8, 8],
            batch: 4,
            warmup_steps: 5,
            ..Td3Config::default()
        }
    }

    fn push_random(agent: &mut BufferedTd3, n: usize, rng: &mut ChaCha8Rng) {
        use rand::Rng;
        for _ in 0..n {
            agent.observe(Transition {
                s: vec![rng.random_range(-1.0..1.0)],
                a: vec![rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)],
                r: rng.random_range(-1.0..0.0),
                s_next: vec![rng.random_range(-1.0..1.0)],
                done: false,
            });
        }
    }

    #[test]
    fn combined_mask_examples() {
        let dynm = Mask::new(vec![1, 0, 1, 0]).unwrap();
        let zeros = Mask::zeros(4);
        assert_eq!(combined_mask(&dynm, &zeros).unwrap(), dynm);

        let ones = Mask::ones(4);
        assert_eq!(combined_mask(&ones, &ones).unwrap(), ones);

        let rew = Mask::new(vec![0, 1, 0, 0]).unwrap();
        let both = combined_mask(&dynm, &rew).unwrap();
        assert_eq!(both, Mask::new(vec![1, 1, 1, 0]).unwrap());

        assert!(combined_mask(&dynm, &Mask::zeros(3)).is_err());
    }

    #[test]
    fn selection_trace_percentages() {
        let gt = Mask::new(vec![1, 0, 0, 0]).unwrap();
        let picked = Mask::new(vec![1, 1, 0, 0]).unwrap();
        let trace = SelectionTrace::compute(picked, &gt, Some((0.1, 0.2))).unwrap();
        assert_eq!(trace.tpr, 100.0);
        assert_eq!(trace.fdr, 50.0);
        assert_eq!(trace.lambda, Some(0.1));
    }

    #[test]
    fn vanilla_td3_has_no_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let agent = Td3Agent::new(
            1,
            &[-2.0, -1.0],
            &[2.0, 1.0],
            tiny_cfg(),
            CriticMasking::None,
            &mut rng,
        );
        let wrapped = BufferedTd3::new(agent, 64);
        assert!(wrapped.selection_mask(&[0.0], &[0.0, 0.0]).unwrap().is_none());
        let gt = Mask::new(vec![1, 0]).unwrap();
        assert!(wrapped.probe_selection(&gt, 8).unwrap().is_none());
        assert!(wrapped.curriculum_state().is_none());
    }

    #[test]
    fn mask_input_variant_reports_fixed_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let agent = Td3Agent::new(
            1,
            &[-2.0, -1.0],
            &[2.0, 1.0],
            tiny_cfg(),
            CriticMasking::Fixed(Mask::ones(2)),
            &mut rng,
        );
        let mut wrapped = BufferedTd3::new(agent, 64);
        let mut data_rng = ChaCha8Rng::seed_from_u64(2);
        push_random(&mut wrapped, 16, &mut data_rng);
        let gt = Mask::new(vec![1, 0]).unwrap();
        let (tpr, fdr) = wrapped.probe_selection(&gt, 8).unwrap().unwrap();
        // All-ones over 2 dims with 1 relevant: TPR 100, FDR 50.
        assert_eq!((tpr, fdr), (100.0, 50.0));
    }

    #[test]
    fn buffered_update_runs_after_observe() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let agent = Td3Agent::new(
            1,
            &[-2.0, -1.0],
            &[2.0, 1.0],
            tiny_cfg(),
            CriticMasking::None,
            &mut rng,
        );
        let mut wrapped = BufferedTd3::new(agent, 64);
        let mut data_rng = ChaCha8Rng::seed_from_u64(4);
        push_random(&mut wrapped, 8, &mut data_rng);
        let mut update_rng = ChaCha8Rng::seed_from_u64(5);
        let diag = wrapped.update(6, &mut update_rng).unwrap();
        assert!(diag.critic_loss.is_finite());
        assert!(diag.selector_reward.is_none());
    }
}
