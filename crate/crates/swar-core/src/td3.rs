//! Twin-delayed deterministic actor-critic with an optional mask channel on
//! the critic inputs.
//!
//! The masking mode is the only difference between the vanilla baseline,
//! the mask-input variant, and the frozen-selector agent: all three run the
//! exact same update path, which is what makes the reduction tests
//! (all-ones selector == mask-input baseline, bit for bit) meaningful.

use crate::envs::Transition;
use crate::nn::{
    mse_loss, soft_update, Activation, AdamState, BatchTrace, DenseNet, Gradients, NnError,
};
use crate::selector::{threshold_mask, Mask, SelectorError, SelectorModel};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Td3Error {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,
    #[error("batch must be nonempty")]
    EmptyBatch,
}

/// FIFO ring buffer of transitions with uniform with-replacement sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    storage: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            storage: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.storage[i]
    }

    /// Inserts a transition, evicting the oldest once full.
    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// `n` uniform draws with replacement.
    pub fn sample<'a, R: Rng + ?Sized>(
        &'a self,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<&'a Transition>, Td3Error> {
        if self.storage.is_empty() {
            return Err(Td3Error::EmptyBuffer);
        }
        Ok((0..n)
            .map(|_| &self.storage[rng.random_range(0..self.storage.len())])
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: u64,
    /// Exploration noise scale, multiplied by each dim's half-range.
    pub explore_sigma: f64,
    /// Target smoothing noise scale, same per-dim half-range convention.
    pub smooth_sigma: f64,
    pub smooth_clip: f64,
    pub batch: usize,
    pub lr: f64,
    pub warmup_steps: u64,
    pub hidden: Vec<usize>,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            explore_sigma: 0.1,
            smooth_sigma: 0.2,
            smooth_clip: 0.5,
            batch: 256,
            lr: 3e-4,
            warmup_steps: 25_000,
            hidden: vec![256, 256],
        }
    }
}

/// How critics see actions.
#[derive(Debug, Clone)]
pub enum CriticMasking {
    /// Plain `[s, a]` input.
    None,
    /// `[s, m (.) a, m]` with a constant mask.
    Fixed(Mask),
    /// `[s, m (.) a, m]` where `m` thresholds the selector's output on
    /// `[s, a]` at 0.5. The selector is treated as frozen: no gradients
    /// flow into it and it is never updated here.
    Selector(SelectorModel),
}

impl CriticMasking {
    /// Evaluation mask for one (state, action) pair; `None` in plain mode.
    pub fn mask_for(&self, s: &[f64], a: &[f64]) -> Result<Option<Mask>, SelectorError> {
        match self {
            CriticMasking::None => Ok(None),
            CriticMasking::Fixed(m) => Ok(Some(m.clone())),
            CriticMasking::Selector(sel) => {
                let mut input = Vec::with_capacity(s.len() + a.len());
                input.extend_from_slice(s);
                input.extend_from_slice(a);
                let probs = sel.select_probs(&input)?;
                Ok(Some(threshold_mask(&probs, 0.5)))
            }
        }
    }

    pub fn uses_mask_channel(&self) -> bool {
        !matches!(self, CriticMasking::None)
    }
}

/// Critic input width for a given masking mode.
pub fn critic_width(state_dim: usize, action_dim: usize, mask_channel: bool) -> usize {
    if mask_channel {
        state_dim + 2 * action_dim
    } else {
        state_dim + action_dim
    }
}

/// Appends one critic input row: `[s, a]` or `[s, m (.) a, m]`.
pub fn push_critic_input(out: &mut Vec<f64>, s: &[f64], a: &[f64], mask: Option<&Mask>) {
    out.extend_from_slice(s);
    match mask {
        None => out.extend_from_slice(a),
        Some(m) => {
            debug_assert_eq!(m.len(), a.len());
            for (j, &av) in a.iter().enumerate() {
                out.push(if m.get(j) { av } else { 0.0 });
            }
            for j in 0..a.len() {
                out.push(if m.get(j) { 1.0 } else { 0.0 });
            }
        }
    }
}

/// Actor with tanh output rescaled into per-dimension bounds.
#[derive(Debug, Clone)]
pub struct BoundedActor {
    net: DenseNet,
    center: Vec<f64>,
    half: Vec<f64>,
}

impl BoundedActor {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        hidden: &[usize],
        low: &[f64],
        high: &[f64],
        rng: &mut R,
    ) -> Self {
        let mut dims = vec![state_dim];
        dims.extend_from_slice(hidden);
        dims.push(low.len());
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Tanh);
        let center = low.iter().zip(high).map(|(l, h)| (l + h) / 2.0).collect();
        let half = low.iter().zip(high).map(|(l, h)| (h - l) / 2.0).collect();
        Self {
            net: DenseNet::new(&dims, &acts, rng),
            center,
            half,
        }
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }

    pub fn action_dim(&self) -> usize {
        self.half.len()
    }

    /// Deterministic action for one state.
    pub fn action(&self, s: &[f64]) -> Result<Vec<f64>, NnError> {
        let trace = self.net.forward_batch(s, 1)?;
        Ok(self.scale(trace.output()))
    }

    /// Batched forward; returns the trace (for backward) and scaled actions.
    pub fn action_batch(&self, s: &[f64], n: usize) -> Result<(BatchTrace, Vec<f64>), NnError> {
        let trace = self.net.forward_batch(s, n)?;
        let actions = self.scale(trace.output());
        Ok((trace, actions))
    }

    fn scale(&self, tanh_out: &[f64]) -> Vec<f64> {
        let d = self.half.len();
        tanh_out
            .iter()
            .enumerate()
            .map(|(i, &y)| self.center[i % d] + self.half[i % d] * y)
            .collect()
    }

    /// Parameter gradients given `dL/d action` (flat `n x action_dim`).
    pub fn grads_from_action_grad(
        &self,
        trace: &BatchTrace,
        d_action: &[f64],
    ) -> Result<Gradients, NnError> {
        let d = self.half.len();
        let out_grad: Vec<f64> = d_action
            .iter()
            .enumerate()
            .map(|(i, &g)| g * self.half[i % d])
            .collect();
        let (grads, _) = self.net.backward_batch(trace, &out_grad)?;
        Ok(grads)
    }
}

/// Per-update diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct Td3Diag {
    pub critic_loss: f64,
    pub actor_loss: Option<f64>,
    pub did_actor_update: bool,
    /// Count of batch rows whose evaluation mask had cardinality zero.
    pub degenerate_masks: usize,
}

pub struct Td3Agent {
    pub cfg: Td3Config,
    state_dim: usize,
    action_dim: usize,
    low: Vec<f64>,
    high: Vec<f64>,
    actor: BoundedActor,
    actor_target: BoundedActor,
    critic1: DenseNet,
    critic2: DenseNet,
    critic1_target: DenseNet,
    critic2_target: DenseNet,
    opt_actor: AdamState,
    opt_c1: AdamState,
    opt_c2: AdamState,
    masking: CriticMasking,
    updates: u64,
    actor_updates: u64,
}

impl Td3Agent {
    /// Initialization draw order: actor, critic 1, critic 2; targets are
    /// clones of the live nets.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        low: &[f64],
        high: &[f64],
        cfg: Td3Config,
        masking: CriticMasking,
        rng: &mut R,
    ) -> Self {
        let action_dim = low.len();
        let actor = BoundedActor::new(state_dim, &cfg.hidden, low, high, rng);
        let cw = critic_width(state_dim, action_dim, masking.uses_mask_channel());
        let critic1 = critic_net(cw, &cfg.hidden, rng);
        let critic2 = critic_net(cw, &cfg.hidden, rng);
        let actor_target = actor.clone();
        let critic1_target = critic1.clone();
        let critic2_target = critic2.clone();
        let opt_actor = AdamState::new(actor.net());
        let opt_c1 = AdamState::new(&critic1);
        let opt_c2 = AdamState::new(&critic2);
        Self {
            cfg,
            state_dim,
            action_dim,
            low: low.to_vec(),
            high: high.to_vec(),
            actor,
            actor_target,
            critic1,
            critic2,
            critic1_target,
            critic2_target,
            opt_actor,
            opt_c1,
            opt_c2,
            masking,
            updates: 0,
            actor_updates: 0,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn masking(&self) -> &CriticMasking {
        &self.masking
    }

    pub fn set_masking(&mut self, masking: CriticMasking) {
        assert_eq!(
            masking.uses_mask_channel(),
            self.masking.uses_mask_channel(),
            "cannot change critic input width after construction"
        );
        self.masking = masking;
    }

    pub fn actor(&self) -> &BoundedActor {
        &self.actor
    }

    pub fn critic1(&self) -> &DenseNet {
        &self.critic1
    }

    pub fn critic1_target_mut(&mut self) -> &mut DenseNet {
        &mut self.critic1_target
    }

    pub fn critic2_target_mut(&mut self) -> &mut DenseNet {
        &mut self.critic2_target
    }

    pub fn update_count(&self) -> u64 {
        self.updates
    }

    pub fn actor_update_count(&self) -> u64 {
        self.actor_updates
    }

    /// Behavior policy: uniform random during warm-up, then the actor plus
    /// exploration noise; deterministic actor output when `explore` is off.
    pub fn act<R: Rng + ?Sized>(
        &self,
        s: &[f64],
        explore: bool,
        step: u64,
        rng: &mut R,
    ) -> Result<Vec<f64>, Td3Error> {
        if explore && step < self.cfg.warmup_steps {
            return Ok((0..self.action_dim)
                .map(|j| rng.random_range(self.low[j]..self.high[j]))
                .collect());
        }
        let mut a = self.actor.action(s)?;
        if explore {
            for j in 0..self.action_dim {
                let hr = (self.high[j] - self.low[j]) / 2.0;
                let noise: f64 = rng.sample::<f64, _>(StandardNormal) * self.cfg.explore_sigma * hr;
                a[j] = (a[j] + noise).clamp(self.low[j], self.high[j]);
            }
        }
        Ok(a)
    }

    /// Target action with clipped Gaussian smoothing noise.
    pub fn smoothed_target_action<R: Rng + ?Sized>(
        &self,
        s_next: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>, Td3Error> {
        let mut a = self.actor_target.action(s_next)?;
        for j in 0..self.action_dim {
            let hr = (self.high[j] - self.low[j]) / 2.0;
            let eps: f64 = rng.sample::<f64, _>(StandardNormal) * self.cfg.smooth_sigma * hr;
            let clip = self.cfg.smooth_clip * hr;
            a[j] = (a[j] + eps.clamp(-clip, clip)).clamp(self.low[j], self.high[j]);
        }
        Ok(a)
    }

    /// `y = r + gamma * (1 - done) * min(Q1'(s', a~), Q2'(s', a~))`.
    pub fn td3_target(
        &self,
        r: f64,
        s_next: &[f64],
        a_next: &[f64],
        done: bool,
    ) -> Result<f64, Td3Error> {
        if done {
            return Ok(r);
        }
        let mask = self.masking.mask_for(s_next, a_next)?;
        let mut input = Vec::with_capacity(critic_width(
            self.state_dim,
            self.action_dim,
            self.masking.uses_mask_channel(),
        ));
        push_critic_input(&mut input, s_next, a_next, mask.as_ref());
        let q1 = self.critic1_target.forward_batch(&input, 1)?.output()[0];
        let q2 = self.critic2_target.forward_batch(&input, 1)?.output()[0];
        Ok(r + self.cfg.gamma * q1.min(q2))
    }

    /// One TD3 update on a sampled batch. Draw order: smoothing noise for
    /// every batch row, in row order (masking itself consumes no rng).
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        batch: &[&Transition],
        rng: &mut R,
    ) -> Result<Td3Diag, Td3Error> {
        if batch.is_empty() {
            return Err(Td3Error::EmptyBatch);
        }
        let n = batch.len();
        let cw = critic_width(
            self.state_dim,
            self.action_dim,
            self.masking.uses_mask_channel(),
        );
        let mut diag = Td3Diag::default();

        // Targets.
        let mut target_in = Vec::with_capacity(n * cw);
        for t in batch {
            let a_next = self.smoothed_target_action(&t.s_next, rng)?;
            let mask = self.masking.mask_for(&t.s_next, &a_next)?;
            push_critic_input(&mut target_in, &t.s_next, &a_next, mask.as_ref());
        }
        let q1n = self.critic1_target.forward_batch(&target_in, n)?;
        let q2n = self.critic2_target.forward_batch(&target_in, n)?;
        let y: Vec<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if t.done {
                    t.r
                } else {
                    t.r + self.cfg.gamma * q1n.output()[i].min(q2n.output()[i])
                }
            })
            .collect();

        // Critic regression on the stored actions.
        let mut critic_in = Vec::with_capacity(n * cw);
        for t in batch {
            let mask = self.masking.mask_for(&t.s, &t.a)?;
            if let Some(m) = &mask {
                if m.cardinality() == 0 {
                    diag.degenerate_masks += 1;
                }
            }
            push_critic_input(&mut critic_in, &t.s, &t.a, mask.as_ref());
        }
        let lr = self.cfg.lr;
        let mut total_loss = 0.0;
        for (critic, opt) in [
            (&mut self.critic1, &mut self.opt_c1),
            (&mut self.critic2, &mut self.opt_c2),
        ] {
            let trace = critic.forward_batch(&critic_in, n)?;
            let (loss, grad) = mse_loss(trace.output(), &y)?;
            let (grads, _) = critic.backward_batch(&trace, &grad)?;
            opt.step(critic, &grads, lr)?;
            total_loss += loss;
        }
        diag.critic_loss = total_loss / 2.0;

        self.updates += 1;
        if self.updates.is_multiple_of(self.cfg.policy_delay) {
            diag.actor_loss = Some(self.actor_update(batch)?);
            diag.did_actor_update = true;
            self.actor_updates += 1;
            soft_update(self.actor_target.net_mut(), self.actor.net(), self.cfg.tau);
            soft_update(&mut self.critic1_target, &self.critic1, self.cfg.tau);
            soft_update(&mut self.critic2_target, &self.critic2, self.cfg.tau);
        }
        Ok(diag)
    }

    /// Deterministic-policy-gradient step: ascend `Q1(s, pi(s))` with the
    /// evaluation mask applied to the actor's own action.
    fn actor_update(&mut self, batch: &[&Transition]) -> Result<f64, Td3Error> {
        let n = batch.len();
        let mut states = Vec::with_capacity(n * self.state_dim);
        for t in batch {
            states.extend_from_slice(&t.s);
        }
        let (actor_trace, actions) = self.actor.action_batch(&states, n)?;

        let cw = critic_width(
            self.state_dim,
            self.action_dim,
            self.masking.uses_mask_channel(),
        );
        let mut critic_in = Vec::with_capacity(n * cw);
        let mut masks: Vec<Option<Mask>> = Vec::with_capacity(n);
        for (i, t) in batch.iter().enumerate() {
            let a = &actions[i * self.action_dim..(i + 1) * self.action_dim];
            let mask = self.masking.mask_for(&t.s, a)?;
            push_critic_input(&mut critic_in, &t.s, a, mask.as_ref());
            masks.push(mask);
        }
        let trace = self.critic1.forward_batch(&critic_in, n)?;
        let q_mean = trace.output().iter().sum::<f64>() / n as f64;

        // dL/dQ = -1/n (gradient ascent on mean Q).
        let out_grad = vec![-1.0 / n as f64; n];
        let (_, d_input) = self.critic1.backward_batch(&trace, &out_grad)?;
        let mut d_action = vec![0.0; n * self.action_dim];
        for i in 0..n {
            for j in 0..self.action_dim {
                let keep = masks[i].as_ref().is_none_or(|m| m.get(j));
                if keep {
                    d_action[i * self.action_dim + j] = d_input[i * cw + self.state_dim + j];
                }
            }
        }
        let grads = self.actor.grads_from_action_grad(&actor_trace, &d_action)?;
        self.opt_actor.step(self.actor.net_mut(), &grads, self.cfg.lr)?;
        Ok(-q_mean)
    }
}

pub fn critic_net<R: Rng + ?Sized>(in_dim: usize, hidden: &[usize], rng: &mut R) -> DenseNet {
    let mut dims = vec![in_dim];
    dims.extend_from_slice(hidden);
    dims.push(1);
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Identity);
    DenseNet::new(&dims, &acts, rng)
}
