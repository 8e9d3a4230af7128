//! TD3 with an in-the-loop action selector.
//!
//! Twin critics consume `[s, m (.) a, m]`, twin baselines consume `[s, a]`,
//! and the selector earns, per batch row, the baseline-minus-critic loss
//! difference less the cardinality penalty. Masks fed to critics during
//! regression are sampled; the actor's critic query uses the thresholded
//! evaluation mask.

use super::{probe_buffer_selection, AgentError, RlAgent, StepDiag};
use crate::envs::Transition;
use crate::nn::{mse_rows, soft_update, AdamState, DenseNet};
use crate::selector::{
    clamp_probs, sample_mask, selector_grads_batch, selector_reward, threshold_mask, Curriculum,
    Mask, SelectionPenaltyParams, SelectorModel,
};
use crate::td3::{critic_net, critic_width, push_critic_input, BoundedActor, ReplayBuffer, Td3Config};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct TdSwarConfig {
    pub td3: Td3Config,
    pub selector_hidden: Vec<usize>,
    pub selector_lr: f64,
    pub curriculum: Curriculum,
    /// Feed the selector only the state instead of `[s, a]`.
    pub state_only_selector: bool,
}

impl TdSwarConfig {
    /// Defaults with the curriculum ramp spread over 80% of the planned
    /// update count.
    pub fn for_updates(planned_updates: u64) -> Self {
        Self {
            td3: Td3Config::default(),
            selector_hidden: vec![100, 200],
            selector_lr: 3e-4,
            curriculum: Curriculum::defaults(((planned_updates as f64) * 0.8).max(1.0) as u64),
            state_only_selector: false,
        }
    }
}

pub struct TdSwarAgent {
    cfg: TdSwarConfig,
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
    baseline1: DenseNet,
    baseline2: DenseNet,
    baseline1_target: DenseNet,
    baseline2_target: DenseNet,
    selector: SelectorModel,
    opt_actor: AdamState,
    opt_c1: AdamState,
    opt_c2: AdamState,
    opt_b1: AdamState,
    opt_b2: AdamState,
    opt_sel: AdamState,
    buffer: ReplayBuffer,
    updates: u64,
    actor_updates: u64,
    last_lambda: f64,
    last_p_r: f64,
}

impl TdSwarAgent {
    /// Initialization draw order: actor, critic 1, critic 2, baseline 1,
    /// baseline 2, selector.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        low: &[f64],
        high: &[f64],
        cfg: TdSwarConfig,
        capacity: usize,
        rng: &mut R,
    ) -> Self {
        let action_dim = low.len();
        let actor = BoundedActor::new(state_dim, &cfg.td3.hidden, low, high, rng);
        let cw = critic_width(state_dim, action_dim, true);
        let bw = critic_width(state_dim, action_dim, false);
        let critic1 = critic_net(cw, &cfg.td3.hidden, rng);
        let critic2 = critic_net(cw, &cfg.td3.hidden, rng);
        let baseline1 = critic_net(bw, &cfg.td3.hidden, rng);
        let baseline2 = critic_net(bw, &cfg.td3.hidden, rng);
        let sel_in = if cfg.state_only_selector {
            state_dim
        } else {
            state_dim + action_dim
        };
        let selector = SelectorModel::new(sel_in, action_dim, &cfg.selector_hidden, rng);
        let (lambda0, p_r0) = cfg.curriculum.at(0);
        Self {
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            baseline1_target: baseline1.clone(),
            baseline2_target: baseline2.clone(),
            opt_actor: AdamState::new(actor.net()),
            opt_c1: AdamState::new(&critic1),
            opt_c2: AdamState::new(&critic2),
            opt_b1: AdamState::new(&baseline1),
            opt_b2: AdamState::new(&baseline2),
            opt_sel: AdamState::new(selector.net()),
            actor,
            critic1,
            critic2,
            baseline1,
            baseline2,
            selector,
            buffer: ReplayBuffer::new(capacity),
            cfg,
            state_dim,
            action_dim,
            low: low.to_vec(),
            high: high.to_vec(),
            updates: 0,
            actor_updates: 0,
            last_lambda: lambda0,
            last_p_r: p_r0,
        }
    }

    pub fn selector(&self) -> &SelectorModel {
        &self.selector
    }

    pub fn selector_mut(&mut self) -> &mut SelectorModel {
        &mut self.selector
    }

    pub fn update_count(&self) -> u64 {
        self.updates
    }

    pub fn actor_update_count(&self) -> u64 {
        self.actor_updates
    }

    fn selector_input(&self, out: &mut Vec<f64>, s: &[f64], a: &[f64]) {
        out.extend_from_slice(s);
        if !self.cfg.state_only_selector {
            out.extend_from_slice(a);
        }
    }

    fn eval_mask(&self, s: &[f64], a: &[f64]) -> Result<Mask, AgentError> {
        let mut input = Vec::with_capacity(self.state_dim + self.action_dim);
        self.selector_input(&mut input, s, a);
        let probs = self.selector.select_probs(&input)?;
        Ok(threshold_mask(&probs, 0.5))
    }
}

impl RlAgent for TdSwarAgent {
    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn warmup_steps(&self) -> u64 {
        self.cfg.td3.warmup_steps
    }

    fn act(
        &self,
        s: &[f64],
        explore: bool,
        step: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>, AgentError> {
        if explore && step < self.cfg.td3.warmup_steps {
            return Ok((0..self.action_dim)
                .map(|j| rng.random_range(self.low[j]..self.high[j]))
                .collect());
        }
        let mut a = self.actor.action(s).map_err(|e| AgentError::at(step, e))?;
        if explore {
            for j in 0..self.action_dim {
                let hr = (self.high[j] - self.low[j]) / 2.0;
                let noise: f64 =
                    rng.sample::<f64, _>(StandardNormal) * self.cfg.td3.explore_sigma * hr;
                a[j] = (a[j] + noise).clamp(self.low[j], self.high[j]);
            }
        }
        Ok(a)
    }

    fn observe(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// Draw order per update: batch indices, then per row target-smoothing
    /// noise, then next-state masks, then current masks.
    fn update(&mut self, step: u64, rng: &mut ChaCha8Rng) -> Result<StepDiag, AgentError> {
        let n = self.cfg.td3.batch;
        let sd = self.state_dim;
        let ad = self.action_dim;
        let cw = critic_width(sd, ad, true);
        let bw = critic_width(sd, ad, false);
        let at = |e: &dyn std::fmt::Display| AgentError::AtStep {
            step,
            msg: e.to_string(),
        };

        // Flatten the sampled batch so the buffer borrow ends here.
        let (s, a, r, s_next, done) = {
            let batch = self.buffer.sample(n, rng).map_err(|e| at(&e))?;
            let mut s = Vec::with_capacity(n * sd);
            let mut a = Vec::with_capacity(n * ad);
            let mut r = Vec::with_capacity(n);
            let mut s2 = Vec::with_capacity(n * sd);
            let mut done = Vec::with_capacity(n);
            for t in batch {
                s.extend_from_slice(&t.s);
                a.extend_from_slice(&t.a);
                r.push(t.r);
                s2.extend_from_slice(&t.s_next);
                done.push(t.done);
            }
            (s, a, r, s2, done)
        };

        let (lambda, p_r) = self.cfg.curriculum.at(self.updates);
        self.last_lambda = lambda;
        self.last_p_r = p_r;
        let pen = SelectionPenaltyParams {
            lambda,
            p_r,
            d: ad,
        };

        // Smoothed next actions, row by row.
        let mut a_next = Vec::with_capacity(n * ad);
        for i in 0..n {
            let row = &s_next[i * sd..(i + 1) * sd];
            let mut ai = self
                .actor_target
                .action(row)
                .map_err(|e| at(&e))?;
            for j in 0..ad {
                let hr = (self.high[j] - self.low[j]) / 2.0;
                let eps: f64 =
                    rng.sample::<f64, _>(StandardNormal) * self.cfg.td3.smooth_sigma * hr;
                let clip = self.cfg.td3.smooth_clip * hr;
                ai[j] = (ai[j] + eps.clamp(-clip, clip)).clamp(self.low[j], self.high[j]);
            }
            a_next.extend_from_slice(&ai);
        }

        // Next-state masks sampled from the selector.
        let mut sel_in_next = Vec::with_capacity(n * (sd + ad));
        for i in 0..n {
            let (srow, arow) = (&s_next[i * sd..(i + 1) * sd], &a_next[i * ad..(i + 1) * ad]);
            self.selector_input(&mut sel_in_next, srow, arow);
        }
        let probs_next = self
            .selector
            .forward_batch(&sel_in_next, n)
            .map_err(|e| at(&e))?;
        let m_next: Vec<Mask> = (0..n)
            .map(|i| {
                let row = clamp_probs(&probs_next.output()[i * ad..(i + 1) * ad]);
                sample_mask(&row, rng)
            })
            .collect();

        // Twin-min targets: masked critics and unmasked baselines.
        let mut cin_next = Vec::with_capacity(n * cw);
        let mut bin_next = Vec::with_capacity(n * bw);
        for i in 0..n {
            let (srow, arow) = (&s_next[i * sd..(i + 1) * sd], &a_next[i * ad..(i + 1) * ad]);
            push_critic_input(&mut cin_next, srow, arow, Some(&m_next[i]));
            push_critic_input(&mut bin_next, srow, arow, None);
        }
        let q1n = self.critic1_target.forward_batch(&cin_next, n).map_err(|e| at(&e))?;
        let q2n = self.critic2_target.forward_batch(&cin_next, n).map_err(|e| at(&e))?;
        let b1n = self.baseline1_target.forward_batch(&bin_next, n).map_err(|e| at(&e))?;
        let b2n = self.baseline2_target.forward_batch(&bin_next, n).map_err(|e| at(&e))?;
        let gamma = self.cfg.td3.gamma;
        let bootstrap = |i: usize, v: f64| if done[i] { r[i] } else { r[i] + gamma * v };
        let y_c: Vec<f64> = (0..n)
            .map(|i| bootstrap(i, q1n.output()[i].min(q2n.output()[i])))
            .collect();
        let y_b: Vec<f64> = (0..n)
            .map(|i| bootstrap(i, b1n.output()[i].min(b2n.output()[i])))
            .collect();

        // Current masks, sampled, shared by critic regression and the
        // selector's policy gradient.
        let mut sel_in = Vec::with_capacity(n * (sd + ad));
        for i in 0..n {
            self.selector_input(&mut sel_in, &s[i * sd..(i + 1) * sd], &a[i * ad..(i + 1) * ad]);
        }
        let probs_cur = self.selector.forward_batch(&sel_in, n).map_err(|e| at(&e))?;
        let masks: Vec<Mask> = (0..n)
            .map(|i| {
                let row = clamp_probs(&probs_cur.output()[i * ad..(i + 1) * ad]);
                sample_mask(&row, rng)
            })
            .collect();
        let degenerate = masks.iter().filter(|m| m.cardinality() == 0).count();

        let mut cin = Vec::with_capacity(n * cw);
        let mut bin = Vec::with_capacity(n * bw);
        for i in 0..n {
            let (srow, arow) = (&s[i * sd..(i + 1) * sd], &a[i * ad..(i + 1) * ad]);
            push_critic_input(&mut cin, srow, arow, Some(&masks[i]));
            push_critic_input(&mut bin, srow, arow, None);
        }

        let lr = self.cfg.td3.lr;
        let mut row_losses = vec![0.0; 2 * n];
        for (k, (net, opt, input, y)) in [
            (&mut self.critic1, &mut self.opt_c1, &cin, &y_c),
            (&mut self.critic2, &mut self.opt_c2, &cin, &y_c),
            (&mut self.baseline1, &mut self.opt_b1, &bin, &y_b),
            (&mut self.baseline2, &mut self.opt_b2, &bin, &y_b),
        ]
        .into_iter()
        .enumerate()
        {
            let trace = net.forward_batch(input, n).map_err(|e| at(&e))?;
            let (rows, grad) = mse_rows(trace.output(), y, n);
            let (grads, _) = net.backward_batch(&trace, &grad).map_err(|e| at(&e))?;
            opt.step(net, &grads, lr).map_err(|e| at(&e))?;
            // Rows 0..n accumulate twin-mean critic losses, n..2n baselines.
            let base = if k < 2 { 0 } else { n };
            for i in 0..n {
                row_losses[base + i] += rows[i] / 2.0;
            }
        }
        let critic_loss = row_losses[..n].iter().sum::<f64>() / n as f64;

        // Per-sample selector rewards from the loss difference.
        let rewards: Vec<f64> = (0..n)
            .map(|i| selector_reward(row_losses[n + i], row_losses[i], &masks[i], &pen))
            .collect();
        let reward_mean = rewards.iter().sum::<f64>() / n as f64;
        let sel_grads =
            selector_grads_batch(&self.selector, &sel_in, &masks, &rewards).map_err(|e| at(&e))?;
        self.opt_sel
            .step(self.selector.net_mut(), &sel_grads, self.cfg.selector_lr)
            .map_err(|e| at(&e))?;

        self.updates += 1;
        let mut diag = StepDiag {
            critic_loss,
            actor_loss: None,
            selector_reward: Some(reward_mean),
            degenerate_masks: degenerate,
        };
        if self.updates.is_multiple_of(self.cfg.td3.policy_delay) {
            diag.actor_loss = Some(self.actor_step(&s, n, step)?);
            self.actor_updates += 1;
            let tau = self.cfg.td3.tau;
            soft_update(self.actor_target.net_mut(), self.actor.net(), tau);
            soft_update(&mut self.critic1_target, &self.critic1, tau);
            soft_update(&mut self.critic2_target, &self.critic2, tau);
            soft_update(&mut self.baseline1_target, &self.baseline1, tau);
            soft_update(&mut self.baseline2_target, &self.baseline2, tau);
        }
        Ok(diag)
    }

    fn selection_mask(&self, s: &[f64], a: &[f64]) -> Result<Option<Mask>, AgentError> {
        self.eval_mask(s, a).map(Some)
    }

    fn probe_selection(
        &self,
        ground_truth: &Mask,
        n: usize,
    ) -> Result<Option<(f64, f64)>, AgentError> {
        probe_buffer_selection(&self.buffer, |s, a| self.eval_mask(s, a), ground_truth, n)
            .map(Some)
    }

    fn curriculum_state(&self) -> Option<(f64, f64)> {
        Some((self.last_lambda, self.last_p_r))
    }
}

impl TdSwarAgent {
    /// Deterministic-policy-gradient step with the evaluation mask applied
    /// to the actor's own action.
    fn actor_step(&mut self, s: &[f64], n: usize, step: u64) -> Result<f64, AgentError> {
        let sd = self.state_dim;
        let ad = self.action_dim;
        let cw = critic_width(sd, ad, true);
        let at = |e: &dyn std::fmt::Display| AgentError::AtStep {
            step,
            msg: e.to_string(),
        };
        let (atrace, actions) = self.actor.action_batch(s, n).map_err(|e| at(&e))?;

        let mut sel_in = Vec::with_capacity(n * (sd + ad));
        for i in 0..n {
            self.selector_input(&mut sel_in, &s[i * sd..(i + 1) * sd], &actions[i * ad..(i + 1) * ad]);
        }
        let probs = self.selector.forward_batch(&sel_in, n).map_err(|e| at(&e))?;
        let masks: Vec<Mask> = (0..n)
            .map(|i| threshold_mask(&probs.output()[i * ad..(i + 1) * ad], 0.5))
            .collect();

        let mut cin = Vec::with_capacity(n * cw);
        for i in 0..n {
            push_critic_input(
                &mut cin,
                &s[i * sd..(i + 1) * sd],
                &actions[i * ad..(i + 1) * ad],
                Some(&masks[i]),
            );
        }
        let ctrace = self.critic1.forward_batch(&cin, n).map_err(|e| at(&e))?;
        let q_mean = ctrace.output().iter().sum::<f64>() / n as f64;
        let out_grad = vec![-1.0 / n as f64; n];
        let (_, d_input) = self
            .critic1
            .backward_batch(&ctrace, &out_grad)
            .map_err(|e| at(&e))?;
        let mut d_action = vec![0.0; n * ad];
        for i in 0..n {
            for j in 0..ad {
                if masks[i].get(j) {
                    d_action[i * ad + j] = d_input[i * cw + sd + j];
                }
            }
        }
        let grads = self
            .actor
            .grads_from_action_grad(&atrace, &d_action)
            .map_err(|e| at(&e))?;
        self.opt_actor
            .step(self.actor.net_mut(), &grads, self.cfg.td3.lr)
            .map_err(|e| at(&e))?;
        Ok(-q_mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn tiny_cfg(updates: u64) -> TdSwarConfig {
        TdSwarConfig {
            td3: Td3Config {
                hidden: vec![12, 12],
                batch: 8,
                warmup_steps: 4,
                ..Td3Config::default()
            },
            selector_hidden: vec![16],
            ..TdSwarConfig::for_updates(updates)
        }
    }

    fn filled_agent(cfg: TdSwarConfig, n: usize, seed: u64) -> TdSwarAgent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agent = TdSwarAgent::new(2, &[-2.0, -1.0], &[2.0, 1.0], cfg, 256, &mut rng);
        let mut data_rng = ChaCha8Rng::seed_from_u64(seed + 100);
        for _ in 0..n {
            let s: Vec<f64> = vec![
                data_rng.random_range(-1.0..1.0),
                data_rng.random_range(-1.0..1.0),
            ];
            let a = vec![
                data_rng.random_range(-2.0..2.0),
                data_rng.random_range(-1.0..1.0),
            ];
            // Transition depends only on the first action dim.
            let s_next = vec![0.9 * s[0] + 0.1 * a[0], 0.9 * s[1]];
            let r = -s[0].abs();
            agent.observe(Transition {
                s,
                a,
                r,
                s_next,
                done: false,
            });
        }
        agent
    }

    fn saturate_selector(agent: &mut TdSwarAgent, bias: f64) {
        for layer in agent.selector_mut().net_mut().layers_mut() {
            layer.weights_mut().fill(0.0);
            layer.biases_mut().fill(0.0);
        }
        let last = agent
            .selector_mut()
            .net_mut()
            .layers_mut()
            .last_mut()
            .unwrap();
        last.biases_mut().fill(bias);
    }

    #[test]
    fn penalty_arithmetic_all_ones_101_dims() {
        let pen = SelectionPenaltyParams {
            lambda: 0.2,
            p_r: 0.0,
            d: 101,
        };
        let ones = Mask::ones(101);
        let r = selector_reward(0.7, 0.3, &ones, &pen);
        assert!((r - (0.4 - 20.2)).abs() < 1e-12);
    }

    #[test]
    fn reward_invariant_to_common_loss_shift() {
        let pen = SelectionPenaltyParams {
            lambda: 0.1,
            p_r: 0.3,
            d: 4,
        };
        let m = Mask::new(vec![1, 0, 1, 0]).unwrap();
        let base = selector_reward(0.8, 0.5, &m, &pen);
        for shift in [-3.0, 0.25, 10.0] {
            let shifted = selector_reward(0.8 + shift, 0.5 + shift, &m, &pen);
            assert!((shifted - base).abs() < 1e-9, "shift {shift}");
        }
    }

    #[test]
    fn zero_lr_selector_stays_at_initialization() {
        let mut cfg = tiny_cfg(100);
        cfg.selector_lr = 0.0;
        let mut agent = filled_agent(cfg, 32, 0);
        let before: Vec<Vec<f64>> = agent
            .selector()
            .net()
            .layers()
            .iter()
            .map(|l| l.weights().to_vec())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for step in 0..20 {
            agent.update(step, &mut rng).unwrap();
        }
        for (l, w) in agent.selector().net().layers().iter().enumerate() {
            assert_eq!(w.weights(), before[l].as_slice(), "layer {l}");
        }
        // Initialization statistics: probabilities near one half.
        let probs = agent.selector().select_probs(&[0.2, -0.1, 0.5, 0.3]).unwrap();
        for p in probs {
            assert!((0.25..=0.75).contains(&p), "prob {p}");
        }
    }

    #[test]
    fn all_ones_selector_zero_lambda_losses_converge() {
        // With the selector pinned to all-ones and lambda = 0, critics and
        // baselines see equivalent information and their losses on a fixed
        // buffer converge to each other.
        let mut cfg = tiny_cfg(4000);
        cfg.selector_lr = 0.0;
        cfg.curriculum = Curriculum {
            lambda_start: 0.0,
            lambda_end: 0.0,
            p_r_start: 0.0,
            p_r_end: 0.0,
            total_steps: 1,
        };
        cfg.td3.gamma = 0.0;
        cfg.td3.lr = 1e-3;
        cfg.td3.smooth_sigma = 0.0;
        let mut rng_init = ChaCha8Rng::seed_from_u64(2);
        let mut agent = TdSwarAgent::new(2, &[-2.0, -1.0], &[2.0, 1.0], cfg, 256, &mut rng_init);
        for _ in 0..16 {
            agent.observe(Transition {
                s: vec![0.3, -0.4],
                a: vec![1.1, 0.2],
                r: -0.6,
                s_next: vec![0.38, -0.36],
                done: false,
            });
        }
        saturate_selector(&mut agent, 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut last = StepDiag::default();
        let mut baseline_loss = 0.0;
        for step in 0..2000 {
            last = agent.update(step, &mut rng).unwrap();
            // Reward = baseline loss - critic loss when both penalties are 0.
            baseline_loss = last.critic_loss + last.selector_reward.unwrap();
        }
        let lc = last.critic_loss;
        assert!(
            (lc - baseline_loss).abs() <= 0.1 * lc.max(baseline_loss).max(1e-5),
            "critic {lc} vs baseline {baseline_loss}"
        );
    }

    #[test]
    fn degenerate_masks_flagged_when_selector_emits_zeros() {
        let mut cfg = tiny_cfg(100);
        cfg.selector_lr = 0.0;
        let mut agent = filled_agent(cfg, 16, 4);
        saturate_selector(&mut agent, -30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let diag = agent.update(0, &mut rng).unwrap();
        assert_eq!(diag.degenerate_masks, 8);
    }

    #[test]
    fn actor_schedule_and_curriculum_reporting() {
        let cfg = tiny_cfg(10);
        let mut agent = filled_agent(cfg, 16, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for step in 0..9 {
            agent.update(step, &mut rng).unwrap();
        }
        assert_eq!(agent.update_count(), 9);
        assert_eq!(agent.actor_update_count(), 4);
        let (lambda, p_r) = agent.curriculum_state().unwrap();
        // Ramp covers 8 steps; the ninth update saw the endpoint values.
        assert!((lambda - 0.2).abs() < 1e-12);
        assert!(p_r.abs() < 1e-12);
    }

    #[test]
    fn nan_aborts_with_step_index() {
        let cfg = tiny_cfg(100);
        let mut agent = filled_agent(cfg, 16, 8);
        agent.selector_mut().net_mut().layers_mut()[0].weights_mut()[0] = f64::NAN;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let err = agent.update(7, &mut rng).unwrap_err();
        match err {
            AgentError::AtStep { step, .. } => assert_eq!(step, 7),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn eval_mask_uses_threshold_not_samples() {
        let cfg = tiny_cfg(100);
        let mut agent = filled_agent(cfg, 8, 10);
        saturate_selector(&mut agent, 0.4);
        // Sigmoid(0.4) > 0.5, so every dim passes the threshold
        // deterministically even though sampling would sometimes drop dims.
        let m1 = agent.selection_mask(&[0.1, 0.2], &[0.0, 0.0]).unwrap().unwrap();
        let m2 = agent.selection_mask(&[0.1, 0.2], &[0.0, 0.0]).unwrap().unwrap();
        assert_eq!(m1, Mask::ones(2));
        assert_eq!(m1, m2);
    }

    #[test]
    fn curriculum_clock_is_update_count() {
        let cfg = tiny_cfg(10);
        let mut agent = filled_agent(cfg, 16, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // External step indices are arbitrary; the ramp follows updates.
        agent.update(500, &mut rng).unwrap();
        let (lambda, _) = agent.curriculum_state().unwrap();
        assert!(lambda.abs() < 1e-12, "first update sees lambda_start");
    }
}
