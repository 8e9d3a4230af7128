//! Instance-wise stochastic selector: mask sampling, mask algebra, the
//! curriculum schedule on the l0 penalty, policy-gradient updates, and
//! iterative hierarchical selection.
//!
//! A selector maps an input vector to per-dimension selection probabilities
//! through a terminal sigmoid. Training reinforces sampled masks in
//! proportion to how much they reduce a downstream loss relative to an
//! unmasked baseline, minus a penalty that steers mask cardinality toward
//! `d * p_r`.

use crate::nn::{Activation, BatchTrace, DenseNet, Gradients, NnError, PROB_CLAMP};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },
    #[error("mask bits must be 0 or 1, got {0}")]
    BadBit(u8),
    #[error("target cardinality {n2} outside [{lo}, {hi}]")]
    CardinalityRange { n2: usize, lo: usize, hi: usize },
    #[error("non-finite selector reward {0}")]
    NonFiniteReward(f64),
    #[error("selector output layer must be sigmoid")]
    NotSigmoid,
}

/// Binary selection vector over `d` maskable dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    bits: Vec<u8>,
}

impl Mask {
    pub fn new(bits: Vec<u8>) -> Result<Self, SelectorError> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(SelectorError::BadBit(b));
        }
        Ok(Self { bits })
    }

    pub fn zeros(d: usize) -> Self {
        Self { bits: vec![0; d] }
    }

    pub fn ones(d: usize) -> Self {
        Self { bits: vec![1; d] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn cardinality(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i] == 1
    }

    /// Mask bits as 0.0/1.0, for concatenation into network inputs.
    pub fn to_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| b as f64).collect()
    }

    pub fn ones_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Stochastic mask generator: a dense net with a terminal sigmoid giving
/// per-dimension selection probabilities.
#[derive(Debug, Clone)]
pub struct SelectorModel {
    net: DenseNet,
}

impl SelectorModel {
    /// Relu hidden layers, sigmoid output.
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(in_dim);
        dims.extend_from_slice(hidden);
        dims.push(out_dim);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Sigmoid);
        Self {
            net: DenseNet::new(&dims, &acts, rng),
        }
    }

    pub fn from_net(net: DenseNet) -> Result<Self, SelectorError> {
        if net.layers().last().unwrap().activation() != Activation::Sigmoid {
            return Err(SelectorError::NotSigmoid);
        }
        Ok(Self { net })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }

    pub fn in_dim(&self) -> usize {
        self.net.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.net.out_dim()
    }

    /// Per-dimension selection probabilities, clamped into
    /// `[1e-7, 1 - 1e-7]`.
    pub fn select_probs(&self, x: &[f64]) -> Result<Vec<f64>, SelectorError> {
        let trace = self.net.forward_batch(x, 1)?;
        Ok(clamp_probs(trace.output()))
    }

    /// Batched raw forward pass; callers clamp the outputs before taking
    /// logs. The trace feeds the policy-gradient backward pass.
    pub fn forward_batch(&self, xs: &[f64], n: usize) -> Result<BatchTrace, SelectorError> {
        Ok(self.net.forward_batch(xs, n)?)
    }
}

pub fn clamp_probs(raw: &[f64]) -> Vec<f64> {
    raw.iter()
        .map(|&p| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        .collect()
}

/// Independent Bernoulli draw per dimension.
pub fn sample_mask<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Mask {
    let bits = probs
        .iter()
        .map(|&p| u8::from(rng.random::<f64>() < p))
        .collect();
    Mask { bits }
}

/// Keeps `x_i` where the mask selects, substitutes `z_i` elsewhere.
pub fn mask_apply(x: &[f64], mask: &Mask, z: &[f64]) -> Result<Vec<f64>, SelectorError> {
    if x.len() != mask.len() {
        return Err(SelectorError::LengthMismatch {
            context: "mask_apply",
            left: x.len(),
            right: mask.len(),
        });
    }
    if x.len() != z.len() {
        return Err(SelectorError::LengthMismatch {
            context: "mask_apply substitute",
            left: x.len(),
            right: z.len(),
        });
    }
    Ok(x.iter()
        .zip(&mask.bits)
        .zip(z)
        .map(|((&xv, &b), &zv)| if b == 1 { xv } else { zv })
        .collect())
}

/// `mask_apply` with the default substitute `z = 0`.
pub fn mask_apply_zero(x: &[f64], mask: &Mask) -> Result<Vec<f64>, SelectorError> {
    mask_apply(x, mask, &vec![0.0; x.len()])
}

/// `sum_i m_i ln p_i + (1 - m_i) ln(1 - p_i)`; probs are clamped here.
pub fn log_prob(probs: &[f64], mask: &Mask) -> f64 {
    probs
        .iter()
        .zip(&mask.bits)
        .map(|(&p, &b)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if b == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Penalty coefficients for one selector update.
#[derive(Debug, Clone, Copy)]
pub struct SelectionPenaltyParams {
    /// l0 penalty weight.
    pub lambda: f64,
    /// Target proportion of selected dimensions.
    pub p_r: f64,
    /// Maskable dimension.
    pub d: usize,
}

/// `(l_baseline - l_selected) - lambda * | |m|_0 - d * p_r |`. Higher is
/// better for the sampled mask.
pub fn selector_reward(
    l_baseline: f64,
    l_selected: f64,
    mask: &Mask,
    pen: &SelectionPenaltyParams,
) -> f64 {
    let card = mask.cardinality() as f64;
    (l_baseline - l_selected) - pen.lambda * (card - pen.d as f64 * pen.p_r).abs()
}

/// Single-sample policy-gradient ascent step on `reward * log_prob`.
///
/// Plain gradient ascent, so `reward = 0` leaves the parameters bit-for-bit
/// unchanged; with positive reward and small `lr`, the log-probability of
/// the reinforced mask does not decrease.
pub fn selector_update(
    selector: &mut SelectorModel,
    x: &[f64],
    mask: &Mask,
    reward: f64,
    lr: f64,
) -> Result<(), SelectorError> {
    if !reward.is_finite() {
        return Err(SelectorError::NonFiniteReward(reward));
    }
    let trace = selector.net.forward_batch(x, 1)?;
    let out_grad = logprob_grad(trace.output(), std::slice::from_ref(mask), &[reward]);
    let (grads, _) = selector.net.backward_batch(&trace, &out_grad)?;
    for (layer, g) in selector.net.layers_mut().iter_mut().zip(&grads.layers) {
        for (w, gw) in layer.weights_mut().iter_mut().zip(&g.dw) {
            *w += lr * gw;
        }
        for (b, gb) in layer.biases_mut().iter_mut().zip(&g.db) {
            *b += lr * gb;
        }
    }
    Ok(())
}

/// Gradients of `-(1/n) sum_i reward_i * log_prob(probs_i, mask_i)` wrt the
/// selector parameters, for a minimizing optimizer.
pub fn selector_grads_batch(
    selector: &SelectorModel,
    xs: &[f64],
    masks: &[Mask],
    rewards: &[f64],
) -> Result<Gradients, SelectorError> {
    if masks.len() != rewards.len() {
        return Err(SelectorError::LengthMismatch {
            context: "selector_grads_batch",
            left: masks.len(),
            right: rewards.len(),
        });
    }
    if let Some(&r) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(SelectorError::NonFiniteReward(r));
    }
    let n = masks.len();
    let trace = selector.net.forward_batch(xs, n)?;
    let mut out_grad = logprob_grad(trace.output(), masks, rewards);
    // Ascent on the mean reinforced log-prob = descent on its negation.
    let scale = -1.0 / n as f64;
    for g in &mut out_grad {
        *g *= scale;
    }
    let (grads, _) = selector.net.backward_batch(&trace, &out_grad)?;
    Ok(grads)
}

/// `d/dp [ reward * log_prob ]` per output element, flat over the batch.
fn logprob_grad(raw_probs: &[f64], masks: &[Mask], rewards: &[f64]) -> Vec<f64> {
    let d = raw_probs.len() / masks.len();
    let mut grad = vec![0.0; raw_probs.len()];
    for (i, (mask, &r)) in masks.iter().zip(rewards).enumerate() {
        debug_assert_eq!(mask.len(), d);
        for j in 0..d {
            let p = raw_probs[i * d + j].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            grad[i * d + j] = if mask.bits[j] == 1 {
                r / p
            } else {
                -r / (1.0 - p)
            };
        }
    }
    grad
}

/// Linear schedules for the l0 penalty weight and the target selection
/// proportion, interpolated over `total_steps` and held at the endpoints.
#[derive(Debug, Clone, Copy)]
pub struct Curriculum {
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub p_r_start: f64,
    pub p_r_end: f64,
    pub total_steps: u64,
}

impl Curriculum {
    /// Default endpoints: lambda 0 -> 0.2, p_r 0.5 -> 0.
    pub fn defaults(total_steps: u64) -> Self {
        Self {
            lambda_start: 0.0,
            lambda_end: 0.2,
            p_r_start: 0.5,
            p_r_end: 0.0,
            total_steps: total_steps.max(1),
        }
    }

    /// `(lambda, p_r)` at `step`, clamped at the endpoints.
    pub fn at(&self, step: u64) -> (f64, f64) {
        let t = (step as f64 / self.total_steps as f64).clamp(0.0, 1.0);
        (
            self.lambda_start + t * (self.lambda_end - self.lambda_start),
            self.p_r_start + t * (self.p_r_end - self.p_r_start),
        )
    }
}

/// `m_i = 1` iff `p_i >= tau`; ties select.
pub fn threshold_mask(probs: &[f64], tau: f64) -> Mask {
    Mask {
        bits: probs.iter().map(|&p| u8::from(p >= tau)).collect(),
    }
}

/// Element-wise logical OR.
pub fn mask_or(m1: &Mask, m2: &Mask) -> Result<Mask, SelectorError> {
    if m1.len() != m2.len() {
        return Err(SelectorError::LengthMismatch {
            context: "mask_or",
            left: m1.len(),
            right: m2.len(),
        });
    }
    Ok(Mask {
        bits: m1.bits.iter().zip(&m2.bits).map(|(&a, &b)| a | b).collect(),
    })
}

/// Extends `m` to cardinality exactly `n2` by switching on uniformly chosen
/// zero positions. The result is always a superset of `m`.
pub fn extend_mask<R: Rng + ?Sized>(m: &Mask, n2: usize, rng: &mut R) -> Result<Mask, SelectorError> {
    let card = m.cardinality();
    if n2 < card || n2 > m.len() {
        return Err(SelectorError::CardinalityRange {
            n2,
            lo: card,
            hi: m.len(),
        });
    }
    let complement: Vec<usize> = m
        .bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == 0)
        .map(|(i, _)| i)
        .collect();
    let extra = n2 - card;
    let mut bits = m.bits.clone();
    for idx in rand::seq::index::sample(rng, complement.len(), extra) {
        bits[complement[idx]] = 1;
    }
    Ok(Mask { bits })
}

/// Hierarchical selection: threshold the selector on the current input,
/// substitute `z` at unselected coordinates, repeat. Returns the mask of
/// each stage.
pub fn iterative_select(
    selector: &SelectorModel,
    x: &[f64],
    n_iters: usize,
    z: &[f64],
) -> Result<Vec<Mask>, SelectorError> {
    assert!(n_iters >= 1, "need at least one iteration");
    let mut cur = x.to_vec();
    let mut masks = Vec::with_capacity(n_iters);
    for _ in 0..n_iters {
        let probs = selector.select_probs(&cur)?;
        let m = threshold_mask(&probs, 0.5);
        cur = mask_apply(&cur, &m, z)?;
        masks.push(m);
    }
    Ok(masks)
}
