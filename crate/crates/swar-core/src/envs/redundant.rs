//! Wrapper that widens the action space with `n_red` injected dimensions
//! the base environment never sees. The ground-truth mask (1 on base dims,
//! 0 on injected dims) is the oracle for selector evaluation.

use super::{Env, EnvError, EnvSpec, StepOutcome};
use crate::selector::Mask;
use rand::RngCore;

pub struct RedundantWrapper {
    base: Box<dyn Env>,
    spec: EnvSpec,
    ground_truth: Mask,
    n_red: usize,
}

impl RedundantWrapper {
    pub fn new(base: Box<dyn Env>, n_red: usize) -> Self {
        let base_spec = base.spec().clone();
        let mut action_low = base_spec.action_low.clone();
        let mut action_high = base_spec.action_high.clone();
        action_low.extend(std::iter::repeat_n(-1.0, n_red));
        action_high.extend(std::iter::repeat_n(1.0, n_red));
        let mut bits = vec![1u8; base_spec.action_dim];
        bits.extend(std::iter::repeat_n(0u8, n_red));
        let spec = EnvSpec {
            name: base_spec.name,
            state_dim: base_spec.state_dim,
            action_dim: base_spec.action_dim + n_red,
            action_low,
            action_high,
            horizon: base_spec.horizon,
        };
        Self {
            base,
            spec,
            ground_truth: Mask::new(bits).expect("bits are 0/1"),
            n_red,
        }
    }

    pub fn n_red(&self) -> usize {
        self.n_red
    }

    pub fn base_action_dim(&self) -> usize {
        self.spec.action_dim - self.n_red
    }

    /// 1 on base action dims, 0 on injected dims.
    pub fn ground_truth_mask(&self) -> &Mask {
        &self.ground_truth
    }

    pub fn base_mut(&mut self) -> &mut dyn Env {
        self.base.as_mut()
    }
}

impl Env for RedundantWrapper {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.base.reset(rng)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if action.len() != self.spec.action_dim {
            return Err(EnvError::ActionDim {
                expected: self.spec.action_dim,
                got: action.len(),
            });
        }
        self.base.step(&action[..self.base_action_dim()])
    }
}
