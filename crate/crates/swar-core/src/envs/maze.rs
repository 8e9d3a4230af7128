//! Four-reward maze: a point agent on [-1,1]^2 collecting four one-shot
//! reward sites at the corners (+-0.8, +-0.8), radius 0.15, horizon 32.
//! The observation is the 2-dim position only; collected flags are
//! internal, which makes the task partially observed by design.

use super::{Env, EnvError, EnvSpec, StepOutcome};
use rand::{Rng, RngCore};

pub const SITES: [(f64, f64); 4] = [(0.8, 0.8), (0.8, -0.8), (-0.8, 0.8), (-0.8, -0.8)];
pub const SITE_RADIUS: f64 = 0.15;
pub const STEP_SCALE: f64 = 0.1;
pub const HORIZON: usize = 32;

#[derive(Debug, Clone)]
pub struct FourRewardMaze {
    spec: EnvSpec,
    pos: [f64; 2],
    collected: [bool; 4],
    steps: usize,
}

impl FourRewardMaze {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "maze",
                state_dim: 2,
                action_dim: 2,
                action_low: vec![-1.0, -1.0],
                action_high: vec![1.0, 1.0],
                horizon: HORIZON,
            },
            pos: [0.0, 0.0],
            collected: [false; 4],
            steps: 0,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        self.pos
    }

    /// Pins the position, for tests and diagnostics.
    pub fn set_position(&mut self, x: f64, y: f64) {
        self.pos = [x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0)];
    }

    pub fn collected(&self) -> [bool; 4] {
        self.collected
    }
}

impl Env for FourRewardMaze {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.pos = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        self.collected = [false; 4];
        self.steps = 0;
        self.pos.to_vec()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if action.len() != 2 {
            return Err(EnvError::ActionDim { expected: 2, got: action.len() });
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(EnvError::NonFinite("maze action"));
        }
        if self.steps >= HORIZON {
            return Err(EnvError::EpisodeOver);
        }
        for k in 0..2 {
            let a = action[k].clamp(-1.0, 1.0);
            self.pos[k] = (self.pos[k] + STEP_SCALE * a).clamp(-1.0, 1.0);
        }
        let mut reward = 0.0;
        for (i, &(sx, sy)) in SITES.iter().enumerate() {
            if self.collected[i] {
                continue;
            }
            let d2 = (self.pos[0] - sx).powi(2) + (self.pos[1] - sy).powi(2);
            if d2 <= SITE_RADIUS * SITE_RADIUS {
                self.collected[i] = true;
                reward += 1.0;
            }
        }
        self.steps += 1;
        Ok(StepOutcome {
            obs: self.pos.to_vec(),
            reward,
            done: self.steps >= HORIZON,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn collect_once() {
        let mut env = FourRewardMaze::new();
        env.set_position(0.8, 0.8);
        let first = env.step(&[0.01, 0.0]).unwrap();
        assert_eq!(first.reward, 1.0);
        let second = env.step(&[-0.01, 0.0]).unwrap();
        assert_eq!(second.reward, 0.0, "site must pay only once");
    }

    #[test]
    fn idle_far_from_sites() {
        let mut env = FourRewardMaze::new();
        env.set_position(0.0, 0.0);
        let out = env.step(&[0.0, 0.0]).unwrap();
        assert_eq!(out.reward, 0.0);
        assert_eq!(env.position(), [0.0, 0.0]);
    }

    #[test]
    fn episode_return_at_most_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut env = FourRewardMaze::new();
        for _ in 0..50 {
            env.reset(&mut rng);
            let mut total = 0.0;
            for _ in 0..HORIZON {
                let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                total += env.step(&a).unwrap().reward;
            }
            assert!(total <= 4.0);
        }
    }

    #[test]
    fn positions_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut env = FourRewardMaze::new();
        env.reset(&mut rng);
        // Push hard into a corner, then walk randomly.
        for _ in 0..20 {
            env.step(&[1.0, 1.0]).unwrap();
        }
        assert_eq!(env.position(), [1.0, 1.0]);
        for _ in 0..12 {
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let out = env.step(&a).unwrap();
            assert!(out.obs.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn reset_uniform_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut env = FourRewardMaze::new();
        let n = 10_000;
        let mut sum = [0.0, 0.0];
        for _ in 0..n {
            let obs = env.reset(&mut rng);
            sum[0] += obs[0];
            sum[1] += obs[1];
        }
        assert!((sum[0] / n as f64).abs() < 0.05);
        assert!((sum[1] / n as f64).abs() < 0.05);
    }

    #[test]
    fn reset_clears_collected_flags() {
        let mut env = FourRewardMaze::new();
        env.set_position(-0.8, -0.8);
        env.step(&[0.0, 0.0]).unwrap();
        assert!(env.collected().iter().any(|&c| c));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        env.reset(&mut rng);
        assert!(env.collected().iter().all(|&c| !c));
    }

    #[test]
    fn episode_length_is_horizon() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut env = FourRewardMaze::new();
        env.reset(&mut rng);
        for t in 1..=HORIZON {
            let out = env.step(&[0.1, -0.1]).unwrap();
            assert_eq!(out.done, t == HORIZON);
        }
        assert!(matches!(env.step(&[0.0, 0.0]), Err(EnvError::EpisodeOver)));
    }
}
