//! Core library for state-wise action refinement experiments: dense nets
//! with analytic gradients, instance-wise stochastic selectors, synthetic
//! selection benchmarks, small control environments with redundant action
//! dimensions, and TD3-based agents that learn which action dimensions
//! matter.

pub mod agents;
pub mod envs;
pub mod nn;
pub mod rng;
pub mod selector;
pub mod synth;
pub mod td3;
