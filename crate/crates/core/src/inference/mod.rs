//! Likelihood, gradients and the ascent loop.

pub mod ascent;
pub mod forward_backward;
pub mod gradient;
pub mod region;

pub use ascent::{
    ascend, initial_weights, mmap_birl, mmap_birl_from, AscentConfig, AscentResult, CacheMode,
    GradientCacheEntry, IterationRecord, MarginalLikelihood, Objective, Problem,
};
pub use forward_backward::{
    brute_force_likelihood, for_each_completion, forward_backward, PosteriorMarginals, ENUMERATION_LIMIT,
};
pub use gradient::{
    batch_log_likelihood, expected_score, likelihood_gradient, log_marginal_likelihood, policy_score,
    q_gradient, PolicyEvaluation,
};
pub use region::{gradient_reusable, reward_optimality_region, OptimalityRegion};
