//! Reward learning from occluded, noisy demonstrations.
//!
//! The expert is modelled as a Boltzmann-rational agent in a known MDP whose
//! reward is linear in a set of features. The learner sees each step of a
//! demonstration through a stochastic observation model, or not at all when
//! the step is occluded. [`inference::mmap_birl`] finds the weights that
//! maximise the posterior with every hidden step summed out exactly.
//!
//! ```no_run
//! use mmap_birl::envs::{build_forestworld, ForestworldSpec};
//! use mmap_birl::experiment::{expert_policy, generate_demonstrations, ExpertModel};
//! use mmap_birl::inference::{mmap_birl, AscentConfig};
//! use mmap_birl::observation::{OcclusionMode, OcclusionSpec};
//! use mmap_birl::reward::GaussianPrior;
//!
//! let env = build_forestworld(&ForestworldSpec::default())?;
//! let expert = expert_policy(&env, ExpertModel::Optimal, 1.0)?;
//! let occlusion = OcclusionSpec::new(OcclusionMode::ContiguousBlock, 0.2)?;
//! let (batch, _) = generate_demonstrations(&env, &expert, 10, occlusion, 10, 7)?;
//! let prior = GaussianPrior::shared(3, -1.0, 0.5)?;
//! let (weights, _) = mmap_birl(&env.mdp, &batch, &env.observation, &env.features, &prior, &AscentConfig::default())?;
//! println!("{:?}", weights.values());
//! # Ok::<(), mmap_birl::Error>(())
//! ```

pub mod baselines;
pub mod cli;
pub mod config;
pub mod envs;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod inference;
pub mod mdp;
pub mod observation;
pub mod reward;
pub mod seed;

pub use error::{Error, Result};
