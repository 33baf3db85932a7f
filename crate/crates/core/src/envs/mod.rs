//! Benchmark domains and user-defined environments.

pub mod file;
pub mod forestworld;
pub mod onionworld;

use std::path::Path;

use crate::error::{Error, Result};
use crate::mdp::{solve_optimal, DeterministicPolicy, DiscountedMdp, RewardTable};
use crate::observation::ObservationModel;
use crate::reward::{reward_of, FeatureMap, FeatureWeights};

pub use file::{environment_to_text, load_environment, parse_environment};
pub use forestworld::{build_forestworld, ForestworldSpec};
pub use onionworld::{build_onionworld, simulate_sort, OnionworldSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentKind {
    Forestworld,
    /// Has a positive class, so sorts can be scored.
    Onionworld(OnionworldSpec),
    Custom,
}

/// An MDP with its features, the learner's observation model and the
/// expert's true weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub name: String,
    pub mdp: DiscountedMdp,
    pub features: FeatureMap,
    pub observation: ObservationModel,
    pub true_weights: FeatureWeights,
    pub kind: EnvironmentKind,
}

impl Environment {
    pub fn true_reward(&self) -> Result<RewardTable> {
        reward_of(&self.true_weights, &self.features)
    }

    /// Optimal policy under the true reward.
    pub fn expert_policy(&self) -> Result<DeterministicPolicy> {
        Ok(solve_optimal(&self.mdp, &self.true_reward()?)?.0)
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        self.mdp = self.mdp.with_discount(discount)?;
        Ok(self)
    }
}

/// Resolve `forestworld`, `onionworld`, or a path to an environment file.
/// `noise` replaces the builtin domains' sensor-noise rate.
pub fn resolve_environment(name: &str, noise: Option<f64>) -> Result<Environment> {
    match name {
        "forestworld" => {
            let mut spec = ForestworldSpec::default();
            if let Some(n) = noise {
                spec.tunnel_noise = n;
            }
            build_forestworld(&spec)
        }
        "onionworld" => {
            let mut spec = OnionworldSpec::default();
            if let Some(n) = noise {
                spec.prediction_noise = n;
            }
            build_onionworld(&spec)
        }
        path => {
            if noise.is_some_and(|n| n != 0.0) {
                return Err(Error::Config(format!(
                    "environment {path:?}: noise levels only apply to the builtin domains"
                )));
            }
            let path = Path::new(path);
            if !path.exists() {
                return Err(Error::Config(format!("unknown environment {:?}", path.display())));
            }
            load_environment(path)
        }
    }
}
