//! Running one learner on one batch, shared by the CLI and the sweep runner.

use serde::{Deserialize, Serialize};

use crate::baselines::{hidden_data_em, ignore_occlusion_map_birl, EmConfig, EmRound, SegmentStart};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::inference::ascent::{mmap_birl, AscentConfig, IterationRecord};
use crate::mdp::{boltzmann, solve_optimal, StochasticPolicy};
use crate::observation::{simulate_demonstrations, GroundTruthTrajectory, ObservedTrajectory, OcclusionSpec};
use crate::reward::{FeatureWeights, GaussianPrior};
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mmap,
    Ignore,
    Em,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mmap => "mmap",
            Method::Ignore => "ignore",
            Method::Em => "em",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmap" => Ok(Method::Mmap),
            "ignore" => Ok(Method::Ignore),
            "em" => Ok(Method::Em),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// How the simulated expert acts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertModel {
    /// The optimal deterministic policy under the true reward.
    Optimal,
    /// Boltzmann over the optimal Q-values with the given sharpness.
    Boltzmann,
}

pub fn expert_policy(env: &Environment, model: ExpertModel, beta: f64) -> Result<StochasticPolicy> {
    let (pi, values) = solve_optimal(&env.mdp, &env.true_reward()?)?;
    match model {
        ExpertModel::Optimal => Ok(pi.to_stochastic()),
        ExpertModel::Boltzmann => boltzmann(&values, beta),
    }
}

/// Draw demonstrations from `env` on the `generation` sub-stream of `seed`.
pub fn generate_demonstrations(
    env: &Environment,
    expert: &StochasticPolicy,
    horizon: usize,
    occlusion: OcclusionSpec,
    count: usize,
    seed: u64,
) -> Result<(Vec<ObservedTrajectory>, Vec<GroundTruthTrajectory>)> {
    simulate_demonstrations(
        &env.mdp,
        expert,
        &env.observation,
        horizon,
        occlusion,
        count,
        SeedStream::new(seed).child("generation", &[]),
    )
}

/// Everything a learner needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSettings {
    pub prior: GaussianPrior,
    pub ascent: AscentConfig,
    pub em_max_rounds: usize,
    pub em_tolerance: f64,
    pub segment_start: SegmentStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Diagnostics {
    Iteration(IterationRecord),
    Round(EmRound),
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub weights: FeatureWeights,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostics: Vec<Diagnostics>,
}

pub fn learn(
    method: Method,
    env: &Environment,
    batch: &[ObservedTrajectory],
    settings: &LearnerSettings,
) -> Result<LearnOutcome> {
    let ascent = &settings.ascent;
    let from_ascent = |result: crate::inference::ascent::AscentResult| LearnOutcome {
        weights: result.weights,
        converged: result.converged,
        iterations: result.iterations,
        diagnostics: result.records.into_iter().map(Diagnostics::Iteration).collect(),
    };
    match method {
        Method::Mmap => {
            let (_, result) = mmap_birl(&env.mdp, batch, &env.observation, &env.features, &settings.prior, ascent)?;
            Ok(from_ascent(result))
        }
        Method::Ignore => {
            let (_, result) = ignore_occlusion_map_birl(
                &env.mdp,
                batch,
                &env.observation,
                &env.features,
                &settings.prior,
                ascent,
                settings.segment_start,
            )?;
            Ok(from_ascent(result))
        }
        Method::Em => {
            let config = EmConfig {
                inner: ascent.clone(),
                em_max_rounds: settings.em_max_rounds,
                em_tolerance: settings.em_tolerance,
            };
            let result = hidden_data_em(&env.mdp, batch, &env.observation, &env.features, &settings.prior, &config)?;
            Ok(LearnOutcome {
                weights: result.weights,
                converged: result.converged,
                iterations: result.rounds.len(),
                diagnostics: result.rounds.into_iter().map(Diagnostics::Round).collect(),
            })
        }
    }
}
