//! Comparison methods.
//!
//! [`ignore_occlusion_map_birl`] drops the occluded steps and scores each
//! visible segment on its own. [`hidden_data_em`] is an expectation-maximisation
//! learner over the hidden steps, built on the same solvers as the marginal
//! method so that the two differ only in how they handle missing data. It is a
//! reconstruction in the MAP setting, not the maximum-entropy program it is
//! named after.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::ascent::{ascend, initial_weights, AscentConfig, AscentResult, Objective, Problem};
use crate::inference::forward_backward::forward_backward;
use crate::inference::gradient::{batch_log_likelihood, PolicyEvaluation};
use crate::mdp::DiscountedMdp;
use crate::observation::{ObservationModel, ObservedTrajectory};
use crate::reward::{log_prior, FeatureMap, FeatureWeights, GaussianPrior};

/// Start distribution of a visible segment that follows an occlusion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentStart {
    /// The policy-induced state distribution at the segment's offset.
    #[default]
    Occupancy,
    /// Uniform over states.
    Uniform,
}

/// Sum of independent per-segment log-likelihoods.
pub struct SegmentLikelihood<'a> {
    model: &'a ObservationModel,
    segments: Vec<ObservedTrajectory>,
    start: SegmentStart,
}

impl<'a> SegmentLikelihood<'a> {
    pub fn new(model: &'a ObservationModel, batch: &[ObservedTrajectory], start: SegmentStart) -> Result<Self> {
        let mut segments = Vec::new();
        for traj in batch {
            for range in traj.visible_segments() {
                segments.push(match start {
                    SegmentStart::Occupancy => traj.masked_outside(range),
                    SegmentStart::Uniform => ObservedTrajectory::new(traj.records()[range].to_vec())?,
                });
            }
        }
        Ok(Self { model, segments, start })
    }

    pub fn segments(&self) -> &[ObservedTrajectory] {
        &self.segments
    }
}

impl Objective for SegmentLikelihood<'_> {
    fn evaluate(&self, mdp: &DiscountedMdp, eval: &PolicyEvaluation) -> Result<(f64, Array1<f64>)> {
        match self.start {
            // Steps outside a segment are occluded, so they marginalise to
            // the occupancy at the segment's first step.
            SegmentStart::Occupancy => batch_log_likelihood(mdp, eval, self.model, &self.segments),
            SegmentStart::Uniform => {
                let ns = mdp.num_states();
                let uniform = mdp.with_initial_distribution(Array1::from_elem(ns, 1.0 / ns as f64))?;
                batch_log_likelihood(&uniform, eval, self.model, &self.segments)
            }
        }
    }
}

fn check_inputs(mdp: &DiscountedMdp, batch: &[ObservedTrajectory], model: &ObservationModel) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::validation("demonstration batch is empty"));
    }
    model.check_compatible(mdp)
}

/// MAP reward learning that uses only the visible portions of each trajectory.
pub fn ignore_occlusion_map_birl(
    mdp: &DiscountedMdp,
    batch: &[ObservedTrajectory],
    model: &ObservationModel,
    features: &FeatureMap,
    prior: &GaussianPrior,
    config: &AscentConfig,
    start: SegmentStart,
) -> Result<(FeatureWeights, AscentResult)> {
    check_inputs(mdp, batch, model)?;
    let problem = Problem { mdp, features, prior };
    let objective = SegmentLikelihood::new(model, batch, start)?;
    let result = ascend(&problem, &objective, initial_weights(prior, config.seed), config)?;
    Ok((result.weights.clone(), result))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmConfig {
    pub inner: AscentConfig,
    pub em_max_rounds: usize,
    pub em_tolerance: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            inner: AscentConfig::default(),
            em_max_rounds: 20,
            em_tolerance: 1e-4,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        if self.em_max_rounds == 0 {
            return Err(Error::Config("em: em_max_rounds must be at least 1".into()));
        }
        if !(self.em_tolerance > 0.0 && self.em_tolerance.is_finite()) {
            return Err(Error::Config("em: em_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// `sum_{s,a} W(s,a) log pi(a|s)` for fixed posterior weights `W`.
pub struct ExpectedCompleteData {
    pub weights: Array2<f64>,
}

impl Objective for ExpectedCompleteData {
    fn evaluate(&self, _mdp: &DiscountedMdp, eval: &PolicyEvaluation) -> Result<(f64, Array1<f64>)> {
        let (ns, na, nk) = eval.score.dim();
        let log_pi = eval.boltzmann.log_probs();
        let mut value = 0.0;
        let mut grad = Array1::zeros(nk);
        for s in 0..ns {
            for a in 0..na {
                let w = self.weights[[s, a]];
                if w == 0.0 {
                    continue;
                }
                value += w * log_pi[[s, a]];
                for k in 0..nk {
                    grad[k] += w * eval.score[[s, a, k]];
                }
            }
        }
        Ok((value, grad))
    }
}

/// Posterior visit weights `W(s,a) = sum_Y sum_t Pr(s^t = s, a^t = a | Y)` and
/// the marginal log-likelihood under the same policy.
pub fn expected_visits(
    mdp: &DiscountedMdp,
    eval: &PolicyEvaluation,
    model: &ObservationModel,
    batch: &[ObservedTrajectory],
) -> Result<(f64, Array2<f64>)> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let parts: Vec<Result<(f64, Vec<(usize, f64)>)>> = batch
        .par_iter()
        .enumerate()
        .map(|(i, traj)| {
            let (ll, post) = forward_backward(mdp, &eval.boltzmann, model, traj).map_err(|e| e.in_trajectory(i))?;
            let visits = (0..post.len()).flat_map(|t| post.single_sparse(t).collect::<Vec<_>>()).collect();
            Ok((ll, visits))
        })
        .collect();
    let mut total = 0.0;
    let mut w = Array2::zeros((ns, na));
    for part in parts {
        let (ll, visits) = part?;
        total += ll;
        for (x, p) in visits {
            w[[x / na, x % na]] += p;
        }
    }
    Ok((total, w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmRound {
    pub round: usize,
    /// Lower bound on the log posterior after the round's M-step.
    pub surrogate: f64,
    /// Expected complete-data log posterior before and after the M-step.
    pub expected_before: f64,
    pub expected_after: f64,
    pub backtracks: usize,
    pub weight_change: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EmResult {
    pub weights: FeatureWeights,
    pub converged: bool,
    /// Marginal log posterior at the initial weights.
    pub initial_log_posterior: f64,
    pub rounds: Vec<EmRound>,
}

impl EmResult {
    /// Surrogate values in order, starting from the initial log posterior.
    pub fn surrogate_trace(&self) -> Vec<f64> {
        std::iter::once(self.initial_log_posterior)
            .chain(self.rounds.iter().map(|r| r.surrogate))
            .collect()
    }
}

const MAX_BACKTRACKS: usize = 40;

/// Alternate an E-step (posterior visit weights under the current weights)
/// with an M-step (ascent on the expected complete-data log posterior).
/// An M-step that lowers its objective is pulled back towards the previous
/// weights by halving until it does not.
pub fn hidden_data_em(
    mdp: &DiscountedMdp,
    batch: &[ObservedTrajectory],
    model: &ObservationModel,
    features: &FeatureMap,
    prior: &GaussianPrior,
    config: &EmConfig,
) -> Result<EmResult> {
    config.validate()?;
    check_inputs(mdp, batch, model)?;
    let inner = &config.inner;
    let solved_mdp = mdp.with_discount(inner.discount)?;
    let problem = Problem { mdp, features, prior };
    let expected = |w: &Array2<f64>, theta: &FeatureWeights| -> Result<f64> {
        let eval = PolicyEvaluation::solve(&solved_mdp, features, theta, inner.beta)?;
        let (v, _) = ExpectedCompleteData { weights: w.clone() }.evaluate(&solved_mdp, &eval)?;
        Ok(v + log_prior(theta, prior)?)
    };

    let mut theta = initial_weights(prior, inner.seed);
    let eval = PolicyEvaluation::solve(&solved_mdp, features, &theta, inner.beta)?;
    let (ll, mut visits) = expected_visits(&solved_mdp, &eval, model, batch)?;
    let mut log_posterior = ll + log_prior(&theta, prior)?;
    let initial_log_posterior = log_posterior;
    let mut rounds = Vec::new();
    let mut converged = false;
    for round in 1..=config.em_max_rounds {
        let objective = ExpectedCompleteData { weights: visits.clone() };
        let stepped = ascend(&problem, &objective, theta.clone(), inner)?.weights;
        let before = expected(&visits, &theta)?;
        let mut candidate = stepped;
        let mut after = expected(&visits, &candidate)?;
        let mut backtracks = 0;
        while after < before && backtracks < MAX_BACKTRACKS {
            let mid = (theta.values() + candidate.values()) * 0.5;
            candidate = FeatureWeights::new(mid)?;
            after = expected(&visits, &candidate)?;
            backtracks += 1;
        }
        if after < before {
            candidate = theta.clone();
            after = before;
        }
        let surrogate = log_posterior + (after - before);
        let change = candidate.max_abs_diff(&theta);
        theta = candidate;

        let eval = PolicyEvaluation::solve(&solved_mdp, features, &theta, inner.beta)?;
        let (ll, next_visits) = expected_visits(&solved_mdp, &eval, model, batch)?;
        log_posterior = ll + log_prior(&theta, prior)?;
        let visits_change = (&next_visits - &visits).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        visits = next_visits;
        rounds.push(EmRound {
            round,
            surrogate,
            expected_before: before,
            expected_after: after,
            backtracks,
            weight_change: change,
            weights: theta.values().to_vec(),
        });
        if change < config.em_tolerance || visits_change <= 1e-12 {
            converged = true;
            break;
        }
    }
    Ok(EmResult {
        weights: theta,
        converged,
        initial_log_posterior,
        rounds,
    })
}
