//! Gradient ascent on the log posterior with optimality-region caching.

use std::time::Instant;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::gradient::{batch_log_likelihood, PolicyEvaluation};
use crate::inference::region::{reward_optimality_region, OptimalityRegion};
use crate::mdp::{DeterministicPolicy, DiscountedMdp};
use crate::observation::{ObservationModel, ObservedTrajectory};
use crate::reward::{log_prior, prior_gradient_scaled, reward_of, sample_weights, FeatureMap, FeatureWeights, GaussianPrior};
use crate::seed::SeedStream;

/// What to do when a step stays inside a cached optimality region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheMode {
    /// Always re-solve the MDP.
    Off,
    /// Skip the MDP solve and Q-gradient solves, but re-evaluate the
    /// likelihood at the new weights. Yields the same iterates as `Off`.
    Exact,
    /// Reuse the cached gradient vector unchanged.
    StaleGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AscentConfig {
    pub beta: f64,
    pub step_size: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub discount: f64,
    pub max_iterations: usize,
    /// Root of the `initialization` sub-stream; set from the run seed.
    #[serde(skip)]
    pub seed: u64,
    pub prior_gradient_scale: f64,
    pub cache: CacheMode,
    /// Independent prior draws to ascend from; the best final posterior wins.
    pub restarts: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            beta: 0.03,
            step_size: 0.01,
            decay: 0.95,
            epsilon: 0.01,
            discount: 0.99,
            max_iterations: 500,
            seed: 0,
            prior_gradient_scale: 1.0,
            cache: CacheMode::Exact,
            restarts: 1,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("ascent: {what}")));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and >= 0");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size must be positive");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1)");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.prior_gradient_scale != 1.0 && self.prior_gradient_scale != 0.5 {
            return bad("prior_gradient_scale must be 1 or 0.5");
        }
        Ok(())
    }

    /// Termination threshold on the reward change, `epsilon (1 - gamma) / gamma`.
    pub fn threshold(&self) -> f64 {
        if self.discount == 0.0 {
            return self.epsilon;
        }
        self.epsilon * (1.0 - self.discount) / self.discount
    }
}

/// The data term of a log posterior, evaluated at a solved policy.
pub trait Objective: Sync {
    /// Value and gradient of the data term at `eval`.
    fn evaluate(&self, mdp: &DiscountedMdp, eval: &PolicyEvaluation) -> Result<(f64, Array1<f64>)>;
}

/// `sum_Y log sum_{Z, tau} Pr(Y, Z, tau | theta)`.
pub struct MarginalLikelihood<'a> {
    pub model: &'a ObservationModel,
    pub batch: &'a [ObservedTrajectory],
}

impl Objective for MarginalLikelihood<'_> {
    fn evaluate(&self, mdp: &DiscountedMdp, eval: &PolicyEvaluation) -> Result<(f64, Array1<f64>)> {
        batch_log_likelihood(mdp, eval, self.model, self.batch)
    }
}

/// One cached `(policy, region, gradient)` triple, plus the policy's
/// Q-gradient so cached steps can be re-evaluated exactly.
#[derive(Debug, Clone)]
pub struct GradientCacheEntry {
    pub policy: DeterministicPolicy,
    pub region: OptimalityRegion,
    pub gradient: Array1<f64>,
    dq: ndarray::Array3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Log posterior at the iterate; absent when a stale gradient skipped it.
    pub log_posterior: Option<f64>,
    pub gradient_norm: f64,
    pub step_size: f64,
    /// Max-norm change of the reward table; absent at the starting point.
    pub reward_change: Option<f64>,
    pub cache_hit: bool,
    pub region_crossed: bool,
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub elapsed_s: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub weights: FeatureWeights,
    pub converged: bool,
    pub iterations: usize,
    pub cache_entries: usize,
    pub cache_hits: usize,
    pub log_posterior: f64,
    pub records: Vec<IterationRecord>,
}

/// The fixed pieces of a learning problem.
pub struct Problem<'a> {
    pub mdp: &'a DiscountedMdp,
    pub features: &'a FeatureMap,
    pub prior: &'a GaussianPrior,
}

struct Point {
    eval: PolicyEvaluation,
    log_posterior: Option<f64>,
    gradient: Array1<f64>,
}

fn posterior_at(
    problem: &Problem<'_>,
    mdp: &DiscountedMdp,
    objective: &dyn Objective,
    eval: PolicyEvaluation,
    config: &AscentConfig,
) -> Result<Point> {
    let (ll, g_lh) = objective.evaluate(mdp, &eval)?;
    let lp = log_prior(&eval.weights, problem.prior)?;
    let g_pr = prior_gradient_scaled(&eval.weights, problem.prior, config.prior_gradient_scale)?;
    Ok(Point {
        eval,
        log_posterior: Some(ll + lp),
        gradient: g_lh + g_pr,
    })
}

fn norm(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient ascent from `initial`. Each step moves `theta += delta_n * grad`
/// with `delta_n` decaying geometrically, and stops once the reward table moves
/// by at most `epsilon (1 - gamma) / gamma` in max-norm.
pub fn ascend(
    problem: &Problem<'_>,
    objective: &dyn Objective,
    initial: FeatureWeights,
    config: &AscentConfig,
) -> Result<AscentResult> {
    config.validate()?;
    if initial.len() != problem.features.num_features() {
        return Err(Error::DimensionMismatch {
            what: "initial weights",
            expected: problem.features.num_features(),
            found: initial.len(),
        });
    }
    let started = Instant::now();
    let mdp = problem.mdp.with_discount(config.discount)?;
    let features = problem.features;
    let threshold = config.threshold();

    let eval = PolicyEvaluation::solve(&mdp, features, &initial, config.beta)?;
    let mut cache: Vec<GradientCacheEntry> = Vec::new();
    let mut current = 0usize;
    let mut point = posterior_at(problem, &mdp, objective, eval, config)?;
    if config.cache != CacheMode::Off {
        cache.push(GradientCacheEntry {
            policy: point.eval.optimal.clone(),
            region: reward_optimality_region(&mdp, &point.eval.optimal)?,
            gradient: point.gradient.clone(),
            dq: point.eval.dq.clone(),
        });
    }
    let mut records = vec![IterationRecord {
        iteration: 0,
        log_posterior: point.log_posterior,
        gradient_norm: norm(&point.gradient),
        step_size: 0.0,
        reward_change: None,
        cache_hit: false,
        region_crossed: false,
        weights: point.eval.weights.values().to_vec(),
        elapsed_s: Some(started.elapsed().as_secs_f64()),
    }];
    let mut trace = vec![point.eval.weights.values().to_vec()];

    let mut step = config.step_size;
    let mut cache_hits = 0;
    let mut converged = false;
    let mut iterations = 0;
    for iteration in 1..=config.max_iterations {
        iterations = iteration;
        let theta_new = point.eval.weights.values() + &(&point.gradient * step);
        trace.push(theta_new.to_vec());
        if theta_new.iter().any(|v| !v.is_finite()) || point.gradient.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration, trace });
        }
        let weights_new = FeatureWeights::new(theta_new)?;
        let reward_new = reward_of(&weights_new, features)?;
        let delta = reward_new.max_abs_diff(&point.eval.reward);
        let previous_policy = point.eval.optimal.clone();

        let hit = match config.cache {
            CacheMode::Off => None,
            _ => {
                if cache[current].region.contains(&reward_new) {
                    Some(current)
                } else {
                    cache.iter().position(|e| e.region.contains(&reward_new))
                }
            }
        };

        point = match (hit, config.cache) {
            (Some(i), CacheMode::StaleGradient) => {
                current = i;
                let entry = &cache[i];
                let eval = PolicyEvaluation::from_cached(
                    features,
                    &weights_new,
                    entry.policy.clone(),
                    entry.dq.clone(),
                    config.beta,
                )?;
                Point {
                    eval,
                    log_posterior: None,
                    gradient: entry.gradient.clone(),
                }
            }
            (Some(i), _) => {
                current = i;
                let entry = &cache[i];
                let eval = PolicyEvaluation::from_cached(
                    features,
                    &weights_new,
                    entry.policy.clone(),
                    entry.dq.clone(),
                    config.beta,
                )?;
                posterior_at(problem, &mdp, objective, eval, config)?
            }
            (None, mode) => {
                let eval = PolicyEvaluation::solve(&mdp, features, &weights_new, config.beta)?;
                let fresh = posterior_at(problem, &mdp, objective, eval, config)?;
                if mode != CacheMode::Off {
                    // A policy already in the cache counts as a known entry.
                    match cache.iter().position(|e| e.policy == fresh.eval.optimal) {
                        Some(i) => current = i,
                        None => {
                            cache.push(GradientCacheEntry {
                                policy: fresh.eval.optimal.clone(),
                                region: reward_optimality_region(&mdp, &fresh.eval.optimal)?,
                                gradient: fresh.gradient.clone(),
                                dq: fresh.eval.dq.clone(),
                            });
                            current = cache.len() - 1;
                        }
                    }
                }
                fresh
            }
        };
        if hit.is_some() {
            cache_hits += 1;
        }
        records.push(IterationRecord {
            iteration,
            log_posterior: point.log_posterior,
            gradient_norm: norm(&point.gradient),
            step_size: step,
            reward_change: Some(delta),
            cache_hit: hit.is_some(),
            region_crossed: point.eval.optimal != previous_policy,
            weights: point.eval.weights.values().to_vec(),
            elapsed_s: Some(started.elapsed().as_secs_f64()),
        });
        step *= config.decay;
        if delta <= threshold {
            converged = true;
            break;
        }
    }

    let log_posterior = match point.log_posterior {
        Some(lp) => lp,
        None => {
            let eval = PolicyEvaluation::solve(&mdp, features, &point.eval.weights, config.beta)?;
            posterior_at(problem, &mdp, objective, eval, config)?
                .log_posterior
                .unwrap_or(f64::NAN)
        }
    };
    Ok(AscentResult {
        weights: point.eval.weights,
        converged,
        iterations,
        cache_entries: cache.len(),
        cache_hits,
        log_posterior,
        records,
    })
}

/// Initial weights for a run: one draw from the prior on the
/// `initialization` sub-stream of the run seed.
pub fn initial_weights(prior: &GaussianPrior, seed: u64) -> FeatureWeights {
    restart_weights(prior, seed, 0)
}

/// Starting weights of restart `r`; restart 0 is [`initial_weights`].
pub fn restart_weights(prior: &GaussianPrior, seed: u64, r: usize) -> FeatureWeights {
    let stream = SeedStream::new(seed);
    let mut rng = match r {
        0 => stream.rng("initialization"),
        r => stream.rng_indexed("initialization", &[r as u64]),
    };
    sample_weights(prior, &mut rng)
}

/// Marginal-MAP reward learning from occluded, noisy demonstrations.
pub fn mmap_birl(
    mdp: &DiscountedMdp,
    batch: &[ObservedTrajectory],
    model: &ObservationModel,
    features: &FeatureMap,
    prior: &GaussianPrior,
    config: &AscentConfig,
) -> Result<(FeatureWeights, AscentResult)> {
    config.validate()?;
    let mut best: Option<(FeatureWeights, AscentResult)> = None;
    for r in 0..config.restarts {
        let start = restart_weights(prior, config.seed, r);
        let run = mmap_birl_from(mdp, batch, model, features, prior, config, start)?;
        if best.as_ref().is_none_or(|b| run.1.log_posterior > b.1.log_posterior) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// As [`mmap_birl`], from explicit initial weights.
pub fn mmap_birl_from(
    mdp: &DiscountedMdp,
    batch: &[ObservedTrajectory],
    model: &ObservationModel,
    features: &FeatureMap,
    prior: &GaussianPrior,
    config: &AscentConfig,
    initial: FeatureWeights,
) -> Result<(FeatureWeights, AscentResult)> {
    if batch.is_empty() {
        return Err(Error::validation("demonstration batch is empty"));
    }
    model.check_compatible(mdp)?;
    let problem = Problem { mdp, features, prior };
    let objective = MarginalLikelihood { model, batch };
    let result = ascend(&problem, &objective, initial, config)?;
    Ok((result.weights.clone(), result))
}
