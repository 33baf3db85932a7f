//! Derivatives of the Boltzmann likelihood with respect to the feature weights.

use ndarray::{Array1, Array2, Array3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::forward_backward::{forward_backward, PosteriorMarginals};
use crate::mdp::{
    backup, policy_average, solve_optimal, DeterministicPolicy, DiscountedMdp, Policy, PolicySystem,
    RewardTable, StochasticPolicy, ValueFunctions,
};
use crate::observation::{ObservationModel, ObservedTrajectory};
use crate::reward::{reward_of, FeatureMap, FeatureWeights};

/// `dQ(s,a)/dtheta_k` under a fixed policy, indexed `(s, a, k)`.
///
/// Solves `dQ = phi + gamma T (pi . dQ)` through the state-level system
/// `dV = phi^pi + gamma T^pi dV`, one right-hand side per feature.
pub fn q_gradient(
    mdp: &DiscountedMdp,
    policy: &impl Policy,
    features: &FeatureMap,
) -> Result<Array3<f64>> {
    if features.num_states() != mdp.num_states() || features.num_actions() != mdp.num_actions() {
        return Err(Error::validation("feature map shape does not match the MDP"));
    }
    let system = PolicySystem::new(mdp, policy)?;
    let (ns, na, nk) = features.values().dim();
    let mut dq = Array3::zeros((ns, na, nk));
    let gamma = mdp.discount();
    for k in 0..nk {
        let phi = features.column(k);
        let dv = system.solve(&policy_average(&phi, policy))?;
        let col = backup(mdp, &phi, &dv);
        // Fixed-point residual of the original (s, a)-level equation.
        let follow = policy_average(&col, policy);
        for s in 0..ns {
            for a in 0..na {
                let rhs = phi[[s, a]]
                    + gamma
                        * mdp
                            .successors(s, a)
                            .iter()
                            .map(|&(next, p)| p * follow[next])
                            .sum::<f64>();
                let scale = 1.0 + col[[s, a]].abs();
                if (rhs - col[[s, a]]).abs() > 1e-9 * scale {
                    return Err(Error::LinearSolve(format!(
                        "Q-gradient residual {:e} at ({s}, {a}, {k})",
                        (rhs - col[[s, a]]).abs()
                    )));
                }
                dq[[s, a, k]] = col[[s, a]];
            }
        }
    }
    Ok(dq)
}

/// `dlog pi(a|s)/dtheta_k = beta (dQ(s,a,k) - sum_a' pi(a'|s) dQ(s,a',k))`.
pub fn policy_score(policy: &StochasticPolicy, dq: &Array3<f64>, beta: f64) -> Result<Array3<f64>> {
    let (ns, na, nk) = dq.dim();
    if policy.num_states() != ns || policy.num_actions() != na {
        return Err(Error::validation("policy shape does not match the Q-gradient"));
    }
    let mut score = Array3::zeros((ns, na, nk));
    for s in 0..ns {
        for k in 0..nk {
            let mean: f64 = (0..na).map(|a| policy.prob(s, a) * dq[[s, a, k]]).sum();
            for a in 0..na {
                score[[s, a, k]] = beta * (dq[[s, a, k]] - mean);
            }
        }
    }
    Ok(score)
}

/// Everything the likelihood needs at one weight vector: the optimal policy,
/// its Q-values, the Boltzmann policy and the score tensor.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub weights: FeatureWeights,
    pub reward: RewardTable,
    pub optimal: DeterministicPolicy,
    pub values: ValueFunctions,
    pub boltzmann: StochasticPolicy,
    /// `dQ*/dtheta`, constant while `optimal` stays optimal.
    pub dq: Array3<f64>,
    pub score: Array3<f64>,
}

impl PolicyEvaluation {
    /// Full solve: policy iteration, then derivatives under the optimal policy.
    pub fn solve(
        mdp: &DiscountedMdp,
        features: &FeatureMap,
        weights: &FeatureWeights,
        beta: f64,
    ) -> Result<Self> {
        let reward = reward_of(weights, features)?;
        let (optimal, values) = solve_optimal(mdp, &reward)?;
        let dq = q_gradient(mdp, &optimal, features)?;
        Self::assemble(weights.clone(), reward, optimal, values, dq, beta)
    }

    /// Reuse a policy known to remain optimal. `Q*` is linear in the weights
    /// on that policy's optimality region, so it follows from `dq` directly.
    pub fn from_cached(
        features: &FeatureMap,
        weights: &FeatureWeights,
        optimal: DeterministicPolicy,
        dq: Array3<f64>,
        beta: f64,
    ) -> Result<Self> {
        let reward = reward_of(weights, features)?;
        let (ns, na, nk) = dq.dim();
        let theta = weights.values();
        let q = Array2::from_shape_fn((ns, na), |(s, a)| (0..nk).map(|k| theta[k] * dq[[s, a, k]]).sum());
        let v = Array1::from_shape_fn(ns, |s| q[[s, optimal.action(s)]]);
        Self::assemble(weights.clone(), reward, optimal, ValueFunctions { q, v }, dq, beta)
    }

    fn assemble(
        weights: FeatureWeights,
        reward: RewardTable,
        optimal: DeterministicPolicy,
        values: ValueFunctions,
        dq: Array3<f64>,
        beta: f64,
    ) -> Result<Self> {
        let boltzmann = StochasticPolicy::boltzmann_from_q(&values.q, beta)?;
        let score = policy_score(&boltzmann, &dq, beta)?;
        Ok(Self {
            weights,
            reward,
            optimal,
            values,
            boltzmann,
            dq,
            score,
        })
    }

    pub fn num_features(&self) -> usize {
        self.dq.dim().2
    }
}

/// `sum_t E_posterior[score(s^t, a^t)]` for one trajectory.
pub fn expected_score(posterior: &PosteriorMarginals, score: &Array3<f64>) -> Array1<f64> {
    let (_, na, nk) = score.dim();
    let mut g = Array1::zeros(nk);
    for t in 0..posterior.len() {
        for (x, p) in posterior.single_sparse(t) {
            let (s, a) = (x / na, x % na);
            for k in 0..nk {
                g[k] += p * score[[s, a, k]];
            }
        }
    }
    g
}

/// Marginal log-likelihood of a batch and its gradient. Trajectories run in
/// parallel; the reduction runs in index order.
pub fn batch_log_likelihood(
    mdp: &DiscountedMdp,
    eval: &PolicyEvaluation,
    model: &ObservationModel,
    batch: &[ObservedTrajectory],
) -> Result<(f64, Array1<f64>)> {
    let parts: Vec<Result<(f64, Array1<f64>)>> = batch
        .par_iter()
        .enumerate()
        .map(|(i, traj)| {
            let (ll, post) =
                forward_backward(mdp, &eval.boltzmann, model, traj).map_err(|e| e.in_trajectory(i))?;
            Ok((ll, expected_score(&post, &eval.score)))
        })
        .collect();
    let mut total = 0.0;
    let mut grad = Array1::zeros(eval.num_features());
    for part in parts {
        let (ll, g) = part?;
        total += ll;
        grad += &g;
    }
    Ok((total, grad))
}

/// Gradient of `sum_Y log sum_{Z, tau} Pr(Y, Z, tau | theta)` where the
/// policy is the Boltzmann policy of the optimal Q-values at `theta`.
pub fn likelihood_gradient(
    mdp: &DiscountedMdp,
    weights: &FeatureWeights,
    batch: &[ObservedTrajectory],
    model: &ObservationModel,
    features: &FeatureMap,
    beta: f64,
) -> Result<Array1<f64>> {
    let eval = PolicyEvaluation::solve(mdp, features, weights, beta)?;
    Ok(batch_log_likelihood(mdp, &eval, model, batch)?.1)
}

/// The matching objective value.
pub fn log_marginal_likelihood(
    mdp: &DiscountedMdp,
    weights: &FeatureWeights,
    batch: &[ObservedTrajectory],
    model: &ObservationModel,
    features: &FeatureMap,
    beta: f64,
) -> Result<f64> {
    let eval = PolicyEvaluation::solve(mdp, features, weights, beta)?;
    Ok(batch_log_likelihood(mdp, &eval, model, batch)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::evaluate_policy;
    use ndarray::{array, Array3};

    fn ring() -> (DiscountedMdp, FeatureMap) {
        let ns = 4;
        let mut t = Array3::zeros((ns, 2, ns));
        for s in 0..ns {
            t[[s, 0, (s + 1) % ns]] = 0.8;
            t[[s, 0, s]] = 0.2;
            t[[s, 1, (s + ns - 1) % ns]] = 0.6;
            t[[s, 1, (s + 2) % ns]] = 0.4;
        }
        let mdp = DiscountedMdp::new(t, 0.9, Array1::from_elem(ns, 0.25)).unwrap();
        let mut phi = Array3::zeros((ns, 2, 2));
        phi[[0, 0, 0]] = 1.0;
        phi[[0, 1, 0]] = 1.0;
        phi[[2, 1, 1]] = 1.0;
        phi[[3, 0, 1]] = 0.5;
        (mdp, FeatureMap::new(phi).unwrap())
    }

    #[test]
    fn myopic_gradient_is_the_feature_map() {
        let (mdp, phi) = ring();
        let mdp = mdp.with_discount(0.0).unwrap();
        let pi = StochasticPolicy::uniform(4, 2);
        assert_eq!(q_gradient(&mdp, &pi, &phi).unwrap(), phi.values().clone());
    }

    #[test]
    fn single_state_geometric_gradient() {
        let mdp = DiscountedMdp::new(Array3::from_elem((1, 1, 1), 1.0), 0.75, array![1.0]).unwrap();
        let phi = FeatureMap::new(Array3::from_elem((1, 1, 1), 0.4)).unwrap();
        let dq = q_gradient(&mdp, &StochasticPolicy::uniform(1, 1), &phi).unwrap();
        assert!((dq[[0, 0, 0]] - 0.4 / 0.25).abs() < 1e-12);
    }

    #[test]
    fn q_gradient_matches_finite_difference_under_fixed_policy() {
        let (mdp, phi) = ring();
        let pi = StochasticPolicy::new(array![[0.3, 0.7], [0.5, 0.5], [0.9, 0.1], [0.2, 0.8]]).unwrap();
        let dq = q_gradient(&mdp, &pi, &phi).unwrap();
        let theta = array![0.4, -1.1];
        let q_at = |th: &Array1<f64>| {
            let r = reward_of(&FeatureWeights::new(th.clone()).unwrap(), &phi).unwrap();
            let v = evaluate_policy(&mdp, &r, &pi).unwrap();
            backup(&mdp, r.values(), &v)
        };
        for k in 0..2 {
            let h = 1e-5;
            let mut up = theta.clone();
            up[k] += h;
            let mut down = theta.clone();
            down[k] -= h;
            let fd = (q_at(&up) - q_at(&down)) / (2.0 * h);
            for s in 0..4 {
                for a in 0..2 {
                    let exact = dq[[s, a, k]];
                    assert!((fd[[s, a]] - exact).abs() <= 1e-4 * exact.abs().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn score_identity_and_single_action() {
        let (mdp, phi) = ring();
        let pi = StochasticPolicy::new(array![[0.3, 0.7], [0.5, 0.5], [0.9, 0.1], [0.2, 0.8]]).unwrap();
        let dq = q_gradient(&mdp, &pi, &phi).unwrap();
        let score = policy_score(&pi, &dq, 0.7).unwrap();
        for s in 0..4 {
            for k in 0..2 {
                let mean: f64 = (0..2).map(|a| pi.prob(s, a) * score[[s, a, k]]).sum();
                assert!(mean.abs() < 1e-12);
            }
        }
        let one = StochasticPolicy::uniform(3, 1);
        let dq = Array3::from_shape_fn((3, 1, 2), |(s, _, k)| (s + k) as f64);
        assert!(policy_score(&one, &dq, 2.0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn score_matches_finite_difference_of_full_pipeline() {
        let (mdp, phi) = ring();
        let beta = 0.8;
        let theta = array![0.9, -0.6];
        let eval = PolicyEvaluation::solve(&mdp, &phi, &FeatureWeights::new(theta.clone()).unwrap(), beta).unwrap();
        let log_pi = |th: &Array1<f64>| {
            PolicyEvaluation::solve(&mdp, &phi, &FeatureWeights::new(th.clone()).unwrap(), beta)
                .unwrap()
                .boltzmann
                .log_probs()
                .clone()
        };
        for k in 0..2 {
            let h = 1e-5;
            let mut up = theta.clone();
            up[k] += h;
            let mut down = theta.clone();
            down[k] -= h;
            let fd = (log_pi(&up) - log_pi(&down)) / (2.0 * h);
            for s in 0..4 {
                for a in 0..2 {
                    let exact = eval.score[[s, a, k]];
                    assert!((fd[[s, a]] - exact).abs() <= 1e-3 * exact.abs().max(1e-6), "{s} {a} {k}");
                }
            }
        }
    }

    #[test]
    fn cached_evaluation_matches_full_solve() {
        let (mdp, phi) = ring();
        let w = FeatureWeights::new(array![0.9, -0.6]).unwrap();
        let full = PolicyEvaluation::solve(&mdp, &phi, &w, 0.5).unwrap();
        let w2 = FeatureWeights::new(array![0.91, -0.59]).unwrap();
        let cached = PolicyEvaluation::from_cached(&phi, &w2, full.optimal.clone(), full.dq.clone(), 0.5).unwrap();
        let fresh = PolicyEvaluation::solve(&mdp, &phi, &w2, 0.5).unwrap();
        assert_eq!(cached.optimal, fresh.optimal);
        let diff = (&cached.values.q - &fresh.values.q).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(diff < 1e-10);
    }
}
