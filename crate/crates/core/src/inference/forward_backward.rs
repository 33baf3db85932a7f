//! Exact marginalisation over the hidden `(s, a)` chain.
//!
//! The hidden variable at step `t` is the pair `x = s * |A| + a`. The chain
//! factors are `Pr(s^1) pi(a^1|s^1)` at the start, `T(s,a,s') pi(a'|s')`
//! between steps, and `O(s, a, o^t)` at observed steps. Occluded steps carry a
//! factor of one because a normalised observation row sums out.
//!
//! Both passes only visit pairs that are reachable and consistent with the
//! evidence, so an observed step collapses the frontier to the emitters of its
//! symbol and an occluded step widens it to every reachable pair.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::mdp::{DiscountedMdp, Policy, StochasticPolicy};
use crate::observation::{ObservationModel, ObservedTrajectory, TimestepRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
struct PairEntry {
    pair: usize,
    alpha: f64,
    beta: f64,
    emission: f64,
}

/// Smoothed posteriors over hidden pairs for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMarginals {
    num_states: usize,
    num_actions: usize,
    steps: Vec<Vec<PairEntry>>,
    scales: Vec<f64>,
}

impl PosteriorMarginals {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Non-zero `(pair, probability)` entries of the posterior at step `t`.
    pub fn single_sparse(&self, t: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.steps[t].iter().map(|e| (e.pair, e.alpha * e.beta))
    }

    /// Dense posterior over all `|S||A|` pairs at step `t`.
    pub fn single(&self, t: usize) -> Array1<f64> {
        let mut out = Array1::zeros(self.num_states * self.num_actions);
        for (x, p) in self.single_sparse(t) {
            out[x] = p;
        }
        out
    }

    /// Number of pairs with non-zero posterior at step `t`.
    pub fn support_size(&self, t: usize) -> usize {
        self.steps[t].len()
    }

    /// Dense joint posterior of `(x^t, x^{t+1})`.
    pub fn pairwise(&self, t: usize, mdp: &DiscountedMdp, policy: &StochasticPolicy) -> Array2<f64> {
        let na = self.num_actions;
        let n = self.num_states * na;
        let mut out = Array2::zeros((n, n));
        let scale = self.scales[t + 1];
        for cur in &self.steps[t] {
            let (s, a) = (cur.pair / na, cur.pair % na);
            for next in &self.steps[t + 1] {
                let (s2, a2) = (next.pair / na, next.pair % na);
                let p = mdp.transition(s, a, s2);
                if p == 0.0 {
                    continue;
                }
                out[[cur.pair, next.pair]] =
                    cur.alpha * p * policy.prob(s2, a2) * next.emission * next.beta / scale;
            }
        }
        out
    }
}

fn emission_at(record: TimestepRecord, model: &ObservationModel, s: usize, a: usize) -> f64 {
    match record {
        TimestepRecord::Observed(o) => model.prob(s, a, o),
        TimestepRecord::Occluded => 1.0,
    }
}

/// Append a candidate pair; returns whether it is structurally possible.
fn push_candidate(
    entries: &mut Vec<PairEntry>,
    policy: &StochasticPolicy,
    pair: usize,
    base: f64,
    s: usize,
    a: usize,
    emission: f64,
) -> bool {
    if base > 0.0 && emission > 0.0 && policy.log_prob(s, a) > f64::NEG_INFINITY {
        entries.push(PairEntry {
            pair,
            alpha: base * policy.prob(s, a) * emission,
            beta: 1.0,
            emission,
        });
        true
    } else {
        false
    }
}

/// Normalise a step's weights, telling an impossible step apart from one that
/// merely underflowed.
fn normalise(entries: &mut Vec<PairEntry>, reachable: bool, t: usize) -> Result<f64> {
    let total: f64 = entries.iter().map(|e| e.alpha).sum();
    if total > 0.0 && total.is_finite() {
        entries.retain(|e| e.alpha > 0.0);
        for e in entries.iter_mut() {
            e.alpha /= total;
        }
        return Ok(total);
    }
    if reachable {
        Err(Error::Underflow {
            trajectory: None,
            timestep: t,
        })
    } else {
        Err(Error::ZeroLikelihood {
            trajectory: None,
            timestep: t,
        })
    }
}

/// Log marginal likelihood `log sum_{Z, tau} Pr(Y, Z, tau | pi)` and the
/// smoothed pair posteriors, by scaled forward-backward.
pub fn forward_backward(
    mdp: &DiscountedMdp,
    policy: &StochasticPolicy,
    model: &ObservationModel,
    trajectory: &ObservedTrajectory,
) -> Result<(f64, PosteriorMarginals)> {
    model.check_compatible(mdp)?;
    trajectory.check_observations(model.num_observations())?;
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let records = trajectory.records();
    let horizon = records.len();

    let mut steps: Vec<Vec<PairEntry>> = Vec::with_capacity(horizon);
    let mut scales = Vec::with_capacity(horizon);

    // Forward.
    let mut entries = Vec::new();
    let mut reachable = false;
    let init = mdp.initial_distribution();
    match records[0] {
        TimestepRecord::Observed(o) => {
            for &(x, e) in model.emitters(o) {
                let (s, a) = (x / na, x % na);
                reachable |= push_candidate(&mut entries, policy, x, init[s], s, a, e);
            }
        }
        TimestepRecord::Occluded => {
            for s in 0..ns {
                for a in 0..na {
                    reachable |= push_candidate(&mut entries, policy, s * na + a, init[s], s, a, 1.0);
                }
            }
        }
    }
    scales.push(normalise(&mut entries, reachable, 0)?);
    steps.push(entries);

    let mut pred = vec![0.0; ns];
    let mut touched = vec![false; ns];
    let mut frontier: Vec<usize> = Vec::with_capacity(ns);
    for t in 1..horizon {
        for &s in &frontier {
            pred[s] = 0.0;
            touched[s] = false;
        }
        frontier.clear();
        for e in &steps[t - 1] {
            let (s, a) = (e.pair / na, e.pair % na);
            for &(next, p) in mdp.successors(s, a) {
                if !touched[next] {
                    touched[next] = true;
                    frontier.push(next);
                }
                pred[next] += e.alpha * p;
            }
        }
        let mut entries = Vec::new();
        reachable = false;
        match records[t] {
            TimestepRecord::Observed(o) => {
                for &(x, e) in model.emitters(o) {
                    let (s, a) = (x / na, x % na);
                    if touched[s] {
                        reachable |= push_candidate(&mut entries, policy, x, pred[s], s, a, e);
                    }
                }
            }
            TimestepRecord::Occluded => {
                frontier.sort_unstable();
                for &s in &frontier {
                    for a in 0..na {
                        reachable |= push_candidate(&mut entries, policy, s * na + a, pred[s], s, a, 1.0);
                    }
                }
            }
        }
        scales.push(normalise(&mut entries, reachable, t)?);
        steps.push(entries);
    }

    // Backward, restricted to the forward support.
    let mut weight = vec![0.0; ns];
    for t in (0..horizon.saturating_sub(1)).rev() {
        for w in weight.iter_mut() {
            *w = 0.0;
        }
        for e in &steps[t + 1] {
            let (s, a) = (e.pair / na, e.pair % na);
            weight[s] += policy.prob(s, a) * e.emission * e.beta;
        }
        let scale = scales[t + 1];
        let (head, _) = steps.split_at_mut(t + 1);
        for e in head[t].iter_mut() {
            let (s, a) = (e.pair / na, e.pair % na);
            e.beta = mdp
                .successors(s, a)
                .iter()
                .map(|&(next, p)| p * weight[next])
                .sum::<f64>()
                / scale;
        }
    }

    let log_likelihood = scales.iter().map(|c| c.ln()).sum();
    Ok((
        log_likelihood,
        PosteriorMarginals {
            num_states: ns,
            num_actions: na,
            steps,
            scales,
        },
    ))
}

/// Guard on the number of enumerated completions.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Visit every hidden completion `tau` with its joint weight
/// `Pr(Y, tau)`. Test oracle; exponential in the horizon.
pub fn for_each_completion(
    mdp: &DiscountedMdp,
    policy: &StochasticPolicy,
    model: &ObservationModel,
    trajectory: &ObservedTrajectory,
    mut visit: impl FnMut(&[(usize, usize)], f64),
) -> Result<()> {
    model.check_compatible(mdp)?;
    trajectory.check_observations(model.num_observations())?;
    let na = mdp.num_actions();
    let n = mdp.num_states() * na;
    let horizon = trajectory.len();
    let size = (n as f64).powi(horizon as i32);
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let records = trajectory.records();
    let mut odometer = vec![0usize; horizon];
    let mut path = vec![(0usize, 0usize); horizon];
    loop {
        for (t, &x) in odometer.iter().enumerate() {
            path[t] = (x / na, x % na);
        }
        let mut w = 1.0;
        for (t, &(s, a)) in path.iter().enumerate() {
            let base = if t == 0 {
                mdp.initial_distribution()[s]
            } else {
                let (ps, pa) = path[t - 1];
                mdp.transition(ps, pa, s)
            };
            w *= base * policy.prob(s, a) * emission_at(records[t], model, s, a);
            if w == 0.0 {
                break;
            }
        }
        visit(&path, w);
        let mut i = horizon;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            odometer[i] += 1;
            if odometer[i] < n {
                break;
            }
            odometer[i] = 0;
        }
    }
}

/// `sum_{Z, tau} Pr(Y, Z, tau)` by direct enumeration.
pub fn brute_force_likelihood(
    mdp: &DiscountedMdp,
    policy: &StochasticPolicy,
    model: &ObservationModel,
    trajectory: &ObservedTrajectory,
) -> Result<f64> {
    let mut total = 0.0;
    for_each_completion(mdp, policy, model, trajectory, |_, w| total += w)?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::{encode_pair, TimestepRecord::*};
    use ndarray::{array, Array3};

    fn small() -> (DiscountedMdp, StochasticPolicy, ObservationModel) {
        let mut t = Array3::zeros((3, 2, 3));
        t[[0, 0, 0]] = 0.2;
        t[[0, 0, 1]] = 0.8;
        t[[0, 1, 2]] = 1.0;
        t[[1, 0, 0]] = 0.5;
        t[[1, 0, 2]] = 0.5;
        t[[1, 1, 1]] = 1.0;
        t[[2, 0, 2]] = 0.3;
        t[[2, 0, 0]] = 0.7;
        t[[2, 1, 1]] = 0.6;
        t[[2, 1, 2]] = 0.4;
        let mdp = DiscountedMdp::new(t, 0.9, array![0.5, 0.3, 0.2]).unwrap();
        let pi = StochasticPolicy::new(array![[0.6, 0.4], [0.1, 0.9], [0.5, 0.5]]).unwrap();
        let model = ObservationModel::confusion_kernel(3, 2, 0.3, |s, a| {
            vec![(encode_pair((s + 1) % 3, a, 2), 1.0)]
        })
        .unwrap();
        (mdp, pi, model)
    }

    #[test]
    fn single_observed_step() {
        let (mdp, pi, _) = small();
        let model = ObservationModel::identity(3, 2);
        let traj = ObservedTrajectory::new(vec![Observed(encode_pair(1, 1, 2))]).unwrap();
        let (ll, post) = forward_backward(&mdp, &pi, &model, &traj).unwrap();
        assert!((ll - (0.3f64 * 0.9).ln()).abs() < 1e-14);
        assert_eq!(post.single(0)[encode_pair(1, 1, 2)], 1.0);
    }

    #[test]
    fn fully_occluded_has_unit_likelihood_and_prior_marginals() {
        let (mdp, pi, model) = small();
        let traj = ObservedTrajectory::new(vec![Occluded; 4]).unwrap();
        let (ll, post) = forward_backward(&mdp, &pi, &model, &traj).unwrap();
        assert!(ll.abs() < 1e-14);
        // Occupancy by direct propagation.
        let mut state = mdp.initial_distribution().clone();
        for t in 0..4 {
            let single = post.single(t);
            for s in 0..3 {
                for a in 0..2 {
                    assert!((single[s * 2 + a] - state[s] * pi.prob(s, a)).abs() < 1e-12);
                }
            }
            let mut next = Array1::zeros(3);
            for s in 0..3 {
                for a in 0..2 {
                    for s2 in 0..3 {
                        next[s2] += state[s] * pi.prob(s, a) * mdp.transition(s, a, s2);
                    }
                }
            }
            state = next;
        }
    }

    #[test]
    fn matches_enumeration_with_noise_and_gaps() {
        let (mdp, pi, model) = small();
        let traj = ObservedTrajectory::new(vec![
            Observed(encode_pair(0, 1, 2)),
            Occluded,
            Observed(encode_pair(1, 0, 2)),
            Observed(encode_pair(2, 1, 2)),
        ])
        .unwrap();
        let (ll, post) = forward_backward(&mdp, &pi, &model, &traj).unwrap();
        let brute = brute_force_likelihood(&mdp, &pi, &model, &traj).unwrap();
        assert!(((ll - brute.ln()) / brute.ln()).abs() < 1e-12);
        for t in 0..4 {
            assert!((post.single(t).sum() - 1.0).abs() < 1e-12);
        }
        for t in 0..3 {
            let joint = post.pairwise(t, &mdp, &pi);
            let rows = joint.sum_axis(ndarray::Axis(1));
            let cols = joint.sum_axis(ndarray::Axis(0));
            let a = post.single(t);
            let b = post.single(t + 1);
            for x in 0..6 {
                assert!((rows[x] - a[x]).abs() < 1e-10);
                assert!((cols[x] - b[x]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn impossible_evidence_is_distinct_from_underflow() {
        let (mdp, pi, _) = small();
        let model = ObservationModel::identity(3, 2);
        // 2 on action 1 only reaches state 1.
        let traj = ObservedTrajectory::new(vec![
            Observed(encode_pair(2, 1, 2)),
            Observed(encode_pair(0, 0, 2)),
        ])
        .unwrap();
        assert!(matches!(
            forward_backward(&mdp, &pi, &model, &traj),
            Err(Error::ZeroLikelihood { timestep: 1, .. })
        ));
        let q = array![[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]];
        let extreme = StochasticPolicy::boltzmann_from_q(&q, 2000.0).unwrap();
        let traj = ObservedTrajectory::new(vec![Observed(encode_pair(0, 0, 2))]).unwrap();
        assert!(matches!(
            forward_backward(&mdp, &extreme, &model, &traj),
            Err(Error::Underflow { timestep: 0, .. })
        ));
    }

    #[test]
    fn enumeration_guard() {
        let (mdp, pi, model) = small();
        let traj = ObservedTrajectory::new(vec![Occluded; 10]).unwrap();
        assert!(matches!(
            brute_force_likelihood(&mdp, &pi, &model, &traj),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn deterministic_rollout_likelihood() {
        let mut t = Array3::zeros((2, 1, 2));
        t[[0, 0, 1]] = 1.0;
        t[[1, 0, 0]] = 1.0;
        let mdp = DiscountedMdp::new(t, 0.5, array![1.0, 0.0]).unwrap();
        let pi = StochasticPolicy::new(array![[1.0], [1.0]]).unwrap();
        let model = ObservationModel::identity(2, 1);
        let good = ObservedTrajectory::fully_observed(&[0, 1, 0]).unwrap();
        let bad = ObservedTrajectory::fully_observed(&[0, 0, 1]).unwrap();
        assert_eq!(brute_force_likelihood(&mdp, &pi, &model, &good).unwrap(), 1.0);
        assert_eq!(brute_force_likelihood(&mdp, &pi, &model, &bad).unwrap(), 0.0);
        assert_eq!(forward_backward(&mdp, &pi, &model, &good).unwrap().0, 0.0);
    }

    #[test]
    fn observation_sequences_normalise() {
        let (mdp, pi, model) = small();
        let mut total = 0.0;
        for o1 in 0..6 {
            for o2 in 0..6 {
                let traj = ObservedTrajectory::fully_observed(&[o1, o2]).unwrap();
                total += brute_force_likelihood(&mdp, &pi, &model, &traj).unwrap();
                if let Ok((ll, _)) = forward_backward(&mdp, &pi, &model, &traj) {
                    let b = brute_force_likelihood(&mdp, &pi, &model, &traj).unwrap();
                    assert!((ll.exp() - b).abs() < 1e-14);
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}
