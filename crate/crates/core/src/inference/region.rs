//! Reward optimality regions: the polyhedron of reward tables under which a
//! fixed deterministic policy stays optimal.
//!
//! For each state `s` and non-policy action `a`, one row expresses
//! `Q^pi(s, a) - Q^pi(s, pi(s))` as a linear functional of the flattened
//! reward vector (index `s * |A| + a`). The policy is optimal for `R` exactly
//! when every row satisfies `H . R <= 0`.

use ndarray::{Array1, Array2};

use crate::error::Result;
use crate::mdp::{tie_tolerance, DeterministicPolicy, DiscountedMdp, PolicySystem, RewardTable};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityRegion {
    policy: DeterministicPolicy,
    rows: Array2<f64>,
    row_pairs: Vec<(usize, usize)>,
    discount: f64,
}

impl OptimalityRegion {
    pub fn policy(&self) -> &DeterministicPolicy {
        &self.policy
    }

    /// The matrix `H^pi`, one row per `(s, a != pi(s))`.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.rows
    }

    /// The `(s, a)` each row of [`matrix`](Self::matrix) constrains.
    pub fn row_pairs(&self) -> &[(usize, usize)] {
        &self.row_pairs
    }

    /// `H . R`; all entries are `<= 0` iff the policy is optimal for `R`.
    pub fn margins(&self, reward: &RewardTable) -> Array1<f64> {
        let flat = Array1::from_iter(reward.values().iter().copied());
        self.rows.dot(&flat)
    }

    pub fn contains(&self, reward: &RewardTable) -> bool {
        let scale = reward.values().iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 - self.discount);
        let tol = tie_tolerance(scale);
        self.margins(reward).iter().all(|&m| m <= tol)
    }
}

pub fn reward_optimality_region(
    mdp: &DiscountedMdp,
    policy: &DeterministicPolicy,
) -> Result<OptimalityRegion> {
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let gamma = mdp.discount();
    let system = PolicySystem::new(mdp, policy)?;
    // occupancy[(s', u)] = [(I - gamma T^pi)^{-1}]_{s', u}
    let mut occupancy = Array2::zeros((ns, ns));
    for u in 0..ns {
        let mut e = Array1::zeros(ns);
        e[u] = 1.0;
        let col = system.solve(&e)?;
        occupancy.column_mut(u).assign(&col);
    }
    // lookahead(s, a, u) = gamma sum_s' T(s,a,s') occupancy[s', u]
    let lookahead = |s: usize, a: usize| -> Array1<f64> {
        let mut out = Array1::zeros(ns);
        for &(next, p) in mdp.successors(s, a) {
            out.scaled_add(gamma * p, &occupancy.row(next));
        }
        out
    };
    let mut rows = Vec::with_capacity(ns * (na - 1));
    let mut row_pairs = Vec::with_capacity(ns * (na - 1));
    for s in 0..ns {
        let chosen = policy.action(s);
        let base = lookahead(s, chosen);
        for a in (0..na).filter(|&a| a != chosen) {
            let diff = lookahead(s, a) - &base;
            let mut row = Array1::zeros(ns * na);
            row[s * na + a] += 1.0;
            row[s * na + chosen] -= 1.0;
            for u in 0..ns {
                row[u * na + policy.action(u)] += diff[u];
            }
            rows.push(row);
            row_pairs.push((s, a));
        }
    }
    let mut matrix = Array2::zeros((rows.len(), ns * na));
    for (i, row) in rows.into_iter().enumerate() {
        matrix.row_mut(i).assign(&row);
    }
    Ok(OptimalityRegion {
        policy: policy.clone(),
        rows: matrix,
        row_pairs,
        discount: gamma,
    })
}

/// Whether a gradient cached for the region's policy is still valid for
/// `new_reward`, i.e. `H^pi . R_new <= 0` in every row.
pub fn gradient_reusable(region: &OptimalityRegion, new_reward: &RewardTable) -> bool {
    region.contains(new_reward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{backup, evaluate_policy, solve_optimal};
    use ndarray::{array, Array3};

    fn two_action_chain() -> DiscountedMdp {
        let mut t = Array3::zeros((3, 2, 3));
        for s in 0..3 {
            t[[s, 0, (s + 1) % 3]] = 0.9;
            t[[s, 0, s]] = 0.1;
            t[[s, 1, (s + 2) % 3]] = 1.0;
        }
        DiscountedMdp::new(t, 0.8, array![1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn margins_equal_q_differences() {
        let mdp = two_action_chain();
        let r = RewardTable::new(array![[0.3, -0.2], [1.0, 0.1], [-0.5, 0.7]]).unwrap();
        let pi = DeterministicPolicy::new(vec![1, 0, 0], 2).unwrap();
        let region = reward_optimality_region(&mdp, &pi).unwrap();
        let v = evaluate_policy(&mdp, &r, &pi).unwrap();
        let q = backup(&mdp, r.values(), &v);
        let m = region.margins(&r);
        for (i, &(s, a)) in region.row_pairs().iter().enumerate() {
            let expected = q[[s, a]] - q[[s, pi.action(s)]];
            assert!((m[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn solved_policy_is_inside_and_negation_leaves() {
        let mdp = two_action_chain();
        let r = RewardTable::new(array![[1.0, 0.0], [0.0, 2.0], [0.5, -1.0]]).unwrap();
        let (pi, _) = solve_optimal(&mdp, &r).unwrap();
        let region = reward_optimality_region(&mdp, &pi).unwrap();
        assert!(gradient_reusable(&region, &r));
        let doubled = RewardTable::new(r.values() * 2.0).unwrap();
        assert!(gradient_reusable(&region, &doubled));
        let negated = RewardTable::new(-r.values()).unwrap();
        assert!(!gradient_reusable(&region, &negated));
    }
}
