//! Finite discounted MDPs and their exact solvers.
//!
//! States and actions are dense indices. Environment builders own the mapping
//! from indices to anything semantic.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, Array3, ArrayView1};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-9;
const MAX_POLICY_ITERATIONS: usize = 10_000;
const BELLMAN_TOL: f64 = 1e-8;

/// Absolute tolerance under which two Q-values count as tied.
pub(crate) fn tie_tolerance(scale: f64) -> f64 {
    1e-10 * (1.0 + scale.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedMdp {
    transitions: Array3<f64>,
    discount: f64,
    initial: Array1<f64>,
    successors: Vec<Vec<(usize, f64)>>,
}

impl DiscountedMdp {
    /// `transitions` is indexed `(s, a, s')`.
    pub fn new(transitions: Array3<f64>, discount: f64, initial: Array1<f64>) -> Result<Self> {
        let (ns, na, ns2) = transitions.dim();
        if ns == 0 || na == 0 {
            return Err(Error::validation("MDP needs at least one state and one action"));
        }
        if ns2 != ns {
            return Err(Error::DimensionMismatch {
                what: "transition successor axis",
                expected: ns,
                found: ns2,
            });
        }
        if initial.len() != ns {
            return Err(Error::DimensionMismatch {
                what: "initial distribution",
                expected: ns,
                found: initial.len(),
            });
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::validation(format!("discount {discount} outside [0, 1)")));
        }
        check_distribution(initial.view(), "initial distribution")?;
        let mut successors = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                let row = transitions.slice(ndarray::s![s, a, ..]);
                check_distribution(row, &format!("transition row ({s}, {a})"))?;
                successors.push(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(next, &p)| (next, p))
                        .collect(),
                );
            }
        }
        Ok(Self {
            transitions,
            discount,
            initial,
            successors,
        })
    }

    pub fn num_states(&self) -> usize {
        self.transitions.dim().0
    }

    pub fn num_actions(&self) -> usize {
        self.transitions.dim().1
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn transitions(&self) -> &Array3<f64> {
        &self.transitions
    }

    pub fn initial_distribution(&self) -> &Array1<f64> {
        &self.initial
    }

    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transitions[[s, a, next]]
    }

    /// Non-zero successors of `(s, a)` as `(s', probability)` pairs.
    pub fn successors(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.successors[s * self.num_actions() + a]
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::validation(format!("discount {discount} outside [0, 1)")));
        }
        Ok(Self {
            discount,
            ..self.clone()
        })
    }

    pub fn with_initial_distribution(&self, initial: Array1<f64>) -> Result<Self> {
        Self::new(self.transitions.clone(), self.discount, initial)
    }
}

fn check_distribution(row: ArrayView1<'_, f64>, what: &str) -> Result<()> {
    if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::validation(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = row.sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::validation(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Reward values indexed `(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable(Array2<f64>);

impl RewardTable {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("reward table has non-finite entries"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.0[[s, a]]
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &RewardTable) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Anything that assigns action probabilities per state.
pub trait Policy {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn prob(&self, s: usize, a: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy {
    actions: Vec<usize>,
    num_actions: usize,
}

impl DeterministicPolicy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Result<Self> {
        if let Some(&bad) = actions.iter().find(|&&a| a >= num_actions) {
            return Err(Error::validation(format!(
                "action {bad} out of range for {num_actions} actions"
            )));
        }
        Ok(Self {
            actions,
            num_actions,
        })
    }

    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    /// One-hot stochastic view of this policy.
    pub fn to_stochastic(&self) -> StochasticPolicy {
        let mut probs = Array2::zeros((self.actions.len(), self.num_actions));
        for (s, &a) in self.actions.iter().enumerate() {
            probs[[s, a]] = 1.0;
        }
        StochasticPolicy::from_probs_unchecked(probs)
    }
}

impl Policy for DeterministicPolicy {
    fn num_states(&self) -> usize {
        self.actions.len()
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn prob(&self, s: usize, a: usize) -> f64 {
        if self.actions[s] == a {
            1.0
        } else {
            0.0
        }
    }
}

/// Action probabilities indexed `(s, a)`, with their logarithms kept alongside
/// so that callers can distinguish true zeros from underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    probs: Array2<f64>,
    log_probs: Array2<f64>,
}

impl StochasticPolicy {
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        for (s, row) in probs.rows().into_iter().enumerate() {
            check_distribution(row, &format!("policy row {s}"))?;
        }
        Ok(Self::from_probs_unchecked(probs))
    }

    fn from_probs_unchecked(probs: Array2<f64>) -> Self {
        let log_probs = probs.mapv(f64::ln);
        Self { probs, log_probs }
    }

    /// Uniform over actions in every state.
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self::from_probs_unchecked(Array2::from_elem(
            (num_states, num_actions),
            1.0 / num_actions as f64,
        ))
    }

    /// Softmax of `beta * q` per state, computed with max subtraction.
    pub fn boltzmann_from_q(q: &Array2<f64>, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::validation(format!("beta {beta} must be finite and >= 0")));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("Q-values must be finite"));
        }
        let (ns, na) = q.dim();
        let mut probs = Array2::zeros((ns, na));
        let mut log_probs = Array2::zeros((ns, na));
        for s in 0..ns {
            let row = q.row(s);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_norm = row.iter().map(|&v| (beta * (v - max)).exp()).sum::<f64>().ln();
            for a in 0..na {
                let lp = beta * (row[a] - max) - log_norm;
                log_probs[[s, a]] = lp;
                probs[[s, a]] = lp.exp();
            }
        }
        Ok(Self { probs, log_probs })
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn log_probs(&self) -> &Array2<f64> {
        &self.log_probs
    }

    pub fn log_prob(&self, s: usize, a: usize) -> f64 {
        self.log_probs[[s, a]]
    }

    /// Smallest-index action of maximal probability in each state.
    pub fn greedy(&self) -> DeterministicPolicy {
        let actions = self
            .probs
            .rows()
            .into_iter()
            .map(|row| argmax_lowest(row.iter().copied()))
            .collect();
        DeterministicPolicy {
            actions,
            num_actions: self.probs.ncols(),
        }
    }
}

impl Policy for StochasticPolicy {
    fn num_states(&self) -> usize {
        self.probs.nrows()
    }

    fn num_actions(&self) -> usize {
        self.probs.ncols()
    }

    fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[[s, a]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctions {
    pub q: Array2<f64>,
    pub v: Array1<f64>,
}

fn argmax_lowest(values: impl Iterator<Item = f64> + Clone) -> usize {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tolerance(max);
    values.clone().position(|v| v >= max - tol).unwrap_or(0)
}

fn check_policy_shape(mdp: &DiscountedMdp, policy: &impl Policy) -> Result<()> {
    if policy.num_states() != mdp.num_states() {
        return Err(Error::DimensionMismatch {
            what: "policy states",
            expected: mdp.num_states(),
            found: policy.num_states(),
        });
    }
    if policy.num_actions() != mdp.num_actions() {
        return Err(Error::DimensionMismatch {
            what: "policy actions",
            expected: mdp.num_actions(),
            found: policy.num_actions(),
        });
    }
    Ok(())
}

pub(crate) fn check_reward_shape(mdp: &DiscountedMdp, reward: &RewardTable) -> Result<()> {
    let (ns, na) = reward.dim();
    if ns != mdp.num_states() {
        return Err(Error::DimensionMismatch {
            what: "reward states",
            expected: mdp.num_states(),
            found: ns,
        });
    }
    if na != mdp.num_actions() {
        return Err(Error::DimensionMismatch {
            what: "reward actions",
            expected: mdp.num_actions(),
            found: na,
        });
    }
    Ok(())
}

/// LU factorisation of `I - gamma * P^pi` for a fixed policy.
pub(crate) struct PolicySystem {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl PolicySystem {
    pub(crate) fn new(mdp: &DiscountedMdp, policy: &impl Policy) -> Result<Self> {
        check_policy_shape(mdp, policy)?;
        let n = mdp.num_states();
        let gamma = mdp.discount();
        let mut m = DMatrix::<f64>::identity(n, n);
        for s in 0..n {
            for a in 0..mdp.num_actions() {
                let p = policy.prob(s, a);
                if p == 0.0 {
                    continue;
                }
                for &(next, t) in mdp.successors(s, a) {
                    m[(s, next)] -= gamma * p * t;
                }
            }
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::LinearSolve("I - gamma P^pi is singular".into()));
        }
        Ok(Self { lu })
    }

    pub(crate) fn solve(&self, rhs: &Array1<f64>) -> Result<Array1<f64>> {
        let b = DVector::from_iterator(rhs.len(), rhs.iter().copied());
        let x = self
            .lu
            .solve(&b)
            .ok_or_else(|| Error::LinearSolve("LU solve failed".into()))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("solution has non-finite entries".into()));
        }
        Ok(Array1::from_iter(x.iter().copied()))
    }
}

/// Expected immediate value per state under `policy` for a per-(s,a) table.
pub(crate) fn policy_average(table: &Array2<f64>, policy: &impl Policy) -> Array1<f64> {
    let (ns, na) = table.dim();
    Array1::from_shape_fn(ns, |s| (0..na).map(|a| policy.prob(s, a) * table[[s, a]]).sum())
}

/// `q[s,a] = table[s,a] + gamma * sum_s' T[s,a,s'] v[s']`.
pub(crate) fn backup(mdp: &DiscountedMdp, table: &Array2<f64>, v: &Array1<f64>) -> Array2<f64> {
    let gamma = mdp.discount();
    Array2::from_shape_fn(table.dim(), |(s, a)| {
        table[[s, a]]
            + gamma
                * mdp
                    .successors(s, a)
                    .iter()
                    .map(|&(next, p)| p * v[next])
                    .sum::<f64>()
    })
}

/// Exact value of `policy` by a direct linear solve of `v = r^pi + gamma T^pi v`.
pub fn evaluate_policy(
    mdp: &DiscountedMdp,
    reward: &RewardTable,
    policy: &impl Policy,
) -> Result<Array1<f64>> {
    check_reward_shape(mdp, reward)?;
    let system = PolicySystem::new(mdp, policy)?;
    let r_pi = policy_average(reward.values(), policy);
    let v = system.solve(&r_pi)?;
    let q = backup(mdp, reward.values(), &v);
    let residual = policy_average(&q, policy)
        .iter()
        .zip(v.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > 1e-10 * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
        return Err(Error::LinearSolve(format!(
            "policy evaluation residual {residual:e} too large"
        )));
    }
    Ok(v)
}

/// Optimal deterministic policy by policy iteration, starting from the policy
/// that is greedy in the immediate reward.
pub fn solve_optimal(
    mdp: &DiscountedMdp,
    reward: &RewardTable,
) -> Result<(DeterministicPolicy, ValueFunctions)> {
    check_reward_shape(mdp, reward)?;
    let start = DeterministicPolicy {
        actions: reward
            .values()
            .rows()
            .into_iter()
            .map(|row| argmax_lowest(row.iter().copied()))
            .collect(),
        num_actions: mdp.num_actions(),
    };
    solve_optimal_from(mdp, reward, start)
}

/// Policy iteration from a warm start. Improvement ties go to the smallest
/// action index, so the result does not depend on the starting policy.
pub fn solve_optimal_from(
    mdp: &DiscountedMdp,
    reward: &RewardTable,
    start: DeterministicPolicy,
) -> Result<(DeterministicPolicy, ValueFunctions)> {
    check_reward_shape(mdp, reward)?;
    check_policy_shape(mdp, &start)?;
    let mut policy = start;
    let mut last_residual = f64::INFINITY;
    for iteration in 0..MAX_POLICY_ITERATIONS {
        let v = PolicySystem::new(mdp, &policy)?.solve(&policy_average(reward.values(), &policy))?;
        let q = backup(mdp, reward.values(), &v);
        let improved: Vec<usize> = q
            .rows()
            .into_iter()
            .enumerate()
            .map(|(s, row)| {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // Keep the incumbent unless something is strictly better, then
                // settle on the lowest tied index once stable.
                if row[policy.actions[s]] >= max - tie_tolerance(max) {
                    argmax_lowest(row.iter().copied())
                } else {
                    row.iter().position(|&x| x == max).unwrap_or(0)
                }
            })
            .collect();
        last_residual = q
            .rows()
            .into_iter()
            .zip(v.iter())
            .map(|(row, &vs)| (row.iter().copied().fold(f64::NEG_INFINITY, f64::max) - vs).abs())
            .fold(0.0, f64::max);
        if improved == policy.actions {
            if last_residual > BELLMAN_TOL * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
                return Err(Error::NotConverged {
                    iterations: iteration + 1,
                    residual: last_residual,
                });
            }
            return Ok((policy, ValueFunctions { q, v }));
        }
        policy.actions = improved;
    }
    Err(Error::NotConverged {
        iterations: MAX_POLICY_ITERATIONS,
        residual: last_residual,
    })
}

/// Boltzmann policy `exp(beta q) / sum exp(beta q)` per state.
pub fn boltzmann(values: &ValueFunctions, beta: f64) -> Result<StochasticPolicy> {
    StochasticPolicy::boltzmann_from_q(&values.q, beta)
}
