mod common;

use common::*;
use mmap_birl::config::{from_toml, to_toml, ExperimentConfig};
use mmap_birl::eval::inverse_learning_error;
use mmap_birl::inference::{gradient_reusable, reward_optimality_region};
use mmap_birl::mdp::{solve_optimal, solve_optimal_from, DeterministicPolicy, DiscountedMdp, RewardTable, StochasticPolicy};
use mmap_birl::observation::TrajectoryBatch;
use mmap_birl::reward::{reward_of, FeatureWeights};
use ndarray::{Array1, Array2, Array3};
use proptest::prelude::*;

fn instance(seed: u64) -> (DiscountedMdp, RewardTable) {
    let mut r = rng(seed);
    let mdp = random_mdp(4, 3, 0.9, &mut r);
    let reward = RewardTable::new(Array2::from_shape_fn((4, 3), |_| rand::Rng::random_range(&mut r, -1.0..1.0))).unwrap();
    (mdp, reward)
}

fn permuted(mdp: &DiscountedMdp, reward: &RewardTable, perm: &[usize]) -> (DiscountedMdp, RewardTable) {
    let (ns, na) = reward.dim();
    let t = mdp.transitions();
    let mut pt = Array3::zeros((ns, na, ns));
    let mut pr = Array2::zeros((ns, na));
    let mut init = Array1::zeros(ns);
    for s in 0..ns {
        init[perm[s]] = mdp.initial_distribution()[s];
        for a in 0..na {
            pr[[perm[s], a]] = reward.get(s, a);
            for n in 0..ns {
                pt[[perm[s], a, perm[n]]] = t[[s, a, n]];
            }
        }
    }
    (
        DiscountedMdp::new(pt, mdp.discount(), init).unwrap(),
        RewardTable::new(pr).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_policy_is_scale_invariant(seed in 0u64..10_000, c in 0.01f64..50.0) {
        let (mdp, reward) = instance(seed);
        let (pi, _) = solve_optimal(&mdp, &reward).unwrap();
        let scaled = RewardTable::new(reward.values() * c).unwrap();
        let (pi_c, _) = solve_optimal(&mdp, &scaled).unwrap();
        prop_assert_eq!(&pi, &pi_c);
        let region = reward_optimality_region(&mdp, &pi).unwrap();
        prop_assert!(gradient_reusable(&region, &reward));
        prop_assert!(gradient_reusable(&region, &scaled));
    }

    #[test]
    fn reward_is_linear_in_the_weights(
        seed in 0u64..10_000,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        x in prop::collection::vec(-2.0f64..2.0, 3),
        y in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let features = random_features(4, 3, 3, &mut rng(seed));
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = reward_of(&FeatureWeights::from_slice(&combo).unwrap(), &features).unwrap();
        let rx = reward_of(&FeatureWeights::from_slice(&x).unwrap(), &features).unwrap();
        let ry = reward_of(&FeatureWeights::from_slice(&y).unwrap(), &features).unwrap();
        let rhs = rx.values() * a + ry.values() * b;
        for (l, r) in lhs.values().iter().zip(rhs.iter()) {
            prop_assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn policy_iteration_is_idempotent(seed in 0u64..10_000, start in prop::collection::vec(0usize..3, 4)) {
        let (mdp, reward) = instance(seed);
        let (pi, values) = solve_optimal(&mdp, &reward).unwrap();
        let (again, _) = solve_optimal_from(&mdp, &reward, pi.clone()).unwrap();
        prop_assert_eq!(&again, &pi);
        let warm = DeterministicPolicy::new(start, 3).unwrap();
        let (from_warm, warm_values) = solve_optimal_from(&mdp, &reward, warm).unwrap();
        prop_assert_eq!(&from_warm, &pi);
        for (p, q) in values.v.iter().zip(warm_values.v.iter()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn ile_is_invariant_under_state_relabelling(seed in 0u64..10_000, perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle()) {
        let (mdp, reward) = instance(seed);
        let (expert, _) = solve_optimal(&mdp, &reward).unwrap();
        let learner = StochasticPolicy::uniform(4, 3);
        let ile = inverse_learning_error(&mdp, &reward, &expert, &learner).unwrap();
        prop_assert!(ile >= 0.0);
        prop_assert!(inverse_learning_error(&mdp, &reward, &expert, &expert).unwrap().abs() < 1e-9);
        let (pm, pr) = permuted(&mdp, &reward, &perm);
        let mut actions = vec![0; 4];
        for s in 0..4 {
            actions[perm[s]] = expert.action(s);
        }
        let p_expert = DeterministicPolicy::new(actions, 3).unwrap();
        let p_ile = inverse_learning_error(&pm, &pr, &p_expert, &learner).unwrap();
        prop_assert!((ile - p_ile).abs() <= 1e-9 * (1.0 + ile));
    }

    #[test]
    fn batch_text_round_trips(seed in 0u64..10_000, horizon in 1usize..12, count in 1usize..6) {
        let mut r = rng(seed);
        let trajectories = (0..count).map(|_| random_trajectory(horizon, 9, 0.3, &mut r)).collect();
        let batch = TrajectoryBatch::new(9, trajectories).unwrap();
        let parsed = TrajectoryBatch::parse(&batch.to_text()).unwrap();
        prop_assert_eq!(parsed, batch);
    }

    #[test]
    fn experiment_config_round_trips(seed in any::<u64>(), rate in 0.0f64..1.0, beta in 0.001f64..2.0, traj in 1usize..50) {
        let text = format!(
            "seed = {seed}\nenvironment = \"forestworld\"\n[demonstrations]\ntrajectories = {traj}\nocclusion_rate = {rate}\n[learner.ascent]\nbeta = {beta}\n"
        );
        let config: ExperimentConfig = from_toml(&text).unwrap();
        let again: ExperimentConfig = from_toml(&to_toml(&config).unwrap()).unwrap();
        prop_assert_eq!(again, config);
    }
}
