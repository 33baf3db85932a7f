#![allow(dead_code)]

use mmap_birl::mdp::{DiscountedMdp, StochasticPolicy};
use mmap_birl::observation::{ObservationModel, ObservedTrajectory, TimestepRecord};
use mmap_birl::reward::FeatureMap;
use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A probability vector of length `n`; each entry is zeroed with
/// probability `sparsity`, keeping at least one.
pub fn random_simplex<R: Rng>(n: usize, sparsity: f64, rng: &mut R) -> Vec<f64> {
    let keep = rng.random_range(0..n);
    let mut w: Vec<f64> = (0..n)
        .map(|i| {
            if i != keep && rng.random::<f64>() < sparsity {
                0.0
            } else {
                rng.random::<f64>() + 0.05
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

pub fn random_mdp<R: Rng>(ns: usize, na: usize, gamma: f64, rng: &mut R) -> DiscountedMdp {
    let mut t = Array3::zeros((ns, na, ns));
    for s in 0..ns {
        for a in 0..na {
            for (n, p) in random_simplex(ns, 0.4, rng).into_iter().enumerate() {
                t[[s, a, n]] = p;
            }
        }
    }
    let init = Array1::from(random_simplex(ns, 0.3, rng));
    DiscountedMdp::new(t, gamma, init).unwrap()
}

pub fn random_policy<R: Rng>(ns: usize, na: usize, rng: &mut R) -> StochasticPolicy {
    let mut p = Array2::zeros((ns, na));
    for s in 0..ns {
        for (a, x) in random_simplex(na, 0.2, rng).into_iter().enumerate() {
            p[[s, a]] = x;
        }
    }
    StochasticPolicy::new(p).unwrap()
}

pub fn random_observation_model<R: Rng>(ns: usize, na: usize, no: usize, rng: &mut R) -> ObservationModel {
    let mut o = Array3::zeros((ns, na, no));
    for s in 0..ns {
        for a in 0..na {
            for (k, x) in random_simplex(no, 0.3, rng).into_iter().enumerate() {
                o[[s, a, k]] = x;
            }
        }
    }
    ObservationModel::new(o).unwrap()
}

pub fn random_features<R: Rng>(ns: usize, na: usize, nk: usize, rng: &mut R) -> FeatureMap {
    FeatureMap::new(Array3::from_shape_fn((ns, na, nk), |_| rng.random_range(0.0..1.0))).unwrap()
}

/// Observations drawn uniformly, each step occluded with probability `occluded`.
pub fn random_trajectory<R: Rng>(horizon: usize, no: usize, occluded: f64, rng: &mut R) -> ObservedTrajectory {
    let records = (0..horizon)
        .map(|_| {
            if rng.random::<f64>() < occluded {
                TimestepRecord::Occluded
            } else {
                TimestepRecord::Observed(rng.random_range(0..no))
            }
        })
        .collect();
    ObservedTrajectory::new(records).unwrap()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// One-sided sign-test p-value: `Pr(X >= wins)` for `X ~ Binomial(n, 1/2)`.
pub fn sign_test_p(wins: usize, n: usize) -> f64 {
    let mut log_c = vec![0.0f64; n + 1];
    for k in 1..=n {
        log_c[k] = log_c[k - 1] + ((n - k + 1) as f64).ln() - (k as f64).ln();
    }
    (wins..=n).map(|k| (log_c[k] - n as f64 * std::f64::consts::LN_2).exp()).sum()
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}
