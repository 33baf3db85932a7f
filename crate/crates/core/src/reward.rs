//! Linear feature rewards and the Gaussian prior over their weights.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mdp::RewardTable;

/// Feature values `phi[s, a, k]`, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap(Array3<f64>);

impl FeatureMap {
    pub fn new(phi: Array3<f64>) -> Result<Self> {
        if phi.dim().2 == 0 {
            return Err(Error::validation("feature map needs at least one feature"));
        }
        if phi.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::validation("feature values must lie in [0, 1]"));
        }
        Ok(Self(phi))
    }

    pub fn num_states(&self) -> usize {
        self.0.dim().0
    }

    pub fn num_actions(&self) -> usize {
        self.0.dim().1
    }

    pub fn num_features(&self) -> usize {
        self.0.dim().2
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.0
    }

    pub fn get(&self, s: usize, a: usize, k: usize) -> f64 {
        self.0[[s, a, k]]
    }

    /// The `(s, a)` slice of feature `k`.
    pub fn column(&self, k: usize) -> Array2<f64> {
        self.0.slice(ndarray::s![.., .., k]).to_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWeights(Array1<f64>);

impl FeatureWeights {
    pub fn new(theta: Array1<f64>) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("feature weights must be finite"));
        }
        Ok(Self(theta))
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        Self::new(Array1::from(theta.to_vec()))
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs_diff(&self, other: &FeatureWeights) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Independent Gaussian per weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mean: Array1<f64>,
    stddev: Array1<f64>,
}

impl GaussianPrior {
    pub fn new(mean: Array1<f64>, stddev: Array1<f64>) -> Result<Self> {
        if mean.len() != stddev.len() {
            return Err(Error::DimensionMismatch {
                what: "prior stddev",
                expected: mean.len(),
                found: stddev.len(),
            });
        }
        if stddev.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::validation("prior stddev entries must be positive"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::validation("prior mean must be finite"));
        }
        Ok(Self { mean, stddev })
    }

    /// The same mean and variance for each of `k` weights.
    pub fn shared(k: usize, mean: f64, variance: f64) -> Result<Self> {
        Self::new(Array1::from_elem(k, mean), Array1::from_elem(k, variance.sqrt()))
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn stddev(&self) -> &Array1<f64> {
        &self.stddev
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    fn check(&self, weights: &FeatureWeights) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "prior dimension",
                expected: self.len(),
                found: weights.len(),
            });
        }
        Ok(())
    }
}

/// `R(s, a) = sum_k theta_k phi_k(s, a)`.
pub fn reward_of(weights: &FeatureWeights, features: &FeatureMap) -> Result<RewardTable> {
    if weights.len() != features.num_features() {
        return Err(Error::DimensionMismatch {
            what: "feature weights",
            expected: features.num_features(),
            found: weights.len(),
        });
    }
    let (ns, na, nk) = features.values().dim();
    let theta = weights.values();
    let phi = features.values();
    let values = Array2::from_shape_fn((ns, na), |(s, a)| {
        (0..nk).map(|k| theta[k] * phi[[s, a, k]]).sum()
    });
    RewardTable::new(values)
}

pub fn log_prior(weights: &FeatureWeights, prior: &GaussianPrior) -> Result<f64> {
    prior.check(weights)?;
    let half_log_two_pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    Ok(weights
        .values()
        .iter()
        .zip(prior.mean.iter().zip(prior.stddev.iter()))
        .map(|(&t, (&m, &sd))| -(half_log_two_pi + sd.ln()) - (t - m).powi(2) / (2.0 * sd * sd))
        .sum())
}

/// `-(theta - mu) / sigma^2`, multiplied by `scale`.
///
/// `scale = 1` is the derivative of [`log_prior`]; `scale = 0.5` gives the
/// halved constant some write-ups of MAP-BIRL use.
pub fn prior_gradient_scaled(
    weights: &FeatureWeights,
    prior: &GaussianPrior,
    scale: f64,
) -> Result<Array1<f64>> {
    prior.check(weights)?;
    Ok(Array1::from_shape_fn(weights.len(), |k| {
        let sd = prior.stddev[k];
        -scale * (weights.values()[k] - prior.mean[k]) / (sd * sd)
    }))
}

pub fn prior_gradient(weights: &FeatureWeights, prior: &GaussianPrior) -> Result<Array1<f64>> {
    prior_gradient_scaled(weights, prior, 1.0)
}

pub fn sample_weights<R: Rng + ?Sized>(prior: &GaussianPrior, rng: &mut R) -> FeatureWeights {
    let theta = Array1::from_shape_fn(prior.len(), |k| {
        let z: f64 = StandardNormal.sample(rng);
        prior.mean[k] + prior.stddev[k] * z
    });
    FeatureWeights(theta)
}
