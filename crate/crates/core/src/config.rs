//! Experiment and sweep configuration files (TOML).
//!
//! The run seed is mandatory. All randomness is derived from it through
//! named sub-streams: `generation` for demonstrations, `initialization` for
//! the learner's starting weights and `evaluation` for simulated sorts.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::SegmentStart;
use crate::envs::{resolve_environment, Environment};
use crate::error::{Error, Result};
use crate::eval::{IleNorm, SweepConfig};
use crate::experiment::{ExpertModel, LearnerSettings, Method};
use crate::inference::ascent::AscentConfig;
use crate::observation::{OcclusionMode, OcclusionSpec};
use crate::reward::GaussianPrior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub mean: f64,
    pub variance: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        Self {
            mean: -1.0,
            variance: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmSection {
    pub em_max_rounds: usize,
    pub em_tolerance: f64,
}

impl Default for EmSection {
    fn default() -> Self {
        Self {
            em_max_rounds: 20,
            em_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IgnoreSection {
    pub segment_start: SegmentStart,
}

/// Prior and learner hyperparameters shared by experiments and sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSection {
    pub prior: PriorSection,
    pub ascent: AscentConfig,
    pub em: EmSection,
    pub ignore: IgnoreSection,
}

impl LearnerSection {
    pub fn validate(&self) -> Result<()> {
        self.ascent.validate()?;
        if !(self.prior.variance > 0.0 && self.prior.variance.is_finite() && self.prior.mean.is_finite()) {
            return Err(Error::Config("prior: variance must be positive and mean finite".into()));
        }
        if self.em.em_max_rounds == 0 || !(self.em.em_tolerance > 0.0) {
            return Err(Error::Config("em: em_max_rounds and em_tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn settings(&self, num_features: usize) -> Result<LearnerSettings> {
        self.validate()?;
        Ok(LearnerSettings {
            prior: GaussianPrior::shared(num_features, self.prior.mean, self.prior.variance)?,
            ascent: self.ascent.clone(),
            em_max_rounds: self.em.em_max_rounds,
            em_tolerance: self.em.em_tolerance,
            segment_start: self.ignore.segment_start,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemonstrationSection {
    pub trajectories: usize,
    pub horizon: usize,
    pub occlusion_mode: OcclusionMode,
    pub occlusion_rate: f64,
    pub expert: ExpertModel,
    /// Only used by the Boltzmann expert.
    pub expert_beta: f64,
}

impl Default for DemonstrationSection {
    fn default() -> Self {
        Self {
            trajectories: 10,
            horizon: 10,
            occlusion_mode: OcclusionMode::ContiguousBlock,
            occlusion_rate: 0.0,
            expert: ExpertModel::Optimal,
            expert_beta: 1.0,
        }
    }
}

impl DemonstrationSection {
    pub fn occlusion(&self) -> Result<OcclusionSpec> {
        OcclusionSpec::new(self.occlusion_mode, self.occlusion_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Onions per simulated sort.
    pub onions: usize,
    pub sort_max_steps: usize,
    pub ile_norm: IleNorm,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            onions: 50,
            sort_max_steps: 20,
            ile_norm: IleNorm::L1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Include wall-clock timings in outputs. Timings differ between runs.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// `forestworld`, `onionworld`, or a path to an environment file.
    pub environment: String,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Sensor-noise rate of a builtin domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default)]
    pub demonstrations: DemonstrationSection,
    #[serde(default)]
    pub learner: LearnerSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_method() -> Method {
    Method::Mmap
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.noise {
            if !(0.0..=1.0).contains(&n) {
                return Err(Error::Config(format!("noise: rate {n} outside [0, 1]")));
            }
        }
        let d = &self.demonstrations;
        if d.trajectories == 0 || d.horizon == 0 {
            return Err(Error::Config("demonstrations: trajectories and horizon must be at least 1".into()));
        }
        d.occlusion().map_err(|e| Error::Config(format!("demonstrations: {e}")))?;
        if !(d.expert_beta >= 0.0 && d.expert_beta.is_finite()) {
            return Err(Error::Config("demonstrations: expert_beta must be finite and >= 0".into()));
        }
        if self.learner.ascent.restarts > 1 && self.method != Method::Mmap {
            return Err(Error::Config("learner.ascent: restarts apply to the mmap method only".into()));
        }
        self.learner.validate()
    }

    pub fn environment(&self) -> Result<Environment> {
        resolve_environment(&self.environment, self.noise)
    }

    /// Learner settings with the run seed applied.
    pub fn learner_settings(&self, num_features: usize) -> Result<LearnerSettings> {
        let mut s = self.learner.settings(num_features)?;
        s.ascent.seed = self.seed;
        Ok(s)
    }
}

pub fn from_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = from_toml(&text)?;
    config.validate()?;
    Ok(config)
}

pub fn load_sweep(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: SweepConfig = from_toml(&text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c: ExperimentConfig = from_toml("seed = 4\nenvironment = \"forestworld\"\n").unwrap();
        assert_eq!(c.method, Method::Mmap);
        assert_eq!(c.learner.ascent, AscentConfig::default());
        assert_eq!(c.learner.prior.variance, 0.5);
        c.validate().unwrap();
    }

    #[test]
    fn seed_is_mandatory_and_keys_are_checked() {
        assert!(from_toml::<ExperimentConfig>("environment = \"forestworld\"\n").is_err());
        assert!(from_toml::<ExperimentConfig>("seed = 1\nenvironment = \"x\"\nbogus = 2\n").is_err());
        let err = from_toml::<ExperimentConfig>("seed = 1\nenvironment = \"x\"\n[learner.ascent]\nseed = 3\n");
        assert!(err.is_err());
    }

    #[test]
    fn round_trip() {
        let text = "seed = 9\nenvironment = \"onionworld\"\nmethod = \"em\"\nnoise = 0.3\n\
            [demonstrations]\nocclusion_rate = 0.2\nocclusion_mode = \"iid_per_step\"\n\
            [learner.ascent]\nbeta = 0.5\ncache = \"off\"\n[output]\ntiming = true\n";
        let c: ExperimentConfig = from_toml(text).unwrap();
        let again: ExperimentConfig = from_toml(&to_toml(&c).unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.learner.ascent.beta, 0.5);
    }
}
