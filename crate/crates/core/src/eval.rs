//! Metrics and the batched experiment runner.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::{resolve_environment, Environment};
use crate::error::{Error, Result};
use crate::experiment::{expert_policy, generate_demonstrations, learn, ExpertModel, LearnerSettings, Method};
use crate::mdp::{evaluate_policy, solve_optimal, DiscountedMdp, Policy, RewardTable};
use crate::observation::{GroundTruthTrajectory, OcclusionMode, OcclusionSpec};
use crate::reward::{reward_of, FeatureWeights};
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IleNorm {
    /// `sum_s |V_E(s) - V_L(s)|`
    #[default]
    L1,
    /// `sum_s (V_E(s) - V_L(s))^2`
    Squared,
}

/// Inverse learning error of `learned` against `expert`, both evaluated
/// under the true reward.
pub fn inverse_learning_error(
    mdp: &DiscountedMdp,
    true_reward: &RewardTable,
    expert: &impl Policy,
    learned: &impl Policy,
) -> Result<f64> {
    inverse_learning_error_with(mdp, true_reward, expert, learned, IleNorm::L1)
}

pub fn inverse_learning_error_with(
    mdp: &DiscountedMdp,
    true_reward: &RewardTable,
    expert: &impl Policy,
    learned: &impl Policy,
    norm: IleNorm,
) -> Result<f64> {
    let ve = evaluate_policy(mdp, true_reward, expert)?;
    let vl = evaluate_policy(mdp, true_reward, learned)?;
    Ok(ve
        .iter()
        .zip(vl.iter())
        .map(|(a, b)| match norm {
            IleNorm::L1 => (a - b).abs(),
            IleNorm::Squared => (a - b) * (a - b),
        })
        .sum())
}

/// Outcome counts of a sort, with blemished onions as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// A ratio that is undefined when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ratio {
    Value(f64),
    Undefined,
}

impl Ratio {
    fn of(num: u64, den: u64) -> Self {
        if den == 0 {
            Ratio::Undefined
        } else {
            Ratio::Value(num as f64 / den as f64)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Ratio::Value(v) => Some(v),
            Ratio::Undefined => None,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{v:.3}"),
            Ratio::Undefined => f.write_str("undefined"),
        }
    }
}

/// `(TP / (TP + FP), TP / (TP + FN))`.
pub fn precision_recall(counts: &ConfusionCounts) -> (Ratio, Ratio) {
    (
        Ratio::of(counts.tp, counts.tp + counts.fp),
        Ratio::of(counts.tp, counts.tp + counts.fn_),
    )
}

/// States visited anywhere in the ground truth.
pub fn visited_states(truths: &[GroundTruthTrajectory], num_states: usize) -> Vec<bool> {
    let mut seen = vec![false; num_states];
    for t in truths {
        for &(s, _) in &t.steps {
            seen[s] = true;
        }
    }
    seen
}

pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub environment: String,
    pub occlusion_levels: Vec<f64>,
    pub noise_levels: Vec<f64>,
    pub batches: usize,
    pub trajectories_per_batch: usize,
    pub horizon: usize,
    pub methods: Vec<Method>,
    #[serde(default = "default_mode")]
    pub occlusion_mode: OcclusionMode,
    #[serde(default = "default_expert")]
    pub expert: ExpertModel,
    #[serde(default = "default_expert_beta")]
    pub expert_beta: f64,
    #[serde(default)]
    pub ile_norm: IleNorm,
    /// Record wall-clock time per run. Timings vary between runs.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub learner: crate::config::LearnerSection,
}

fn default_mode() -> OcclusionMode {
    OcclusionMode::ContiguousBlock
}

fn default_expert() -> ExpertModel {
    ExpertModel::Optimal
}

fn default_expert_beta() -> f64 {
    1.0
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("sweep: {m}")));
        for &r in self.occlusion_levels.iter().chain(&self.noise_levels) {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("rate {r} outside [0, 1]"));
            }
        }
        if self.occlusion_levels.is_empty() || self.noise_levels.is_empty() || self.methods.is_empty() {
            return bad("occlusion_levels, noise_levels and methods must be non-empty".into());
        }
        if self.batches == 0 || self.trajectories_per_batch == 0 || self.horizon == 0 {
            return bad("batches, trajectories_per_batch and horizon must be at least 1".into());
        }
        self.learner.validate()
    }

    /// Cells in output order: method, then noise, then occlusion.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &method in &self.methods {
            for &noise in &self.noise_levels {
                for &occlusion in &self.occlusion_levels {
                    out.push(SweepCell { method, occlusion, noise });
                }
            }
        }
        out
    }
}

/// One `(method, occlusion, noise)` combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub method: Method,
    pub occlusion: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub occlusion: f64,
    pub noise: f64,
    pub batch_count: usize,
    /// `None` when the cell failed.
    pub ile_mean: Option<f64>,
    pub ile_se: Option<f64>,
    pub time_mean_s: Option<f64>,
    pub time_se_s: Option<f64>,
    pub occlusion_mode: OcclusionMode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    /// Per-batch values, in batch order.
    #[serde(default)]
    pub ile: Vec<f64>,
    #[serde(default)]
    pub time_s: Vec<f64>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.ile_mean.is_none()
    }

    pub fn key(&self) -> String {
        format!("{},{},{},{}", self.method, self.occlusion, self.noise, self.occlusion_mode)
    }
}

pub const CSV_HEADER: &str = "method,occlusion,noise,batch_count,ile_mean,ile_se,time_mean_s,time_se_s,occlusion_mode";

fn opt(v: Option<f64>, missing: &str) -> String {
    v.map_or_else(|| missing.to_string(), |x| x.to_string())
}

pub fn row_to_csv(row: &SweepRow) -> String {
    let (ile_missing, time_missing) = if row.failed() { ("failed", "failed") } else { ("", "na") };
    format!(
        "{},{},{},{},{},{},{},{},{}",
        row.method,
        row.occlusion,
        row.noise,
        row.batch_count,
        opt(row.ile_mean, ile_missing),
        opt(row.ile_se, ile_missing),
        opt(row.time_mean_s, time_missing),
        opt(row.time_se_s, time_missing),
        row.occlusion_mode
    )
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row_to_csv(row));
        out.push('\n');
    }
    out
}

/// Completed cells from an earlier CSV, keyed by [`SweepRow::key`]. Failed
/// rows are dropped so they run again.
pub fn parse_completed(text: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        Some(_) => return Err(Error::parse(1, "unexpected sweep table header")),
        None => return Ok(rows),
    }
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            // A partially written final line is skipped.
            continue;
        }
        if f[4] == "failed" {
            continue;
        }
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::parse(lineno, format!("bad number {s:?}"))) };
        let maybe = |s: &str| -> Result<Option<f64>> { if s == "na" { Ok(None) } else { num(s).map(Some) } };
        let mode = match f[8] {
            "contiguous_block" => OcclusionMode::ContiguousBlock,
            "iid_per_step" => OcclusionMode::IidPerStep,
            other => return Err(Error::parse(lineno, format!("bad occlusion mode {other:?}"))),
        };
        rows.push(SweepRow {
            method: f[0].parse()?,
            occlusion: num(f[1])?,
            noise: num(f[2])?,
            batch_count: f[3].parse().map_err(|_| Error::parse(lineno, "bad batch count"))?,
            ile_mean: Some(num(f[4])?),
            ile_se: Some(num(f[5])?),
            time_mean_s: maybe(f[6])?,
            time_se_s: maybe(f[7])?,
            occlusion_mode: mode,
            error: None,
            ile: Vec::new(),
            time_s: Vec::new(),
        });
    }
    Ok(rows)
}

/// Result of one learner run on one demonstration batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub ile: f64,
    pub seconds: f64,
    pub weights: FeatureWeights,
}

/// Learn from one freshly generated batch and score the result.
pub fn run_batch(
    env: &Environment,
    method: Method,
    occlusion: OcclusionSpec,
    config: &SweepConfig,
    seed: u64,
) -> Result<BatchOutcome> {
    let expert = expert_policy(env, config.expert, config.expert_beta)?;
    let (batch, _) =
        generate_demonstrations(env, &expert, config.horizon, occlusion, config.trajectories_per_batch, seed)?;
    let mut settings: LearnerSettings = config.learner.settings(env.features.num_features())?;
    settings.ascent.seed = seed;
    let started = Instant::now();
    let outcome = learn(method, env, &batch, &settings)?;
    let seconds = started.elapsed().as_secs_f64();
    let true_reward = env.true_reward()?;
    let learned = reward_of(&outcome.weights, &env.features)?;
    let (learned_pi, _) = solve_optimal(&env.mdp, &learned)?;
    let (expert_pi, _) = solve_optimal(&env.mdp, &true_reward)?;
    let ile = inverse_learning_error_with(&env.mdp, &true_reward, &expert_pi, &learned_pi, config.ile_norm)?;
    Ok(BatchOutcome {
        ile,
        seconds,
        weights: outcome.weights,
    })
}

/// Seed of batch `b`. Every cell uses the same seeds, so cells differ only
/// in their occlusion, noise and method.
pub fn batch_seed(config: &SweepConfig, b: usize) -> u64 {
    SeedStream::new(config.seed).derive("batch", &[b as u64])
}

pub fn run_cell(config: &SweepConfig, env: &Environment, cell: SweepCell) -> SweepRow {
    let occlusion = OcclusionSpec {
        mode: config.occlusion_mode,
        rate: cell.occlusion,
    };
    let outcomes: Vec<Result<BatchOutcome>> = (0..config.batches)
        .into_par_iter()
        .map(|b| run_batch(env, cell.method, occlusion, config, batch_seed(config, b)))
        .collect();
    let mut row = SweepRow {
        method: cell.method,
        occlusion: cell.occlusion,
        noise: cell.noise,
        batch_count: config.batches,
        ile_mean: None,
        ile_se: None,
        time_mean_s: None,
        time_se_s: None,
        occlusion_mode: config.occlusion_mode,
        error: None,
        ile: Vec::new(),
        time_s: Vec::new(),
    };
    for (b, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                row.ile.push(o.ile);
                row.time_s.push(o.seconds);
            }
            Err(e) => {
                row.error = Some(format!("batch {b}: {e}"));
                row.ile.clear();
                row.time_s.clear();
                return row;
            }
        }
    }
    let (m, se) = mean_and_se(&row.ile);
    row.ile_mean = Some(m);
    row.ile_se = Some(se);
    if config.timing {
        let (m, se) = mean_and_se(&row.time_s);
        row.time_mean_s = Some(m);
        row.time_se_s = Some(se);
    } else {
        row.time_s.clear();
    }
    row
}

/// Run every cell not already in `completed`, calling `progress` with the
/// table so far (in output order) after each cell.
pub fn run_sweep(
    config: &SweepConfig,
    completed: &[SweepRow],
    mut progress: impl FnMut(&[SweepRow]) -> Result<()>,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let cells = config.cells();
    let mut rows: Vec<Option<SweepRow>> = cells
        .iter()
        .map(|c| {
            let key = format!("{},{},{},{}", c.method, c.occlusion, c.noise, config.occlusion_mode);
            completed.iter().find(|r| !r.failed() && r.key() == key).cloned()
        })
        .collect();
    let mut envs: Vec<(f64, Environment)> = Vec::new();
    for &noise in &config.noise_levels {
        envs.push((noise, resolve_environment(&config.environment, Some(noise))?));
    }
    for (i, cell) in cells.iter().enumerate() {
        if rows[i].is_some() {
            continue;
        }
        let env = &envs.iter().find(|(n, _)| *n == cell.noise).expect("environment per noise level").1;
        rows[i] = Some(run_cell(config, env, *cell));
        let done: Vec<SweepRow> = rows.iter().flatten().cloned().collect();
        progress(&done)?;
    }
    Ok(rows.into_iter().flatten().collect())
}

/// `(occlusion, noise, method)` with the lowest mean ILE per data setting.
pub fn best_methods(rows: &[SweepRow]) -> Vec<(f64, f64, Method, f64)> {
    let mut out: Vec<(f64, f64, Method, f64)> = Vec::new();
    for row in rows {
        let Some(ile) = row.ile_mean else { continue };
        match out.iter_mut().find(|(o, n, _, _)| *o == row.occlusion && *n == row.noise) {
            Some(entry) if ile < entry.3 => {
                entry.2 = row.method;
                entry.3 = ile;
            }
            Some(_) => {}
            None => out.push((row.occlusion, row.noise, row.method, ile)),
        }
    }
    out
}
