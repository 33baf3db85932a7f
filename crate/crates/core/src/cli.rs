//! The `mmap-birl` command line: `generate`, `learn`, `evaluate`, `sweep`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{load_experiment, load_sweep, to_toml, ExperimentConfig};
use crate::envs::{simulate_sort, EnvironmentKind};
use crate::error::{Error, Result};
use crate::eval::{
    best_methods, inverse_learning_error_with, parse_completed, precision_recall, rows_to_csv, run_sweep,
};
use crate::experiment::{expert_policy, generate_demonstrations, learn, Diagnostics, Method};
use crate::mdp::solve_optimal;
use crate::observation::{ground_truth_to_text, TrajectoryBatch};
use crate::reward::{reward_of, FeatureWeights};
use crate::seed::SeedStream;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ALL_CELLS_FAILED: i32 = 2;
pub const EXIT_ITERATION_CAPPED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mmap-birl", version, about = "Reward learning from occluded, noisy demonstrations")]
pub struct Cli {
    /// Worker threads. Outputs do not depend on this.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a demonstration batch and its ground truth.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Learn reward weights from a batch file.
    Learn {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Ascend from this many prior draws and keep the best (mmap only).
        #[arg(long)]
        restarts: Option<usize>,
        batch: PathBuf,
    },
    /// Score learned weights against the environment's true weights.
    Evaluate {
        #[command(flatten)]
        common: Common,
        weights: PathBuf,
    },
    /// Run an occlusion/noise sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Run only this method.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
}

/// Contents of `weights.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub environment: String,
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    pub weights: Vec<f64>,
    pub config: ExperimentConfig,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    // Write then rename, so an interrupted run never leaves a torn file.
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn experiment(common: &Common) -> Result<ExperimentConfig> {
    let mut config = load_experiment(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn out_path(common: &Common, config: &ExperimentConfig, default: &str) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(default))
}

pub fn cmd_generate(common: &Common, stdout: &mut dyn Write) -> Result<i32> {
    let config = experiment(common)?;
    let env = config.environment()?;
    let d = &config.demonstrations;
    let expert = expert_policy(&env, d.expert, d.expert_beta)?;
    let (batch, truths) = generate_demonstrations(&env, &expert, d.horizon, d.occlusion()?, d.trajectories, config.seed)?;
    let text = TrajectoryBatch::new(env.observation.num_observations(), batch)?.to_text();
    let truth = ground_truth_to_text(&truths, env.mdp.num_states(), env.mdp.num_actions());
    let out = out_path(common, &config, "demonstrations.txt");
    let truth_path = with_suffix(&out, ".truth");
    write_file(&out, &text)?;
    write_file(&truth_path, &truth)?;
    write_file(&with_suffix(&out, ".toml"), &to_toml(&config)?)?;
    writeln!(stdout, "sha256:{}  {}", sha256_hex(text.as_bytes()), out.display())?;
    writeln!(stdout, "sha256:{}  {}", sha256_hex(truth.as_bytes()), truth_path.display())?;
    Ok(EXIT_CONVERGED)
}

pub fn cmd_learn(
    common: &Common,
    method: Option<Method>,
    restarts: Option<usize>,
    batch_path: &Path,
    stdout: &mut dyn Write,
) -> Result<i32> {
    let mut config = experiment(common)?;
    if let Some(m) = method {
        config.method = m;
    }
    if let Some(r) = restarts {
        config.learner.ascent.restarts = r;
    }
    config.validate()?;
    let env = config.environment()?;
    let text = fs::read_to_string(batch_path)?;
    let batch = TrajectoryBatch::parse(&text)?;
    if batch.num_observations != env.observation.num_observations() {
        return Err(Error::DimensionMismatch {
            what: "observation symbols in batch file",
            expected: env.observation.num_observations(),
            found: batch.num_observations,
        });
    }
    let settings = config.learner_settings(env.features.num_features())?;
    let outcome = learn(config.method, &env, &batch.trajectories, &settings)?;

    let reward = reward_of(&outcome.weights, &env.features)?;
    let (policy, _) = solve_optimal(&env.mdp, &reward)?;
    let out = out_path(common, &config, "learned");
    fs::create_dir_all(&out)?;
    let weights = WeightsFile {
        environment: env.name.clone(),
        method: config.method,
        converged: outcome.converged,
        iterations: outcome.iterations,
        weights: outcome.weights.values().to_vec(),
        config: config.clone(),
    };
    let mut json = serde_json::to_string_pretty(&weights).map_err(|e| Error::Config(e.to_string()))?;
    json.push('\n');
    write_file(&out.join("weights.json"), &json)?;

    let mut table = String::from("state,action,reward\n");
    for s in 0..env.mdp.num_states() {
        for a in 0..env.mdp.num_actions() {
            table.push_str(&format!("{s},{a},{}\n", reward.get(s, a)));
        }
    }
    write_file(&out.join("reward.csv"), &table)?;
    let mut pol = String::from("state,action\n");
    for (s, a) in policy.actions().iter().enumerate() {
        pol.push_str(&format!("{s},{a}\n"));
    }
    write_file(&out.join("policy.csv"), &pol)?;

    let mut diag = String::new();
    for record in outcome.diagnostics {
        let record = match record {
            Diagnostics::Iteration(mut r) => {
                if !config.output.timing {
                    r.elapsed_s = None;
                }
                Diagnostics::Iteration(r)
            }
            other => other,
        };
        diag.push_str(&serde_json::to_string(&record).map_err(|e| Error::Config(e.to_string()))?);
        diag.push('\n');
    }
    write_file(&out.join("diagnostics.jsonl"), &diag)?;
    write_file(&out.join("config.toml"), &to_toml(&config)?)?;

    let status = if outcome.converged { "converged" } else { "iteration-capped" };
    writeln!(
        stdout,
        "{} {status} after {} iterations; weights {:?}",
        config.method,
        outcome.iterations,
        weights.weights
    )?;
    Ok(if outcome.converged { EXIT_CONVERGED } else { EXIT_ITERATION_CAPPED })
}

pub fn cmd_evaluate(common: &Common, weights_path: &Path, stdout: &mut dyn Write) -> Result<i32> {
    let config = experiment(common)?;
    let env = config.environment()?;
    let text = fs::read_to_string(weights_path)?;
    let file: WeightsFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), format!("weights file: {e}")))?;
    if file.weights.len() != env.features.num_features() {
        return Err(Error::DimensionMismatch {
            what: "learned weights",
            expected: env.features.num_features(),
            found: file.weights.len(),
        });
    }
    let weights = FeatureWeights::from_slice(&file.weights)?;
    let true_reward = env.true_reward()?;
    let (expert, _) = solve_optimal(&env.mdp, &true_reward)?;
    let (learned, _) = solve_optimal(&env.mdp, &reward_of(&weights, &env.features)?)?;
    let ile = inverse_learning_error_with(&env.mdp, &true_reward, &expert, &learned, config.evaluation.ile_norm)?;
    let report = match &env.kind {
        EnvironmentKind::Onionworld(spec) => {
            let mut rng = SeedStream::new(config.seed).rng("evaluation");
            let counts = simulate_sort(
                &learned,
                spec,
                config.evaluation.onions,
                config.evaluation.sort_max_steps,
                &mut rng,
            )?;
            let (p, r) = precision_recall(&counts);
            format!(
                "environment,method,ile,tp,fp,tn,fn,precision,recall\n{},{},{ile},{},{},{},{},{p},{r}\n",
                env.name, file.method, counts.tp, counts.fp, counts.tn, counts.fn_
            )
        }
        _ => format!("environment,method,ile\n{},{},{ile}\n", env.name, file.method),
    };
    stdout.write_all(report.as_bytes())?;
    if let Some(out) = &common.out {
        write_file(out, &report)?;
    }
    Ok(EXIT_CONVERGED)
}

pub fn cmd_sweep(common: &Common, method: Option<Method>, stdout: &mut dyn Write) -> Result<i32> {
    let mut config = load_sweep(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(m) = method {
        config.methods = vec![m];
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let completed = match fs::read_to_string(&out) {
        Ok(text) => parse_completed(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    write_file(&with_suffix(&out, ".toml"), &to_toml(&config)?)?;
    let mirror = with_suffix(&out, ".jsonl");
    let write_all = |rows: &[crate::eval::SweepRow]| -> Result<()> {
        write_file(&out, &rows_to_csv(rows))?;
        let mut jsonl = String::new();
        for row in rows {
            jsonl.push_str(&serde_json::to_string(row).map_err(|e| Error::Config(e.to_string()))?);
            jsonl.push('\n');
        }
        write_file(&mirror, &jsonl)
    };
    let rows = run_sweep(&config, &completed, write_all)?;
    write_all(&rows)?;
    for row in rows.iter().filter(|r| r.failed()) {
        writeln!(
            stdout,
            "failed: {} occlusion={} noise={}: {}",
            row.method,
            row.occlusion,
            row.noise,
            row.error.as_deref().unwrap_or("unknown error")
        )?;
    }
    for (occlusion, noise, best, ile) in best_methods(&rows) {
        writeln!(stdout, "best occlusion={occlusion} noise={noise}: {best} (ile {ile})")?;
    }
    if !rows.is_empty() && rows.iter().all(|r| r.failed()) {
        return Ok(EXIT_ALL_CELLS_FAILED);
    }
    Ok(EXIT_CONVERGED)
}

pub fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Generate { common } => cmd_generate(common, stdout),
        Command::Learn {
            common,
            method,
            restarts,
            batch,
        } => cmd_learn(common, *method, *restarts, batch, stdout),
        Command::Evaluate { common, weights } => cmd_evaluate(common, weights, stdout),
        Command::Sweep { common, method } => cmd_sweep(common, *method, stdout),
    }
}

/// Parse arguments, run the command in a pool of `--jobs` threads and
/// return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_CONVERGED };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let mut buffer = Vec::new();
    let result = pool.install(|| dispatch(&cli, &mut buffer));
    let _ = std::io::stdout().write_all(&buffer);
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
