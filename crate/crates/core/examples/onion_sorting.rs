//! Learn onion-sorting preferences from occluded demonstrations, then sort a
//! simulated line of onions with the learned policy.
//!
//! Usage: cargo run --release --example onion_sorting [config]

use mmap_birl::config::load_experiment;
use mmap_birl::envs::onionworld::{ACTION_NAMES, FEATURE_NAMES};
use mmap_birl::envs::{simulate_sort, EnvironmentKind};
use mmap_birl::eval::precision_recall;
use mmap_birl::experiment::{expert_policy, generate_demonstrations, learn, Method};
use mmap_birl::mdp::solve_optimal;
use mmap_birl::reward::reward_of;
use mmap_birl::seed::SeedStream;

fn main() -> mmap_birl::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/onionworld.toml".into());
    let config = load_experiment(path.as_ref())?;
    let env = config.environment()?;
    let EnvironmentKind::Onionworld(spec) = &env.kind else {
        return Err(mmap_birl::Error::Config("expected an onionworld config".into()));
    };
    let d = &config.demonstrations;
    let expert = expert_policy(&env, d.expert, d.expert_beta)?;
    let (batch, _) = generate_demonstrations(&env, &expert, d.horizon, d.occlusion()?, d.trajectories, config.seed)?;
    let settings = config.learner_settings(env.features.num_features())?;
    for method in [Method::Mmap, Method::Ignore, Method::Em] {
        let outcome = learn(method, &env, &batch, &settings)?;
        let (policy, _) = solve_optimal(&env.mdp, &reward_of(&outcome.weights, &env.features)?)?;
        let mut rng = SeedStream::new(config.seed).rng("evaluation");
        let counts = simulate_sort(&policy, spec, config.evaluation.onions, config.evaluation.sort_max_steps, &mut rng)?;
        let (p, r) = precision_recall(&counts);
        println!("{method}: precision {p} recall {r} ({counts:?})");
        for (name, w) in FEATURE_NAMES.iter().zip(outcome.weights.values()) {
            println!("  {name:<24} {w:>7.3}");
        }
        let mut used: Vec<&str> = policy.actions().iter().map(|&a| ACTION_NAMES[a]).collect();
        used.sort();
        used.dedup();
        println!("  actions used: {}", used.join(", "));
    }
    Ok(())
}
