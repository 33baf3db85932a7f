//! Learn Forestworld weights from occluded, noisy demonstrations and print
//! the ascent trace.
//!
//! Usage: cargo run --release --example learn_forestworld [occlusion] [restarts]

use mmap_birl::envs::resolve_environment;
use mmap_birl::eval::inverse_learning_error;
use mmap_birl::experiment::{expert_policy, generate_demonstrations, ExpertModel};
use mmap_birl::inference::{mmap_birl, AscentConfig};
use mmap_birl::mdp::solve_optimal;
use mmap_birl::observation::{OcclusionMode, OcclusionSpec};
use mmap_birl::reward::{reward_of, GaussianPrior};

fn main() -> mmap_birl::Result<()> {
    let mut args = std::env::args().skip(1);
    let rate = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.2);
    let restarts = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let env = resolve_environment("forestworld", Some(0.3))?;
    let expert = expert_policy(&env, ExpertModel::Optimal, 1.0)?;
    let occlusion = OcclusionSpec::new(OcclusionMode::ContiguousBlock, rate)?;
    let (batch, _) = generate_demonstrations(&env, &expert, 10, occlusion, 10, 11)?;
    let prior = GaussianPrior::shared(3, -1.0, 0.5)?;
    let config = AscentConfig {
        seed: 11,
        restarts,
        ..AscentConfig::default()
    };
    let (weights, result) = mmap_birl(&env.mdp, &batch, &env.observation, &env.features, &prior, &config)?;
    for r in result.records.iter().step_by(10) {
        println!(
            "iter {:>3} log posterior {:>10.4} |grad| {:>8.4} cached {}",
            r.iteration,
            r.log_posterior.unwrap_or(f64::NAN),
            r.gradient_norm,
            r.cache_hit
        );
    }
    let truth = env.true_reward()?;
    let (best, _) = solve_optimal(&env.mdp, &truth)?;
    let (learned, _) = solve_optimal(&env.mdp, &reward_of(&weights, &env.features)?)?;
    println!("weights {:.3} (true {:.3})", weights.values(), env.true_weights.values());
    println!(
        "converged {} after {} iterations, {} cache hits, ILE {:.3}",
        result.converged,
        result.iterations,
        result.cache_hits,
        inverse_learning_error(&env.mdp, &truth, &best, &learned)?
    );
    Ok(())
}
