//! Describe a small MDP in the environment text format and recover its
//! reward from demonstrations.
//!
//! Usage: cargo run --example custom_environment

use mmap_birl::envs::parse_environment;
use mmap_birl::experiment::{expert_policy, generate_demonstrations, ExpertModel};
use mmap_birl::inference::{mmap_birl, AscentConfig};
use mmap_birl::mdp::solve_optimal;
use mmap_birl::observation::{OcclusionMode, OcclusionSpec};
use mmap_birl::reward::{reward_of, GaussianPrior};

/// A three-cell corridor: action 0 steps left, action 1 steps right, and the
/// right end pays off.
const CORRIDOR: &str = "\
states 3
actions 2
features 2
discount 0.9
initial 0 0.5
initial 1 0.5
transition 0 0 0 1.0
transition 0 1 1 0.9
transition 0 1 0 0.1
transition 1 0 0 0.9
transition 1 0 1 0.1
transition 1 1 2 0.9
transition 1 1 1 0.1
transition 2 0 1 1.0
transition 2 1 2 1.0
feature 2 1 0 1.0
feature 0 0 1 1.0
feature 1 0 1 1.0
feature 2 0 1 1.0
weights 1.0 -0.5
";

fn main() -> mmap_birl::Result<()> {
    let env = parse_environment(CORRIDOR, "corridor")?;
    let expert = expert_policy(&env, ExpertModel::Optimal, 1.0)?;
    let occlusion = OcclusionSpec::new(OcclusionMode::IidPerStep, 0.3)?;
    let (batch, _) = generate_demonstrations(&env, &expert, 8, occlusion, 20, 3)?;
    let prior = GaussianPrior::shared(2, 0.0, 1.0)?;
    let config = AscentConfig {
        beta: 1.0,
        step_size: 0.1,
        seed: 3,
        ..AscentConfig::default()
    };
    let (weights, result) = mmap_birl(&env.mdp, &batch, &env.observation, &env.features, &prior, &config)?;
    let (truth, _) = solve_optimal(&env.mdp, &env.true_reward()?)?;
    let (learned, _) = solve_optimal(&env.mdp, &reward_of(&weights, &env.features)?)?;
    println!("learned {:.3} after {} iterations (true {:.3})", weights.values(), result.iterations, env.true_weights.values());
    println!("expert actions {:?}, learned actions {:?}", truth.actions(), learned.actions());
    Ok(())
}
