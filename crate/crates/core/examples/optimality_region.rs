//! Build the region of rewards under which a policy stays optimal and probe
//! it with random perturbations.
//!
//! Usage: cargo run --example optimality_region [scale]

use mmap_birl::envs::resolve_environment;
use mmap_birl::inference::{gradient_reusable, reward_optimality_region};
use mmap_birl::mdp::solve_optimal;
use mmap_birl::reward::{reward_of, FeatureWeights};
use mmap_birl::seed::SeedStream;
use rand::Rng;

fn main() -> mmap_birl::Result<()> {
    let scale: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.2);
    let env = resolve_environment("forestworld", None)?;
    let theta = env.true_weights.values().to_vec();
    let (policy, _) = solve_optimal(&env.mdp, &env.true_reward()?)?;
    let region = reward_optimality_region(&env.mdp, &policy)?;
    let margins = region.margins(&env.true_reward()?);
    let tied = margins.iter().filter(|m| m.abs() <= 1e-9).count();
    let tightest = margins.iter().cloned().filter(|m| *m < -1e-9).fold(f64::NEG_INFINITY, f64::max);
    println!(
        "{} constraints, {tied} tied at zero, tightest strict margin {tightest:.4}",
        region.row_pairs().len()
    );
    let mut rng = SeedStream::new(1).rng("perturbation");
    let mut inside = 0;
    for _ in 0..1000 {
        let moved: Vec<f64> = theta.iter().map(|x| x + scale * rng.random_range(-1.0..1.0)).collect();
        let reward = reward_of(&FeatureWeights::from_slice(&moved)?, &env.features)?;
        inside += gradient_reusable(&region, &reward) as usize;
    }
    println!("perturbation scale {scale}: policy unchanged for {inside}/1000 draws");
    Ok(())
}
