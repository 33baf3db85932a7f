//! Generate a batch of noisy, occluded demonstrations and print it in the
//! batch text format alongside the hidden ground truth.
//!
//! Usage: cargo run --example simulate_demonstrations [block|iid] [rate]

use mmap_birl::envs::resolve_environment;
use mmap_birl::experiment::{expert_policy, generate_demonstrations, ExpertModel};
use mmap_birl::observation::{encode_pair, OcclusionMode, OcclusionSpec, TrajectoryBatch};

fn main() -> mmap_birl::Result<()> {
    let mut args = std::env::args().skip(1);
    let mode = match args.next().as_deref() {
        Some("iid") => OcclusionMode::IidPerStep,
        _ => OcclusionMode::ContiguousBlock,
    };
    let rate = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.3);
    let env = resolve_environment("forestworld", Some(0.3))?;
    let expert = expert_policy(&env, ExpertModel::Optimal, 1.0)?;
    let occlusion = OcclusionSpec::new(mode, rate)?;
    let (batch, truths) = generate_demonstrations(&env, &expert, 10, occlusion, 5, 42)?;
    let na = env.mdp.num_actions();
    let text = TrajectoryBatch::new(env.observation.num_observations(), batch)?.to_text();
    print!("{text}");
    println!("truth:");
    for t in &truths {
        let line: Vec<String> = t.steps.iter().map(|&(s, a)| encode_pair(s, a, na).to_string()).collect();
        println!("{}", line.join(" "));
    }
    Ok(())
}
