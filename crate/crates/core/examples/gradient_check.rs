//! Compare the analytic log-posterior gradient with central differences.
//!
//! Usage: cargo run --example gradient_check [theta1 theta2 theta3]

use mmap_birl::envs::resolve_environment;
use mmap_birl::experiment::{expert_policy, generate_demonstrations, ExpertModel};
use mmap_birl::inference::{likelihood_gradient, log_marginal_likelihood};
use mmap_birl::observation::{OcclusionMode, OcclusionSpec};
use mmap_birl::reward::{log_prior, prior_gradient, FeatureWeights, GaussianPrior};

fn main() -> mmap_birl::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let theta = FeatureWeights::from_slice(if args.len() == 3 { &args } else { &[-0.7, -1.2, 0.4] })?;
    let env = resolve_environment("forestworld", Some(0.3))?;
    let prior = GaussianPrior::shared(3, -1.0, 0.5)?;
    let expert = expert_policy(&env, ExpertModel::Optimal, 1.0)?;
    let occlusion = OcclusionSpec::new(OcclusionMode::ContiguousBlock, 0.2)?;
    let (batch, _) = generate_demonstrations(&env, &expert, 6, occlusion, 2, 5)?;
    let beta = 0.03;
    let posterior = |w: &FeatureWeights| -> mmap_birl::Result<f64> {
        Ok(log_marginal_likelihood(&env.mdp, w, &batch, &env.observation, &env.features, beta)? + log_prior(w, &prior)?)
    };
    let analytic = likelihood_gradient(&env.mdp, &theta, &batch, &env.observation, &env.features, beta)?
        + prior_gradient(&theta, &prior)?;
    let h = 1e-5;
    println!("{:>3} {:>14} {:>14} {:>10}", "k", "analytic", "central", "rel err");
    for k in 0..3 {
        let mut up = theta.values().to_vec();
        let mut down = up.clone();
        up[k] += h;
        down[k] -= h;
        let fd = (posterior(&FeatureWeights::from_slice(&up)?)? - posterior(&FeatureWeights::from_slice(&down)?)?)
            / (2.0 * h);
        let rel = (analytic[k] - fd).abs() / analytic[k].abs().max(fd.abs());
        println!("{k:>3} {:>14.8} {fd:>14.8} {rel:>10.2e}", analytic[k]);
    }
    Ok(())
}
