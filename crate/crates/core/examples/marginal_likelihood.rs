//! Sum out an occluded stretch exactly and inspect what the learner believes
//! happened there.
//!
//! Usage: cargo run --example marginal_likelihood

use mmap_birl::envs::resolve_environment;
use mmap_birl::inference::{brute_force_likelihood, forward_backward, PolicyEvaluation};
use mmap_birl::observation::{decode_pair, ObservedTrajectory, TimestepRecord};

fn main() -> mmap_birl::Result<()> {
    let env = resolve_environment("forestworld", Some(0.3))?;
    let na = env.mdp.num_actions();
    let eval = PolicyEvaluation::solve(&env.mdp, &env.features, &env.true_weights, 1.0)?;
    let expert = env.expert_policy()?;
    let mut records = Vec::new();
    let mut s = 0;
    for t in 0..3 {
        let a = expert.action(s);
        records.push(if t == 1 {
            TimestepRecord::Occluded
        } else {
            TimestepRecord::Observed(s * na + a)
        });
        s = env.mdp.successors(s, a).iter().max_by(|x, y| x.1.total_cmp(&y.1)).unwrap().0;
    }
    let traj = ObservedTrajectory::new(records)?;
    let (ll, posterior) = forward_backward(&env.mdp, &eval.boltzmann, &env.observation, &traj)?;
    let exact = brute_force_likelihood(&env.mdp, &eval.boltzmann, &env.observation, &traj)?;
    println!("log marginal likelihood {ll:.6} (enumeration {:.6})", exact.ln());
    for t in 0..traj.len() {
        let mut top: Vec<(usize, f64)> = posterior.single_sparse(t).collect();
        top.sort_by(|x, y| y.1.total_cmp(&x.1));
        let shown: Vec<String> = top
            .iter()
            .take(3)
            .map(|&(x, p)| {
                let (s, a) = decode_pair(x, na);
                format!("(s{s}, a{a}) {p:.3}")
            })
            .collect();
        println!("t={t} {:?} support {}: {}", traj.records()[t], posterior.support_size(t), shown.join(", "));
    }
    Ok(())
}
