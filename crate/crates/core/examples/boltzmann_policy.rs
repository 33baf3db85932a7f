//! How the Boltzmann sharpness shapes the expert's action distribution.
//!
//! Usage: cargo run --example boltzmann_policy [state]

use mmap_birl::envs::forestworld::ACTIONS;
use mmap_birl::envs::{build_forestworld, ForestworldSpec};
use mmap_birl::mdp::{solve_optimal, Policy, StochasticPolicy};

fn main() -> mmap_birl::Result<()> {
    let state: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    let env = build_forestworld(&ForestworldSpec::default())?;
    let (_, values) = solve_optimal(&env.mdp, &env.true_reward()?)?;
    let names: Vec<&str> = ACTIONS.iter().map(|a| a.0).collect();
    println!("state {state}, Q = {:.3}", values.q.row(state));
    println!("{:>6}  {}", "beta", names.iter().map(|n| format!("{n:>7}")).collect::<String>());
    for beta in [0.0, 0.03, 0.3, 1.0, 3.0, 30.0] {
        let policy = StochasticPolicy::boltzmann_from_q(&values.q, beta)?;
        let row: String = (0..names.len()).map(|a| format!("{:>7.3}", policy.prob(state, a))).collect();
        println!("{beta:>6}  {row}");
    }
    Ok(())
}
