//! Solve Forestworld under its true reward and print the policy as a grid.
//!
//! Usage: cargo run --example solve_forestworld [slip]

use mmap_birl::envs::forestworld::{cell_index, GRID};
use mmap_birl::envs::{build_forestworld, ForestworldSpec};
use mmap_birl::mdp::solve_optimal;

/// In action order: north, east, south, west.
const ARROWS: [&str; 4] = ["^", ">", "v", "<"];

fn main() -> mmap_birl::Result<()> {
    let mut spec = ForestworldSpec::default();
    if let Some(slip) = std::env::args().nth(1).and_then(|a| a.parse().ok()) {
        spec.slip = slip;
    }
    let env = build_forestworld(&spec)?;
    let (policy, values) = solve_optimal(&env.mdp, &env.true_reward()?)?;
    println!("slip {} discount {}", spec.slip, spec.discount);
    for y in (0..GRID).rev() {
        let mut line = String::new();
        for x in 0..GRID {
            let s = cell_index(x, y);
            let mark = if (x, y) == spec.goal_cell {
                "G"
            } else if spec.avoid_cells.contains(&(x, y)) {
                "x"
            } else {
                ""
            };
            line.push_str(&format!("{:>2}{mark:<1} {:>7.2}  ", ARROWS[policy.action(s)], values.v[s]));
        }
        println!("{line}");
    }
    Ok(())
}
