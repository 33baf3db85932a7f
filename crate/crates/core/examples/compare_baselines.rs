//! Compare the three learners on Forestworld across occlusion levels.
//!
//! Usage: cargo run --release --example compare_baselines [batches] [noise]

use mmap_birl::config::LearnerSection;
use mmap_birl::eval::{run_sweep, SweepConfig};
use mmap_birl::experiment::{ExpertModel, Method};
use mmap_birl::observation::OcclusionMode;

fn main() -> mmap_birl::Result<()> {
    let mut args = std::env::args().skip(1);
    let batches = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);
    let noise = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.3);
    let config = SweepConfig {
        seed: 2024,
        environment: "forestworld".into(),
        occlusion_levels: vec![0.1, 0.2, 0.3, 0.4],
        noise_levels: vec![noise],
        batches,
        trajectories_per_batch: 10,
        horizon: 10,
        methods: vec![Method::Mmap, Method::Ignore, Method::Em],
        occlusion_mode: OcclusionMode::ContiguousBlock,
        expert: ExpertModel::Optimal,
        expert_beta: 1.0,
        ile_norm: Default::default(),
        timing: true,
        learner: LearnerSection::default(),
    };
    let rows = run_sweep(&config, &[], |_| Ok(()))?;
    println!("{:<8} {:>9} {:>10} {:>8} {:>9}", "method", "occlusion", "ile_mean", "ile_se", "time_s");
    for row in &rows {
        println!(
            "{:<8} {:>9} {:>10.3} {:>8.3} {:>9.3}",
            row.method.name(),
            row.occlusion,
            row.ile_mean.unwrap_or(f64::NAN),
            row.ile_se.unwrap_or(f64::NAN),
            row.time_mean_s.unwrap_or(f64::NAN),
        );
        if let Some(e) = &row.error {
            println!("  failed: {e}");
        }
    }
    Ok(())
}
