//! Run a sweep config and print the result table as CSV.
//!
//! Usage: cargo run --release --example run_sweep [config]

use mmap_birl::config::load_sweep;
use mmap_birl::eval::{best_methods, rows_to_csv, run_sweep};

fn main() -> mmap_birl::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/smoke_sweep.toml".into());
    let config = load_sweep(path.as_ref())?;
    let rows = run_sweep(&config, &[], |done| {
        eprintln!("{} cells done", done.len());
        Ok(())
    })?;
    print!("{}", rows_to_csv(&rows));
    for (occlusion, noise, method, ile) in best_methods(&rows) {
        eprintln!("occlusion {occlusion} noise {noise}: {method} best with ILE {ile:.3}");
    }
    Ok(())
}
