//! Secret key rate against attenuation with per-point μ optimization, written
//! as CSV to stdout. Smaller blocks than the default keep it quick.
//!
//! ```sh
//! cargo run --release --example sweep
//! ```

use ddiqkd::finite_key::BoundMode;
use ddiqkd::harness::{cmd_sweep, write_sweep_csv, ExperimentConfig, SweepAxis};

fn main() -> ddiqkd::Result<()> {
    let dir = std::env::temp_dir().join("ddiqkd-sweep-example");
    let mut cfg = ExperimentConfig::default();
    cfg.output.dir = dir.clone();
    cfg.block_size = 1_000_000;
    cfg.distill.mode = BoundMode::Asymptotic;
    cfg.sweep.axis = SweepAxis::DistanceKm;
    cfg.sweep.points = vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0];
    cfg.sweep.mu_min = 5e-4;
    cfg.sweep.pilot_sifted = 100_000;

    let rows = cmd_sweep(&cfg)?;
    write_sweep_csv(std::io::stdout().lock(), &rows)?;
    eprintln!("written to {}", dir.join("sweep.csv").display());
    Ok(())
}
