//! Small timing sweep: preprocessing and per-sample cost against M, and
//! throughput against the worker count.
//!
//! cargo run --release --example scaling_sweep

use gbs_emulator::cli::{points_csv, run_scaling, throughput_csv, ScalingSettings};
use gbs_emulator::cumulants::MemoryBudget;
use gbs_emulator::Result;

fn main() -> Result<()> {
    let settings = ScalingSettings {
        orders: vec![3, 4],
        modes: vec![16, 24, 32, 48],
        samples_per_point: 50,
        workers: vec![1, 2, 4],
        eta: 0.5,
        r_max: 1.0,
        seed: 0,
        throughput_modes: 32,
    };
    let r = run_scaling(&settings, MemoryBudget::default())?;
    print!("{}", points_csv(&r.points));
    for f in &r.fits {
        println!("K={}: precompute slope {:.2}, per-sample slope {:.2}", f.order, f.precompute_slope, f.per_sample_slope);
    }
    print!("{}", throughput_csv(&r.throughput));
    Ok(())
}
