//! Ground-truth click probabilities of a lossy two-mode-squeezer network.
//!
//! cargo run --release --example exact_probabilities

use gbs_emulator::benchmark::exact_total_clicks;
use gbs_emulator::gaussian::{brute_force_distribution, build_input_covariance, exact_probability, random_instance};
use gbs_emulator::Result;

fn main() -> Result<()> {
    // a single lossless pair never clicks on one side only
    let tmsv = build_input_covariance(&[0.5], 2.0)?;
    for bits in [[0u8, 0], [0, 1], [1, 0], [1, 1]] {
        println!("TMSV r=0.5  p{bits:?} = {:.6}", exact_probability(&tmsv, &bits)?);
    }
    println!("1/cosh²(0.5)     = {:.6}", 1.0 / 0.5f64.cosh().powi(2));

    let (inst, spec) = random_instance(8, 4, 0.5, 1.0, 7, 2.0)?;
    println!("\nM=8, {} squeezers r = {:.3?}", spec.squeezers(), spec.r);
    let dist = brute_force_distribution(&inst)?;
    println!("Σ p = {:.15}", dist.iter().sum::<f64>());
    for (c, p) in exact_total_clicks(&inst)?.iter().enumerate() {
        println!("p(C={c}) = {p:.5}");
    }
    Ok(())
}
