//! XEB at fixed total click number for exact samples and for bitstrings
//! spread uniformly over each click number.
//!
//! cargo run --release --example xeb_by_clicks

use gbs_emulator::benchmark::{expected_xeb, uniform_weight_samples, xeb};
use gbs_emulator::gaussian::{brute_force_distribution, random_instance};
use gbs_emulator::sampler::{sample_rng, ExactSampler, Samples};
use gbs_emulator::Result;

fn main() -> Result<()> {
    let (inst, _) = random_instance(8, 4, 0.7, 1.0, 8, 2.0)?;
    let dist = brute_force_distribution(&inst)?;
    let sampler = ExactSampler::from_distribution(&dist, 8)?;
    let n = 100_000;
    let mut bits = vec![0u8; 8 * n];
    for (i, row) in bits.chunks_exact_mut(8).enumerate() {
        sampler.sample(&mut sample_rng(1, i), row);
    }
    let samples = Samples::new(8, bits)?;

    println!("  C      n   exact XEB ± se    expected   uniform XEB");
    for p in xeb(&samples, &dist, 1..=8)? {
        let want = expected_xeb(&dist, 8, p.clicks)?;
        let u = uniform_weight_samples(8, p.clicks, p.n, 2)?;
        let uni = xeb(&u, &dist, p.clicks..=p.clicks)?.first().map_or(f64::NAN, |q| q.xeb);
        println!("{:>3} {:>6}   {:+.4} ± {:.4}    {:+.4}     {:+.4}", p.clicks, p.n, p.xeb, p.se, want, uni);
    }
    Ok(())
}
