//! Single- and double-elision sampling against the exact distribution and
//! the product-of-marginals baseline.
//!
//! cargo run --release --example chain_sampling

use gbs_emulator::benchmark::{empirical_distribution, product_of_marginals, tvd};
use gbs_emulator::cumulants::{correlator_table, cumulants_from_correlators, MemoryBudget};
use gbs_emulator::gaussian::{brute_force_distribution, random_instance};
use gbs_emulator::sampler::{batch_sample, Method, Sampler, SamplerConfig};
use gbs_emulator::Result;

fn main() -> Result<()> {
    let (inst, _) = random_instance(10, 5, 0.5, 1.0, 7, 2.0)?;
    let exact = brute_force_distribution(&inst)?;
    let kappa = cumulants_from_correlators(&correlator_table(&inst, 5, 1, MemoryBudget::default())?)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let n = 200_000;

    println!("product baseline TVD: {:.4}", tvd(&product_of_marginals(&exact, 10), &exact)?);
    for (method, k) in [
        (Method::SingleElision, 3),
        (Method::DoubleElision, 3),
        (Method::DoubleElision, 5),
        (Method::ExactReference, 3),
    ] {
        let cfg = SamplerConfig::new(method, k, n, 1).with_workers(workers);
        let sampler = Sampler::new(&cfg, Some(&kappa), Some(&inst))?;
        let batch = batch_sample(&sampler, &cfg)?;
        let d = tvd(&empirical_distribution(&batch.samples)?, &exact)?;
        println!(
            "{method:>15} K={k}: TVD {d:.4}  {:.0} samples/s  fallbacks {}",
            batch.timing.samples_per_second, batch.fallback_samples
        );
    }
    Ok(())
}
