//! Full validation report for two sample sets: a chain sampler and the
//! exact reference sampler.
//!
//! cargo run --release --example benchmark_report

use gbs_emulator::benchmark::{run_benchmark, write_report, BenchmarkOptions};
use gbs_emulator::cumulants::{correlator_table, cumulants_from_correlators, MemoryBudget};
use gbs_emulator::gaussian::{brute_force_distribution, random_instance};
use gbs_emulator::sampler::{batch_sample, Method, Sampler, SamplerConfig};
use gbs_emulator::Result;

fn main() -> Result<()> {
    let (inst, _) = random_instance(10, 5, 0.5, 1.0, 11, 2.0)?;
    let kappa = cumulants_from_correlators(&correlator_table(&inst, 5, 1, MemoryBudget::default())?)?;
    let exact = brute_force_distribution(&inst)?;

    let mut sets = Vec::new();
    for method in [Method::DoubleElision, Method::ExactReference] {
        let cfg = SamplerConfig::new(method, 4, 100_000, 5);
        let s = Sampler::new(&cfg, Some(&kappa), Some(&inst))?;
        sets.push((method.to_string(), batch_sample(&s, &cfg)?.samples));
    }

    let opts = BenchmarkOptions {
        orders: 2..=4,
        bootstrap: 20,
        ..BenchmarkOptions::default()
    };
    let report = run_benchmark(&sets, &kappa, Some(&exact), &opts)?;
    for s in &report.samples {
        println!("{} (N={}), TVD {:?}", s.label, s.n_samples, s.tvd);
        for o in &s.orders {
            println!(
                "  order {}: {} subsets, pearson {:?}, spearman {:?}, slope {:?}",
                o.order, o.subsets, o.pearson, o.spearman, o.slope
            );
        }
    }
    let dir = std::env::temp_dir().join("gbs-benchmark-report");
    for p in write_report(&report, &dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
