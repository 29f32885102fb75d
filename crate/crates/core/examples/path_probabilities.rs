//! Probability the chain sampler assigns to each bitstring, compared with
//! the exact law. At full order with M ≤ 5 the two coincide.
//!
//! cargo run --release --example path_probabilities

use gbs_emulator::cumulants::{correlator_table, cumulants_from_correlators, MemoryBudget};
use gbs_emulator::gaussian::{brute_force_distribution, outcome_bits, random_instance};
use gbs_emulator::sampler::{ChainSampler, ExpansionOrders};
use gbs_emulator::Result;

fn main() -> Result<()> {
    for (m, orders) in [
        (5, ExpansionOrders::full(5)),
        (8, ExpansionOrders::single_elision(3)),
        (8, ExpansionOrders::double_elision(4)),
    ] {
        let (inst, _) = random_instance(m, m / 2, 0.6, 1.0, 2, 2.0)?;
        let exact = brute_force_distribution(&inst)?;
        let k = cumulants_from_correlators(&correlator_table(&inst, orders.step.max(orders.plus), 1, MemoryBudget::default())?)?;
        let chain = ChainSampler::with_orders(&k, orders)?;
        let mut tables = chain.new_tables();
        let (mut worst, mut total) = (0.0f64, 0.0);
        for (i, p) in exact.iter().enumerate() {
            let q = chain.evaluate_path(&mut tables, &outcome_bits(i, m))?;
            worst = worst.max((q - p).abs());
            total += q;
        }
        println!("M={m} {orders:?}\n  max |q − p| = {worst:.2e}, Σ q = {total:.12}");
    }
    Ok(())
}
