//! Correlator and cumulant tables, their click-variable form, and the
//! binary table files.
//!
//! cargo run --release --example cumulant_tables

use gbs_emulator::cumulants::{
    click_cumulant, correlator_table, cumulants_from_correlators, read_table, write_table, Cumulants, MemoryBudget,
};
use gbs_emulator::gaussian::random_instance;
use gbs_emulator::Result;

fn main() -> Result<()> {
    let (inst, _) = random_instance(10, 5, 0.5, 1.0, 3, 2.0)?;
    let c = correlator_table(&inst, 4, 2, MemoryBudget::default())?;
    let k = cumulants_from_correlators(&c)?;
    println!("M=10, K=4: {} subsets per table", k.values().len());

    for s in [vec![0], vec![0, 1], vec![0, 1, 2], vec![0, 1, 2, 3]] {
        let rank = k.index().rank(&s);
        println!(
            "S={s:?}: c = {:+.5}, κ = {:+.3e}, click cumulant = {:+.3e}",
            c.get(&s),
            k.get(&s),
            click_cumulant(&k, rank, s.len())
        );
    }

    // largest cumulant magnitude per order
    for d in 2..=4 {
        let r = k.index().order_range(d);
        let top = k.values()[r].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        println!("order {d}: max |κ| = {top:.3e}");
    }

    let path = std::env::temp_dir().join("gbs-example.gbsk");
    write_table(&path, &k)?;
    let back = read_table::<Cumulants>(&path)?;
    println!("{} reloaded, identical: {}", path.display(), back.values() == k.values());

    let tight = MemoryBudget { cap_bytes: 4096 };
    match correlator_table(&inst, 6, 1, tight) {
        Err(e) => println!("with a 4 KiB cap at K=6: {e} (exit code {})", e.exit_code()),
        Ok(_) => println!("K=6 fits in 4 KiB"),
    }
    Ok(())
}
