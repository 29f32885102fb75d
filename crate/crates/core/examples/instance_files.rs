//! Writing a random instance in squeezer + transmission form and loading it
//! back as a covariance matrix.
//!
//! cargo run --release --example instance_files

use gbs_emulator::gaussian::{load_instance, random_instance, save_covariance_json, save_jiuzhang_json};
use gbs_emulator::Result;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("gbs-instance-files");
    std::fs::create_dir_all(&dir)?;
    let (inst, spec) = random_instance(6, 3, 0.6, 1.0, 1, 2.0)?;

    let jz = dir.join("jiuzhang.json");
    save_jiuzhang_json(&jz, &spec, 2.0)?;
    let (back, spec_back) = load_instance(&jz)?;
    let diff = (back.sigma() - inst.sigma()).abs().max();
    println!("{}: M={} squeezers kept: {}, max |Δσ| = {diff:.1e}", jz.display(), back.modes(), spec_back.is_some());

    let cov = dir.join("covariance.json");
    save_covariance_json(&cov, &inst)?;
    let (back, spec_back) = load_instance(&cov)?;
    let diff = (back.sigma() - inst.sigma()).abs().max();
    println!("{}: M={} squeezers kept: {}, max |Δσ| = {diff:.1e}", cov.display(), back.modes(), spec_back.is_some());
    Ok(())
}
