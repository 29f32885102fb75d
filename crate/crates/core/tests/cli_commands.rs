use gbs_emulator::cli::{execute, run, Cli, Command};
use gbs_emulator::cumulants::{read_table, write_table, Correlators, Cumulants};
use gbs_emulator::gaussian::save_covariance_json;
use gbs_emulator::sampler::read_samples;
use gbs_emulator::GaussianInstance;
use clap::Parser;
use std::path::Path;
use tempfile::TempDir;

fn gbs(args: &[&str]) -> i32 {
    run(std::iter::once("gbs").chain(args.iter().copied()))
}

fn manifest(args: &[&str]) -> gbs_emulator::cli::RunManifest {
    let cli = Cli::try_parse_from(std::iter::once("gbs").chain(args.iter().copied())).unwrap();
    execute(&cli.command).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn gen(dir: &TempDir, name: &str, modes: &str, seed: &str) -> String {
    let out = p(dir, name);
    let k = (modes.parse::<usize>().unwrap() / 2).to_string();
    assert_eq!(
        gbs(&["gen-instance", "--modes", modes, "--squeezers", &k, "--eta", "0.5", "--rmax", "1", "--seed", seed, "--out", &out]),
        0
    );
    out
}

#[test]
fn gen_instance_is_deterministic_and_validated() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.json", "8", "7");
    let b = gen(&dir, "b.json", "8", "7");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (inst, spec) = gbs_emulator::gaussian::load_instance(&a).unwrap();
    assert_eq!((inst.modes(), spec.unwrap().squeezers()), (8, 4));
    let bad = p(&dir, "bad.json");
    assert_eq!(
        gbs(&["gen-instance", "--modes", "8", "--squeezers", "4", "--eta", "0", "--rmax", "1", "--out", &bad]),
        2
    );
    assert!(!Path::new(&bad).exists());
}

#[test]
fn precompute_counts_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "10", "1");
    let out = p(&dir, "t.gbsk");
    let m = manifest(&["precompute", "--instance", &inst, "--order", "4", "--workers", "2", "--out", &out]);
    assert_eq!(m.details["count"], 385);
    assert_eq!(m.outputs.len(), 2);
    assert_eq!(m.inputs[0].sha256.len(), 64);
    assert!(m.details["phase1_seconds"].is_number() && m.details["phase2_seconds"].is_number());
    let k = read_table::<Cumulants>(&out).unwrap();
    let c = read_table::<Correlators>(p(&dir, "t.gbsc")).unwrap();
    assert_eq!((k.values().len(), c.values().len()), (385, 385));

    let again = p(&dir, "again.gbsk");
    write_table(&again, &k).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());

    // a second run writes identical bytes
    let out2 = p(&dir, "t2.gbsk");
    assert_eq!(gbs(&["precompute", "--instance", &inst, "--order", "4", "--out", &out2]), 0);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn vacuum_precompute_and_sampling() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "vac.json");
    save_covariance_json(&inst, &GaussianInstance::vacuum(6, 2.0).unwrap()).unwrap();
    let table = p(&dir, "vac.gbsk");
    assert_eq!(gbs(&["precompute", "--instance", &inst, "--order", "4", "--out", &table]), 0);
    let k = read_table::<Cumulants>(&table).unwrap();
    let start = k.index().order_offset(2);
    assert!(k.values()[start..].iter().all(|v| *v == 0.0));
    for method in ["single_elision", "double_elision", "exact_reference"] {
        let out = p(&dir, &format!("{method}.txt"));
        assert_eq!(
            gbs(&["sample", "--table", &table, "--instance", &inst, "--method", method, "--samples", "50", "--out", &out]),
            0
        );
        let (h, s) = read_samples(&out).unwrap();
        assert_eq!(h.unwrap().method, method);
        assert_eq!(s.len(), 50);
        assert!(s.as_flat().iter().all(|&b| b == 0));
    }
}

#[test]
fn sampling_is_reproducible_and_guarded() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "8", "3");
    let table = p(&dir, "t.gbsk");
    assert_eq!(gbs(&["precompute", "--instance", &inst, "--order", "3", "--out", &table]), 0);
    let draw = |name: &str, workers: &str| {
        let out = p(&dir, name);
        let m = manifest(&[
            "sample", "--table", &table, "--method", "single_elision", "--samples", "1000", "--seed", "9", "--workers",
            workers, "--out", &out,
        ]);
        assert!(m.details["samples_per_second"].as_f64().unwrap() > 0.0);
        std::fs::read(&out).unwrap()
    };
    let a = draw("a.txt", "1");
    assert_eq!(a, draw("b.txt", "1"));
    assert_eq!(a, draw("c.txt", "3"));

    let bin = p(&dir, "s.bin");
    assert_eq!(
        gbs(&["sample", "--table", &table, "--method", "single_elision", "--samples", "1000", "--seed", "9", "--binary", "--out", &bin]),
        0
    );
    let (_, text) = read_samples(p(&dir, "a.txt")).unwrap();
    let (h, packed) = read_samples(&bin).unwrap();
    assert!(h.is_none());
    assert_eq!(text.as_flat(), packed.as_flat());

    // chain methods need a table; mismatched sizes are rejected
    assert_eq!(gbs(&["sample", "--instance", &inst, "--samples", "5", "--out", &p(&dir, "x")]), 2);
    let other = gen(&dir, "o.json", "10", "3");
    assert_eq!(
        gbs(&["sample", "--table", &table, "--instance", &other, "--samples", "5", "--out", &p(&dir, "x")]),
        2
    );
    assert_eq!(gbs(&["sample", "--table", &table, "--samples", "5", "--order", "6", "--out", &p(&dir, "x")]), 2);

    let big = gen(&dir, "big.json", "25", "1");
    assert_eq!(
        gbs(&["sample", "--instance", &big, "--method", "exact_reference", "--samples", "5", "--out", &p(&dir, "x")]),
        3
    );
}

#[test]
fn benchmark_reports_side_by_side() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "6", "5");
    let table = p(&dir, "t.gbsk");
    assert_eq!(gbs(&["precompute", "--instance", &inst, "--order", "4", "--out", &table]), 0);
    let a = p(&dir, "chain.txt");
    let b = p(&dir, "exact.txt");
    assert_eq!(gbs(&["sample", "--table", &table, "--method", "double_elision", "--order", "4", "--samples", "3000", "--out", &a]), 0);
    assert_eq!(
        gbs(&["sample", "--instance", &inst, "--method", "exact_reference", "--samples", "3000", "--seed", "2", "--out", &b]),
        0
    );
    let out = p(&dir, "rep");
    let m = manifest(&[
        "benchmark", "--samples", &a, &b, "--instance", &inst, "--orders", "2..4", "--bootstrap", "5", "--out", &out,
    ]);
    assert_eq!(m.outputs.len(), 4);
    assert_eq!(m.inputs.len(), 3);
    let scatter = std::fs::read_to_string(dir.path().join("rep/cumulants_scatter.csv")).unwrap();
    let header = scatter.lines().next().unwrap();
    assert!(header.contains("estimate_chain") && header.contains("estimate_exact"), "{header}");
    let clicks = std::fs::read_to_string(dir.path().join("rep/clicks.csv")).unwrap();
    assert!(clicks.starts_with("C,p_emp_chain,p_emp_exact,p_exact"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rep/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["samples"].as_array().unwrap().len(), 2);

    let empty = p(&dir, "empty.txt");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(gbs(&["benchmark", "--samples", &empty, "--instance", &inst, "--out", &p(&dir, "rep2")]), 2);
}

#[test]
fn benchmark_without_oracle_above_twenty_modes() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "22", "5");
    let table = p(&dir, "t.gbsk");
    assert_eq!(gbs(&["precompute", "--instance", &inst, "--order", "3", "--out", &table]), 0);
    let s = p(&dir, "s.txt");
    assert_eq!(gbs(&["sample", "--table", &table, "--method", "single_elision", "--samples", "200", "--out", &s]), 0);
    let m = manifest(&[
        "benchmark", "--samples", &s, "--instance", &inst, "--table", &table, "--orders", "2..3", "--bootstrap", "0",
        "--out", &p(&dir, "rep"),
    ]);
    assert!(m.notices.iter().any(|n| n.contains("XEB and TVD skipped")));
    assert!(dir.path().join("rep/cumulants_scatter.csv").exists());
}

#[test]
fn scaling_writes_both_csvs() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "scal.csv");
    let m = manifest(&[
        "scaling", "--orders", "3", "--modes", "8", "--samples-per-point", "3", "--workers", "1,2", "--out", &out,
    ]);
    assert_eq!(m.outputs.len(), 2);
    assert!(m.details["fits"][0]["per_sample_slope"].is_null());
    assert!(m.notices[0].contains("slope undefined"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    let tp = std::fs::read_to_string(dir.path().join("scal_throughput.csv")).unwrap();
    assert_eq!(tp.lines().count(), 3);
    match Cli::try_parse_from(["gbs", "scaling", "--modes", "8,16", "--out", "x"]).unwrap().command {
        Command::Scaling(a) => assert_eq!(a.orders, vec![3, 4, 5]),
        _ => unreachable!(),
    }
}
