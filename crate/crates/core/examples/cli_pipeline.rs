//! The command-line pipeline driven in-process: generate an instance,
//! precompute tables, sample, and benchmark. Same as running the `gbs`
//! binary with these arguments.
//!
//! cargo run --release --example cli_pipeline

use gbs_emulator::cli::run;

fn main() {
    let dir = std::env::temp_dir().join("gbs-cli-pipeline");
    std::fs::create_dir_all(&dir).unwrap();
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["gen-instance", "--modes", "8", "--squeezers", "4", "--eta", "0.5", "--rmax", "1", "--seed", "7", "--out", &p("inst.json")],
        vec!["precompute", "--instance", &p("inst.json"), "--order", "4", "--out", &p("table.gbsk")],
        vec![
            "sample", "--table", &p("table.gbsk"), "--instance", &p("inst.json"), "--method", "double_elision",
            "--samples", "20000", "--seed", "1", "--out", &p("chain.txt"),
        ],
        vec![
            "sample", "--instance", &p("inst.json"), "--method", "exact_reference", "--samples", "20000", "--seed", "1",
            "--out", &p("exact.txt"),
        ],
        vec![
            "benchmark", "--samples", &p("chain.txt"), &p("exact.txt"), "--instance", &p("inst.json"), "--table",
            &p("table.gbsk"), "--orders", "2..4", "--bootstrap", "20", "--out", &p("report"),
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in steps {
        let code = run(std::iter::once("gbs".to_string()).chain(args.iter().cloned()));
        if code != 0 {
            eprintln!("{} exited with {code}", args[0]);
            std::process::exit(code);
        }
    }
}
