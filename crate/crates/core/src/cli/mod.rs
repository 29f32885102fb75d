//! Command-line orchestration behind the `gbs` binary. Every command writes
//! its artifacts and prints a [`RunManifest`] as JSON on stdout.

pub mod scaling;

use crate::benchmark::{run_benchmark, write_report, BenchmarkOptions, EstimatorMode};
use crate::cumulants::{read_table, write_table, CumulantTable, Cumulants, MemoryBudget};
use crate::error::{bail, GbsError, Result};
use crate::gaussian::{brute_force_distribution, load_instance, random_instance, save_jiuzhang_json, BRUTE_FORCE_MAX_MODES};
use crate::sampler::{batch_sample, read_samples, write_samples_binary, write_samples_text, Method, Sampler, SamplerConfig};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use scaling::{
    fit_slopes, measure_throughput, method_for_order, points_csv, precompute_timed, run_scaling, throughput_csv,
    time_per_sample, PhaseTimes, ScalingFit, ScalingPoint, ScalingResult, ScalingSettings, ThroughputPoint,
};

#[derive(Debug, Parser)]
#[command(name = "gbs", version, about = "Cumulant-truncation GBS emulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Random lossy two-mode-squeezer instance.
    GenInstance(GenInstanceArgs),
    /// Correlator and cumulant tables up to order K.
    Precompute(PrecomputeArgs),
    /// Draw samples with a chain method or the exact reference.
    Sample(SampleArgs),
    /// Validation report for one or more sample files.
    Benchmark(BenchmarkArgs),
    /// Timing sweep over mode counts, orders and worker counts.
    Scaling(ScalingArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenInstanceArgs {
    #[arg(long)]
    pub modes: usize,
    #[arg(long)]
    pub squeezers: usize,
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub rmax: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::DEFAULT_HBAR)]
    pub hbar: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PrecomputeArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub order: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Cumulant table; the correlator table goes next to it with a `.gbsc`
    /// extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value = "double_elision")]
    pub method: Method,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Truncation order; defaults to the table order capped at 5.
    #[arg(long)]
    pub order: Option<usize>,
    /// Orders of the auxiliary recursions as `plus,p1,p2`.
    #[arg(long, value_parser = parse_triple)]
    pub aux_orders: Option<(usize, usize, usize)>,
    #[arg(long, default_value_t = 0.0)]
    pub clamp_epsilon: f64,
    /// Packed binary output instead of text.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchmarkArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub samples: Vec<PathBuf>,
    #[arg(long)]
    pub instance: PathBuf,
    /// Cumulant table for the theory side; recomputed from the instance
    /// when absent.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value = "2..5", value_parser = parse_range)]
    pub orders: RangeInclusive<usize>,
    #[arg(long, value_parser = parse_range)]
    pub xeb_range: Option<RangeInclusive<usize>>,
    #[arg(long, default_value_t = crate::benchmark::DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    #[arg(long, default_value = "plugin")]
    pub estimator: EstimatorMode,
    #[arg(long, default_value_t = 1.0)]
    pub order5_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
    pub orders: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub modes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub samples_per_point: usize,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub workers: Vec<usize>,
    /// Mode count of the throughput sweep; largest of `--modes` by default.
    #[arg(long)]
    pub throughput_modes: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-point CSV; throughput goes to `<stem>_throughput.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_triple(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected three comma-separated orders, got {s:?}")),
    }
}

/// `a..b` (inclusive) or a single value.
pub fn parse_range(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    let r = match s.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.trim_start_matches('='))?,
        None => {
            let v = num(s)?;
            v..=v
        }
    };
    if r.start() > r.end() {
        return Err(format!("empty range {s:?}"));
    }
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<InputHash>,
    pub version: String,
    pub wall_seconds: f64,
    pub peak_memory_bytes: u64,
    pub outputs: Vec<PathBuf>,
    /// Command-specific results and timings.
    pub details: Value,
    pub notices: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn hash_inputs<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<Vec<InputHash>> {
    paths
        .into_iter()
        .map(|p| {
            Ok(InputHash {
                path: p.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

fn correlator_path(out: &Path) -> PathBuf {
    out.with_extension("gbsc")
}

fn throughput_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_throughput.csv"))
}

struct Outcome {
    inputs: Vec<InputHash>,
    outputs: Vec<PathBuf>,
    peak: u64,
    details: Value,
    notices: Vec<String>,
}

fn gen_instance(a: &GenInstanceArgs) -> Result<Outcome> {
    let (inst, spec) = random_instance(a.modes, a.squeezers, a.eta, a.rmax, a.seed, a.hbar)?;
    save_jiuzhang_json(&a.out, &spec, a.hbar)?;
    Ok(Outcome {
        inputs: vec![],
        outputs: vec![a.out.clone()],
        peak: (inst.modes() * inst.modes() * 4 * 8) as u64,
        details: json!({ "modes": inst.modes(), "squeezers": spec.squeezers() }),
        notices: vec![],
    })
}

fn precompute(a: &PrecomputeArgs) -> Result<Outcome> {
    let inputs = hash_inputs([&a.instance])?;
    let (inst, _) = load_instance(&a.instance)?;
    let budget = MemoryBudget::from_env()?;
    let (c, k, times) = precompute_timed(&inst, a.order, a.workers, budget)?;
    let cpath = correlator_path(&a.out);
    write_table(&a.out, &k)?;
    write_table(&cpath, &c)?;
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone(), cpath],
        peak: 2 * 8 * k.values().len() as u64,
        details: json!({
            "modes": k.modes(),
            "order": k.max_order(),
            "count": k.values().len(),
            "phase1_seconds": times.phase1_seconds,
            "phase2_seconds": times.phase2_seconds,
        }),
        notices: vec![],
    })
}

fn sample(a: &SampleArgs) -> Result<Outcome> {
    let inputs = hash_inputs(a.table.iter().chain(a.instance.iter()))?;
    let kappa: Option<CumulantTable> = a.table.as_ref().map(read_table::<Cumulants>).transpose()?;
    let inst = a.instance.as_ref().map(load_instance).transpose()?.map(|(i, _)| i);
    if let (Some(k), Some(i)) = (&kappa, &inst) {
        if k.modes() != i.modes() {
            bail!(Dimension, "table has {} modes but instance has {}", k.modes(), i.modes());
        }
    }
    let order = match (a.order, &kappa) {
        (Some(o), _) => o,
        (None, Some(k)) => k.max_order().min(5),
        (None, None) => 3,
    };
    let cfg = SamplerConfig {
        order,
        method: a.method,
        aux_orders: a.aux_orders,
        seed: a.seed,
        samples: a.samples,
        workers: a.workers,
        clamp_epsilon: a.clamp_epsilon,
    };
    let sampler = Sampler::new(&cfg, kappa.as_ref(), inst.as_ref())?;
    let batch = batch_sample(&sampler, &cfg)?;
    if a.binary {
        write_samples_binary(&a.out, &batch.samples)?;
    } else {
        write_samples_text(&a.out, &batch.header(), &batch.samples)?;
    }
    let m = sampler.modes() as u64;
    let table_mem = kappa.as_ref().map_or(0, |k| 8 * k.values().len() as u64);
    let dist_mem = if matches!(sampler, Sampler::Exact(_)) { 8u64 << m } else { 0 };
    let mut notices = Vec::new();
    if !batch.failures.is_empty() {
        notices.push(format!("{} samples failed numerically and were dropped", batch.failures.len()));
    }
    if batch.fallback_samples > 0 {
        notices.push(format!(
            "{} samples hit a vanished prefix marginal and used the first-order step",
            batch.fallback_samples
        ));
    }
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        peak: table_mem + dist_mem + (batch.table_bytes * cfg.workers) as u64 + m * cfg.samples as u64,
        details: json!({
            "modes": m,
            "order": order,
            "samples": batch.samples.len(),
            "failures": batch.failures.len(),
            "fallback_samples": batch.fallback_samples,
            "mean_sample_seconds": batch.timing.mean_sample_seconds,
            "samples_per_second": batch.timing.samples_per_second,
            "timing": batch.timing,
        }),
        notices,
    })
}

fn benchmark(a: &BenchmarkArgs) -> Result<Outcome> {
    let mut paths = a.samples.clone();
    paths.push(a.instance.clone());
    paths.extend(a.table.iter().cloned());
    let inputs = hash_inputs(&paths)?;
    let (inst, _) = load_instance(&a.instance)?;
    let mut sets = Vec::with_capacity(a.samples.len());
    for p in &a.samples {
        let (_, s) = read_samples(p)?;
        if s.is_empty() {
            bail!(Domain, "sample file {} is empty", p.display());
        }
        if s.modes() != inst.modes() {
            bail!(Dimension, "{} has {} modes, instance has {}", p.display(), s.modes(), inst.modes());
        }
        let label = p.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
        sets.push((label, s));
    }
    let kappa = match &a.table {
        Some(t) => read_table::<Cumulants>(t)?,
        None => precompute_timed(&inst, *a.orders.end(), a.workers, MemoryBudget::from_env()?)?.1,
    };
    if kappa.modes() != inst.modes() {
        bail!(Dimension, "table has {} modes, instance has {}", kappa.modes(), inst.modes());
    }
    let mut notices = Vec::new();
    let exact = if inst.modes() <= BRUTE_FORCE_MAX_MODES {
        Some(brute_force_distribution(&inst)?)
    } else {
        notices.push(format!(
            "M={} exceeds {BRUTE_FORCE_MAX_MODES}: XEB and TVD skipped, cumulant tests only",
            inst.modes()
        ));
        None
    };
    let opts = BenchmarkOptions {
        orders: a.orders.clone(),
        xeb_range: a.xeb_range.clone(),
        bootstrap: a.bootstrap,
        seed: a.seed,
        estimator: a.estimator,
        order5_fraction: a.order5_fraction,
    };
    let report = run_benchmark(&sets, &kappa, exact.as_deref(), &opts)?;
    let outputs = write_report(&report, &a.out)?;
    notices.extend(report.notices.iter().cloned());
    Ok(Outcome {
        inputs,
        outputs,
        peak: 8 * kappa.values().len() as u64
            + exact.as_ref().map_or(0, |d| 8 * d.len() as u64)
            + sets.iter().map(|(_, s)| s.as_flat().len() as u64).sum::<u64>(),
        details: serde_json::to_value(&report.samples)?,
        notices,
    })
}

fn scaling_cmd(a: &ScalingArgs) -> Result<Outcome> {
    if a.modes.is_empty() || a.orders.is_empty() {
        bail!(Domain, "scaling needs at least one order and one mode count");
    }
    if a.workers.contains(&0) {
        bail!(Domain, "worker counts must be positive");
    }
    let s = ScalingSettings {
        orders: a.orders.clone(),
        modes: a.modes.clone(),
        samples_per_point: a.samples_per_point.max(1),
        workers: a.workers.clone(),
        eta: a.eta,
        r_max: a.rmax,
        seed: a.seed,
        throughput_modes: a.throughput_modes.unwrap_or(*a.modes.iter().max().unwrap()),
    };
    let budget = MemoryBudget::from_env()?;
    let r = run_scaling(&s, budget)?;
    std::fs::write(&a.out, points_csv(&r.points))?;
    let tpath = throughput_path(&a.out);
    std::fs::write(&tpath, throughput_csv(&r.throughput))?;
    let notices = r.fits.iter().filter_map(|f| f.note.as_ref().map(|n| format!("K={}: {n}", f.order))).collect();
    let m = *a.modes.iter().max().unwrap() as u64;
    let k = *a.orders.iter().max().unwrap() as u32;
    Ok(Outcome {
        inputs: vec![],
        outputs: vec![a.out.clone(), tpath],
        peak: 2 * 8 * m.saturating_pow(k),
        details: json!({
            "fits": r.fits.iter().map(|f| json!({
                "order": f.order,
                "precompute_slope": finite_or_null(f.precompute_slope),
                "per_sample_slope": finite_or_null(f.per_sample_slope),
            })).collect::<Vec<_>>(),
            "available_parallelism": std::thread::available_parallelism().map_or(1, |n| n.get()),
        }),
        notices,
    })
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenInstance(_) => "gen-instance",
            Command::Precompute(_) => "precompute",
            Command::Sample(_) => "sample",
            Command::Benchmark(_) => "benchmark",
            Command::Scaling(_) => "scaling",
        }
    }
}

/// Runs one command and returns its manifest.
pub fn execute(cmd: &Command) -> Result<RunManifest> {
    let t0 = Instant::now();
    let out = match cmd {
        Command::GenInstance(a) => gen_instance(a),
        Command::Precompute(a) => precompute(a),
        Command::Sample(a) => sample(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Scaling(a) => scaling_cmd(a),
    }?;
    let config = match serde_json::to_value(cmd)? {
        Value::Object(mut m) => m.remove(cmd.name()).unwrap_or(Value::Null),
        v => v,
    };
    Ok(RunManifest {
        command: cmd.name().to_string(),
        config,
        inputs: out.inputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: t0.elapsed().as_secs_f64(),
        peak_memory_bytes: out.peak,
        outputs: out.outputs,
        details: out.details,
        notices: out.notices,
    })
}

/// Parses `args` (program name first), runs the command, prints the
/// manifest or the error and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command).and_then(|m| Ok(serde_json::to_string_pretty(&m)?)) {
        Ok(text) => {
            // a closed stdout is not a failure of the run itself
            let _ = writeln!(std::io::stdout(), "{text}");
            0
        }
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &GbsError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

pub fn main_entry() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_range("2..5").unwrap(), 2..=5);
        assert_eq!(parse_range("2..=4").unwrap(), 2..=4);
        assert_eq!(parse_range("3").unwrap(), 3..=3);
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("a..2").is_err());
        assert_eq!(parse_triple("3,2,1").unwrap(), (3, 2, 1));
        assert!(parse_triple("3,2").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "gbs", "sample", "--table", "t.gbsk", "--method", "single_elision", "--samples", "10", "--out", "s.txt",
            "--aux-orders", "2,2,0",
        ])
        .unwrap();
        let Command::Sample(a) = cli.command else { panic!() };
        assert_eq!(a.method, Method::SingleElision);
        assert_eq!(a.aux_orders, Some((2, 2, 0)));
        let cli = Cli::try_parse_from(["gbs", "scaling", "--orders", "3,4", "--modes", "8,16", "--out", "x.csv"]).unwrap();
        let Command::Scaling(a) = cli.command else { panic!() };
        assert_eq!((a.orders, a.modes, a.workers), (vec![3, 4], vec![8, 16], vec![1]));
    }

    #[test]
    fn bad_flags_exit_with_validation_code() {
        assert_eq!(run(["gbs", "sample", "--samples", "x"]), 2);
        assert_eq!(run(["gbs", "gen-instance", "--modes", "4", "--squeezers", "2", "--eta", "0", "--rmax", "1", "--out", "/nonexistent/x.json"]), 2);
    }

    #[test]
    fn throughput_file_name() {
        assert_eq!(throughput_path(Path::new("/a/b/scal.csv")), PathBuf::from("/a/b/scal_throughput.csv"));
        assert_eq!(correlator_path(Path::new("t.gbsk")), PathBuf::from("t.gbsc"));
    }
}
