//! Timing harnesses for preprocessing cost, per-sample cost and parallel
//! throughput.

use crate::benchmark::linear_fit;
use crate::cumulants::{correlator_table, cumulants_from_correlators_par, CorrelatorTable, CumulantTable, MemoryBudget};
use crate::error::Result;
use crate::gaussian::{random_instance, GaussianInstance};
use crate::partitions::PatternSet;
use crate::sampler::{batch_sample, sample_rng, Method, Sampler, SamplerConfig};
use crate::subsets::SubsetIndex;
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    /// Subset indexing and partition patterns.
    pub phase1_seconds: f64,
    /// Correlators and cumulants.
    pub phase2_seconds: f64,
}

/// Builds both tables and times the two preprocessing phases separately.
pub fn precompute_timed(
    inst: &GaussianInstance,
    order: usize,
    workers: usize,
    budget: MemoryBudget,
) -> Result<(CorrelatorTable, CumulantTable, PhaseTimes)> {
    let t0 = Instant::now();
    let index = SubsetIndex::new(inst.modes(), order)?;
    let patterns = PatternSet::new(order)?;
    let phase1 = t0.elapsed().as_secs_f64();
    drop((index, patterns));
    let t1 = Instant::now();
    let c = correlator_table(inst, order, workers, budget)?;
    let k = cumulants_from_correlators_par(&c, workers)?;
    let phase2 = t1.elapsed().as_secs_f64();
    Ok((
        c,
        k,
        PhaseTimes {
            phase1_seconds: phase1,
            phase2_seconds: phase2,
        },
    ))
}

/// Chain method used at truncation order `K` by the harness: single
/// elision at `K = 3`, double elision above.
pub fn method_for_order(order: usize) -> Method {
    if order <= 3 {
        Method::SingleElision
    } else {
        Method::DoubleElision
    }
}

/// Mean wall time of one sample over `samples` draws, after one discarded
/// warm-up draw.
pub fn time_per_sample(kappa: &CumulantTable, order: usize, samples: usize, seed: u64) -> Result<f64> {
    let cfg = SamplerConfig::new(method_for_order(order), order, samples, seed);
    let Sampler::Chain(chain) = Sampler::new(&cfg, Some(kappa), None)? else {
        unreachable!("chain method selected")
    };
    let mut tables = chain.new_tables();
    let mut out = vec![0u8; kappa.modes()];
    chain.sample(&mut tables, &mut sample_rng(seed, usize::MAX), &mut out)?;
    let t0 = Instant::now();
    for i in 0..samples {
        chain.sample(&mut tables, &mut sample_rng(seed, i), &mut out)?;
    }
    Ok(t0.elapsed().as_secs_f64() / samples.max(1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThroughputPoint {
    pub order: usize,
    pub modes: usize,
    pub workers: usize,
    pub samples: usize,
    pub seconds: f64,
    pub samples_per_second: f64,
}

/// Batch sampling rate with `workers` threads over `samples` samples.
pub fn measure_throughput(kappa: &CumulantTable, order: usize, workers: usize, samples: usize, seed: u64) -> Result<ThroughputPoint> {
    let cfg = SamplerConfig::new(method_for_order(order), order, samples, seed).with_workers(workers);
    let sampler = Sampler::new(&cfg, Some(kappa), None)?;
    let warm = SamplerConfig { samples: workers, ..cfg.clone() };
    batch_sample(&sampler, &warm)?;
    let batch = batch_sample(&sampler, &cfg)?;
    Ok(ThroughputPoint {
        order,
        modes: kappa.modes(),
        workers,
        samples,
        seconds: batch.timing.wall_seconds,
        samples_per_second: batch.timing.samples_per_second,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub order: usize,
    pub modes: usize,
    pub phase1_seconds: f64,
    pub phase2_seconds: f64,
    pub per_sample_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub order: usize,
    pub precompute_slope: f64,
    pub per_sample_slope: f64,
    pub note: Option<String>,
}

/// Log–log slopes of phase-II and per-sample time against `M`; NaN with a
/// note when fewer than two points exist.
pub fn fit_slopes(points: &[ScalingPoint], order: usize) -> ScalingFit {
    let pts: Vec<&ScalingPoint> = points.iter().filter(|p| p.order == order).collect();
    let lx: Vec<f64> = pts.iter().map(|p| (p.modes as f64).ln()).collect();
    let slope = |ys: Vec<f64>| linear_fit(&lx, &ys).map(|f| f.0).unwrap_or(f64::NAN);
    let pre = slope(pts.iter().map(|p| p.phase2_seconds.max(1e-12).ln()).collect());
    let per = slope(pts.iter().map(|p| p.per_sample_seconds.max(1e-12).ln()).collect());
    ScalingFit {
        order,
        precompute_slope: pre,
        per_sample_slope: per,
        note: (pts.len() < 2).then(|| "slope undefined with fewer than two mode counts".to_string()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingSettings {
    pub orders: Vec<usize>,
    pub modes: Vec<usize>,
    pub samples_per_point: usize,
    pub workers: Vec<usize>,
    pub eta: f64,
    pub r_max: f64,
    pub seed: u64,
    /// Mode count of the throughput sweep.
    pub throughput_modes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    pub fits: Vec<ScalingFit>,
    pub throughput: Vec<ThroughputPoint>,
}

fn scaling_instance(modes: usize, s: &ScalingSettings) -> Result<GaussianInstance> {
    Ok(random_instance(modes, (modes / 2).max(1), s.eta, s.r_max, s.seed, crate::DEFAULT_HBAR)?.0)
}

pub fn run_scaling(s: &ScalingSettings, budget: MemoryBudget) -> Result<ScalingResult> {
    let mut points = Vec::new();
    let mut throughput = Vec::new();
    for &order in &s.orders {
        for &m in &s.modes {
            let inst = scaling_instance(m, s)?;
            precompute_timed(&inst, order, 1, budget)?;
            let (_, kappa, times) = precompute_timed(&inst, order, 1, budget)?;
            let per = time_per_sample(&kappa, order, s.samples_per_point, s.seed)?;
            points.push(ScalingPoint {
                order,
                modes: m,
                phase1_seconds: times.phase1_seconds,
                phase2_seconds: times.phase2_seconds,
                per_sample_seconds: per,
            });
        }
        if !s.workers.is_empty() {
            let inst = scaling_instance(s.throughput_modes, s)?;
            let (_, kappa, _) = precompute_timed(&inst, order, 1, budget)?;
            let top = *s.workers.iter().max().unwrap();
            for &w in &s.workers {
                throughput.push(measure_throughput(&kappa, order, w, s.samples_per_point * top, s.seed)?);
            }
        }
    }
    let fits = s.orders.iter().map(|&k| fit_slopes(&points, k)).collect();
    Ok(ScalingResult { points, fits, throughput })
}

pub fn points_csv(points: &[ScalingPoint]) -> String {
    let mut out = String::from("M,K,t_precompute_phase1,t_precompute,t_per_sample\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{:e},{:e},{:e}\n",
            p.modes, p.order, p.phase1_seconds, p.phase2_seconds, p.per_sample_seconds
        ));
    }
    out
}

pub fn throughput_csv(points: &[ThroughputPoint]) -> String {
    let mut out = String::from("K,M,workers,samples,seconds,throughput\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{:e},{:e}\n",
            p.order, p.modes, p.workers, p.samples, p.seconds, p.samples_per_second
        ));
    }
    out
}
