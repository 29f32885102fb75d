use super::{ChainSampler, ExactSampler, Method, SampleHeader, SamplerConfig, Samples};
use crate::cumulants::CumulantTable;
use crate::error::{bail, Result};
use crate::gaussian::GaussianInstance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

/// RNG of sample `index`: one ChaCha stream per sample, so the output does
/// not depend on how samples are spread over workers.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Clone, Debug)]
pub enum Sampler<'a> {
    Chain(ChainSampler<'a>),
    Exact(ExactSampler),
}

impl<'a> Sampler<'a> {
    /// Builds the sampler selected by `cfg`. The cumulant table is only read
    /// by the chain methods, the instance only by the exact sampler.
    pub fn new(cfg: &SamplerConfig, kappa: Option<&'a CumulantTable>, inst: Option<&GaussianInstance>) -> Result<Self> {
        cfg.validate()?;
        match (cfg.expansion_orders(), kappa, inst) {
            (Some(orders), Some(kappa), _) => {
                if kappa.max_order() < cfg.order {
                    bail!(Domain, "cumulant table has order {} < K={}", kappa.max_order(), cfg.order);
                }
                let s = ChainSampler::with_orders(kappa, orders)?.with_clamp_epsilon(cfg.clamp_epsilon)?;
                Ok(Sampler::Chain(s))
            }
            (Some(_), None, _) => bail!(Domain, "method {} needs a cumulant table", cfg.method),
            (None, _, Some(inst)) => Ok(Sampler::Exact(ExactSampler::new(inst)?)),
            (None, _, None) => bail!(Domain, "exact reference sampling needs the instance"),
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            Sampler::Chain(c) => c.modes(),
            Sampler::Exact(e) => e.modes(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SampleTiming {
    pub wall_seconds: f64,
    pub mean_sample_seconds: f64,
    pub min_sample_seconds: f64,
    pub max_sample_seconds: f64,
    pub samples_per_second: f64,
}

#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub method: Method,
    pub order: usize,
    pub seed: u64,
    pub workers: usize,
    /// Successful samples, ordered by sample index.
    pub samples: Samples,
    /// Sample indices that failed, with the error.
    pub failures: Vec<(usize, String)>,
    /// Samples that hit a vanished prefix marginal at least once.
    pub fallback_samples: usize,
    /// Per-worker table memory in bytes.
    pub table_bytes: usize,
    pub timing: SampleTiming,
}

impl SampleBatch {
    pub fn header(&self) -> SampleHeader {
        SampleHeader {
            modes: self.samples.modes(),
            samples: self.samples.len(),
            method: self.method.to_string(),
            order: self.order,
            seed: self.seed,
        }
    }
}

struct Drawn {
    index: usize,
    bits: Vec<u8>,
    seconds: f64,
    outcome: std::result::Result<bool, String>,
}

fn worker(sampler: &Sampler<'_>, cfg: &SamplerConfig, next: &AtomicUsize, chunk: usize) -> Vec<Drawn> {
    let m = sampler.modes();
    let mut tables = match sampler {
        Sampler::Chain(c) => Some(c.new_tables()),
        Sampler::Exact(_) => None,
    };
    let mut out = Vec::new();
    loop {
        let start = next.fetch_add(chunk, Ordering::Relaxed);
        if start >= cfg.samples {
            return out;
        }
        for index in start..(start + chunk).min(cfg.samples) {
            let t0 = Instant::now();
            let mut rng = sample_rng(cfg.seed, index);
            let mut bits = vec![0u8; m];
            let outcome = match (sampler, tables.as_mut()) {
                (Sampler::Chain(c), Some(t)) => c
                    .sample(t, &mut rng, &mut bits)
                    .map(|s| s.fallback_steps > 0)
                    .map_err(|e| e.to_string()),
                (Sampler::Exact(e), _) => {
                    e.sample(&mut rng, &mut bits);
                    Ok(false)
                }
                (Sampler::Chain(_), None) => unreachable!(),
            };
            out.push(Drawn {
                index,
                bits,
                seconds: t0.elapsed().as_secs_f64(),
                outcome,
            });
        }
    }
}

/// Draws `cfg.samples` samples with `cfg.workers` threads pulling chunks of
/// sample indices from a shared counter.
pub fn batch_sample(sampler: &Sampler<'_>, cfg: &SamplerConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let m = sampler.modes();
    let table_bytes = match sampler {
        Sampler::Chain(c) => c.new_tables().memory_bytes(),
        Sampler::Exact(_) => 0,
    };
    let workers = cfg.workers.min(cfg.samples.max(1));
    let chunk = (cfg.samples / (workers * 32)).clamp(1, 256);
    let next = AtomicUsize::new(0);
    let t0 = Instant::now();
    let mut drawn: Vec<Drawn> = if workers == 1 {
        worker(sampler, cfg, &next, chunk)
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| scope.spawn(|| worker(sampler, cfg, &next, chunk)))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("sampling worker panicked"))
                .collect()
        })
    };
    let wall = t0.elapsed().as_secs_f64();
    drawn.sort_unstable_by_key(|d| d.index);

    let mut bits = Vec::with_capacity(drawn.len() * m);
    let mut failures = Vec::new();
    let mut fallback_samples = 0;
    let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, 0.0f64);
    for d in &drawn {
        sum += d.seconds;
        lo = lo.min(d.seconds);
        hi = hi.max(d.seconds);
        match &d.outcome {
            Ok(flagged) => {
                fallback_samples += usize::from(*flagged);
                bits.extend_from_slice(&d.bits);
            }
            Err(e) => failures.push((d.index, e.clone())),
        }
    }
    let n = drawn.len().max(1) as f64;
    let timing = SampleTiming {
        wall_seconds: wall,
        mean_sample_seconds: sum / n,
        min_sample_seconds: if drawn.is_empty() { 0.0 } else { lo },
        max_sample_seconds: hi,
        samples_per_second: if wall > 0.0 { drawn.len() as f64 / wall } else { 0.0 },
    };
    Ok(SampleBatch {
        method: cfg.method,
        order: cfg.order,
        seed: cfg.seed,
        workers,
        samples: Samples::new(m, bits)?,
        failures,
        fallback_samples,
        table_bytes,
        timing,
    })
}
