use super::stats::mean_std;
use crate::error::{bail, Result};
use crate::gaussian::{brute_force_distribution, outcome_index, GaussianInstance, BRUTE_FORCE_MAX_MODES};
use crate::sampler::Samples;
use crate::subsets::binomial;
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Empirical distribution of the total number of clicks, length `M + 1`.
pub fn total_click_histogram(samples: &Samples) -> Result<Vec<f64>> {
    if samples.is_empty() {
        bail!(Domain, "click histogram of an empty sample set");
    }
    let mut counts = vec![0u64; samples.modes() + 1];
    for row in samples.rows() {
        counts[row.iter().filter(|&&b| b == 1).count()] += 1;
    }
    let n = samples.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Total-click distribution of a fully enumerated distribution.
pub fn total_clicks_of_distribution(dist: &[f64], modes: usize) -> Vec<f64> {
    let mut out = vec![0.0; modes + 1];
    for (i, p) in dist.iter().enumerate() {
        out[i.count_ones() as usize] += p;
    }
    out
}

/// Exact total-click distribution from the brute-force probabilities.
pub fn exact_total_clicks(inst: &GaussianInstance) -> Result<Vec<f64>> {
    let dist = brute_force_distribution(inst)?;
    Ok(total_clicks_of_distribution(&dist, inst.modes()))
}

/// Empirical distribution over all `2^M` outcomes.
pub fn empirical_distribution(samples: &Samples) -> Result<Vec<f64>> {
    if samples.modes() > BRUTE_FORCE_MAX_MODES {
        bail!(ResourceGuard, "empirical outcome distribution needs M ≤ {BRUTE_FORCE_MAX_MODES}");
    }
    if samples.is_empty() {
        bail!(Domain, "empirical distribution of an empty sample set");
    }
    let mut counts = vec![0u64; 1 << samples.modes()];
    for row in samples.rows() {
        counts[outcome_index(row)] += 1;
    }
    let n = samples.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Product of the single-mode marginals of `dist`.
pub fn product_of_marginals(dist: &[f64], modes: usize) -> Vec<f64> {
    let mut q = vec![0.0; modes];
    for (i, p) in dist.iter().enumerate() {
        for (k, qk) in q.iter_mut().enumerate() {
            if i >> (modes - 1 - k) & 1 == 1 {
                *qk += p;
            }
        }
    }
    (0..dist.len())
        .map(|i| {
            (0..modes)
                .map(|k| if i >> (modes - 1 - k) & 1 == 1 { q[k] } else { 1.0 - q[k] })
                .product()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XebPoint {
    pub clicks: usize,
    pub xeb: f64,
    pub se: f64,
    /// Samples used.
    pub n: usize,
    /// Samples dropped because their exact probability is zero.
    pub excluded: usize,
}

/// XEB of the samples with exactly `c` clicks:
/// mean of `ln[C(M,c) p(x)/p(c)]`, with standard error `std/√n`.
pub fn xeb_for_clicks(samples: &Samples, dist: &[f64], c: usize) -> Result<XebPoint> {
    let m = samples.modes();
    if dist.len() != 1 << m {
        bail!(Dimension, "distribution does not match {m} modes");
    }
    let pc = total_clicks_of_distribution(dist, m)[c.min(m)];
    if c > m || pc <= 0.0 {
        bail!(Domain, "p(C={c}) vanishes");
    }
    let scale = binomial(m as u64, c as u64) as f64 / pc;
    let mut logs = Vec::new();
    let mut excluded = 0;
    for row in samples.rows().filter(|r| r.iter().filter(|&&b| b == 1).count() == c) {
        let p = dist[outcome_index(row)];
        if p > 0.0 {
            logs.push((scale * p).ln());
        } else {
            excluded += 1;
        }
    }
    if logs.is_empty() {
        bail!(Domain, "no usable samples with {c} clicks");
    }
    let (mean, sd) = mean_std(&logs);
    Ok(XebPoint {
        clicks: c,
        xeb: mean,
        se: sd / (logs.len() as f64).sqrt(),
        n: logs.len(),
        excluded,
    })
}

/// XEB points for every click number in `range` that has usable samples.
pub fn xeb(samples: &Samples, dist: &[f64], range: std::ops::RangeInclusive<usize>) -> Result<Vec<XebPoint>> {
    let mut out = Vec::new();
    for c in range {
        match xeb_for_clicks(samples, dist, c) {
            Ok(p) => out.push(p),
            Err(crate::GbsError::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `Σ_{|x|=c} (p(x)/p(c)) ln[C(M,c) p(x)/p(c)]`, the XEB of a perfect
/// sampler.
pub fn expected_xeb(dist: &[f64], modes: usize, c: usize) -> Result<f64> {
    let pc = total_clicks_of_distribution(dist, modes)[c];
    if pc <= 0.0 {
        bail!(Domain, "p(C={c}) vanishes");
    }
    let scale = binomial(modes as u64, c as u64) as f64;
    Ok(dist
        .iter()
        .enumerate()
        .filter(|(i, p)| i.count_ones() as usize == c && **p > 0.0)
        .map(|(_, p)| {
            let w = p / pc;
            w * (scale * w).ln()
        })
        .sum())
}

/// `n` samples drawn uniformly among the bitstrings with exactly `c` ones.
pub fn uniform_weight_samples(modes: usize, c: usize, n: usize, seed: u64) -> Result<Samples> {
    if c > modes {
        bail!(Domain, "cannot place {c} clicks on {modes} modes");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![0u8; modes * n];
    for row in bits.chunks_exact_mut(modes) {
        for k in sample_indices(&mut rng, modes, c) {
            row[k] = 1;
        }
    }
    Samples::new(modes, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{outcome_bits, random_instance};
    use crate::sampler::{sample_rng, ExactSampler};

    #[test]
    fn histograms_normalise() {
        let vac = GaussianInstance::vacuum(5, 2.0).unwrap();
        assert_eq!(exact_total_clicks(&vac).unwrap()[0], 1.0);
        let (inst, _) = random_instance(6, 3, 0.6, 1.0, 3, 2.0).unwrap();
        let h = exact_total_clicks(&inst).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let s = Samples::from_rows(3, &[[0u8, 0, 1], [1, 1, 0], [0, 1, 0]]).unwrap();
        let e = total_click_histogram(&s).unwrap();
        assert_eq!(e.len(), 4);
        assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(e[1], 2.0 / 3.0);
    }

    #[test]
    fn uniform_law_over_weights_scores_zero() {
        // p(x) = p(C)/C(M,C) for every pattern
        let m = 5;
        let pc = [0.1, 0.2, 0.3, 0.2, 0.1, 0.1];
        let dist: Vec<f64> = (0..32)
            .map(|i: usize| {
                let c = i.count_ones() as usize;
                pc[c] / binomial(m as u64, c as u64) as f64
            })
            .collect();
        let s = uniform_weight_samples(m, 2, 200, 1).unwrap();
        let p = xeb_for_clicks(&s, &dist, 2).unwrap();
        assert!(p.xeb.abs() < 1e-12);
        assert!(expected_xeb(&dist, m, 2).unwrap().abs() < 1e-12);
        let full = Samples::new(m, vec![1; m]).unwrap();
        assert!(xeb_for_clicks(&full, &dist, m).unwrap().xeb.abs() < 1e-12);
    }

    #[test]
    fn ratio_form_is_scale_free() {
        let (inst, _) = random_instance(6, 3, 0.7, 1.0, 8, 2.0).unwrap();
        let dist = brute_force_distribution(&inst).unwrap();
        let scaled: Vec<f64> = dist.iter().map(|p| 3.7 * p).collect();
        let s = Samples::from_rows(6, &[outcome_bits(5, 6), outcome_bits(6, 6), outcome_bits(9, 6)]).unwrap();
        let a = xeb_for_clicks(&s, &dist, 2).unwrap();
        let b = xeb_for_clicks(&s, &scaled, 2).unwrap();
        assert!((a.xeb - b.xeb).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_samples_are_excluded() {
        let vac = GaussianInstance::thermal(&[0.5, 0.0], 2.0).unwrap();
        let dist = brute_force_distribution(&vac).unwrap();
        let s = Samples::from_rows(2, &[[1u8, 0], [0, 1]]).unwrap();
        let p = xeb_for_clicks(&s, &dist, 1).unwrap();
        assert_eq!((p.n, p.excluded), (1, 1));
        assert!(xeb_for_clicks(&s, &dist, 2).is_err());
    }

    #[test]
    fn exact_sampler_matches_expected_xeb() {
        let (inst, _) = random_instance(6, 3, 0.8, 1.0, 2, 2.0).unwrap();
        let dist = brute_force_distribution(&inst).unwrap();
        let sampler = ExactSampler::from_distribution(&dist, 6).unwrap();
        let mut rng = sample_rng(1, 0);
        let mut bits = vec![0u8; 6 * 20_000];
        for row in bits.chunks_exact_mut(6) {
            sampler.sample(&mut rng, row);
        }
        let s = Samples::new(6, bits).unwrap();
        for p in xeb(&s, &dist, 0..=6).unwrap().iter().filter(|p| p.n >= 500) {
            let want = expected_xeb(&dist, 6, p.clicks).unwrap();
            assert!((p.xeb - want).abs() <= 4.0 * p.se + 1e-12, "{p:?} vs {want}");
        }
    }

    #[test]
    fn product_baseline_of_product_law_is_itself() {
        let th = GaussianInstance::thermal(&[0.2, 0.7, 1.1], 2.0).unwrap();
        let dist = brute_force_distribution(&th).unwrap();
        let prod = product_of_marginals(&dist, 3);
        for (a, b) in dist.iter().zip(&prod) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
