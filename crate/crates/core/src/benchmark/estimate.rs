use super::stats::mean_std;
use crate::cumulants::{click_cumulant, cumulants_from_moments, CumulantTable};
use crate::error::{bail, Result};
use crate::partitions::MAX_PATTERN_ORDER;
use crate::sampler::Samples;
use crate::subsets::SubsetIndex;
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::str::FromStr;

/// Distinct click patterns with their multiplicities, in lexicographic
/// order of the bitstrings.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternCounts {
    modes: usize,
    /// Clicked modes of each distinct pattern, ascending.
    clicks: Vec<Vec<usize>>,
    counts: Vec<u64>,
}

impl PatternCounts {
    pub fn from_samples(samples: &Samples) -> Self {
        let mut map: HashMap<&[u8], u64> = HashMap::new();
        for row in samples.rows() {
            *map.entry(row).or_default() += 1;
        }
        let mut entries: Vec<(&[u8], u64)> = map.into_iter().collect();
        entries.sort_unstable();
        let clicks = entries
            .iter()
            .map(|(r, _)| r.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect())
            .collect();
        PatternCounts {
            modes: samples.modes(),
            clicks,
            counts: entries.iter().map(|e| e.1).collect(),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn clicks(&self) -> &[Vec<usize>] {
        &self.clicks
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Same patterns with new multiplicities.
    pub fn with_counts(&self, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), self.counts.len());
        PatternCounts {
            modes: self.modes,
            clicks: self.clicks.clone(),
            counts,
        }
    }

    /// Multinomial resample of the same total size.
    pub fn resample(&self, rng: &mut ChaCha8Rng) -> Self {
        let total = self.total();
        let mut left = total;
        let mut mass = total as f64;
        let counts = self
            .counts
            .iter()
            .map(|&c| {
                if left == 0 || mass <= 0.0 {
                    return 0;
                }
                let p = (c as f64 / mass).min(1.0);
                let k = Binomial::new(left, p).expect("probability in [0,1]").sample(rng);
                left -= k;
                mass -= c as f64;
                k
            })
            .collect();
        self.with_counts(counts)
    }

    /// Empirical click moments `⟨Π_{k∈S} x_k⟩` for every subset of size
    /// `1..=K`, in table order.
    pub fn click_moments(&self, index: &SubsetIndex) -> Vec<f64> {
        let mut acc = vec![0u64; index.count()];
        let k_max = index.max_order();
        for (clicks, &count) in self.clicks.iter().zip(&self.counts) {
            if count == 0 {
                continue;
            }
            for d in 1..=k_max.min(clicks.len()) {
                add_subsets(index, clicks, d, clicks.len(), index.order_offset(d), count, &mut acc);
            }
        }
        let n = self.total() as f64;
        acc.into_iter().map(|c| c as f64 / n).collect()
    }
}

/// Adds `count` to every `d`-subset of `clicks`, choosing elements from
/// the largest sorted position `k` downwards.
fn add_subsets(index: &SubsetIndex, clicks: &[usize], k: usize, upper: usize, rank: usize, count: u64, acc: &mut [u64]) {
    let b = index.binomials();
    for pos in (k - 1..upper).rev() {
        let r = rank + b.get(clicks[pos], k) as usize;
        if k == 1 {
            acc[r] += count;
        } else {
            add_subsets(index, clicks, k - 1, pos, r, count, acc);
        }
    }
}

/// Sample mean of the parity `Π_{k∈S} (−1)^{x_k}`.
pub fn estimate_correlator(samples: &Samples, subset: &[usize]) -> Result<f64> {
    if samples.is_empty() {
        bail!(Domain, "correlator estimate needs at least one sample");
    }
    crate::gaussian::check_subset(subset, samples.modes())?;
    let s: i64 = samples
        .rows()
        .map(|r| if subset.iter().filter(|&&k| r[k] == 1).count() % 2 == 0 { 1 } else { -1 })
        .sum();
    Ok(s as f64 / samples.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Moments replaced by sample means.
    #[default]
    Plugin,
    /// Unbiased k-statistics; available up to order 3.
    Corrected,
}

impl FromStr for EstimatorMode {
    type Err = crate::GbsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plugin" => Ok(EstimatorMode::Plugin),
            "corrected" => Ok(EstimatorMode::Corrected),
            _ => bail!(Domain, "unknown estimator {s:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CumulantEstimate {
    pub subset: Vec<usize>,
    pub order: usize,
    pub value: f64,
    pub n_samples: u64,
}

/// Click cumulants for every subset of size `1..=K`, in table order.
pub fn click_cumulant_values(counts: &PatternCounts, index: &SubsetIndex, mode: EstimatorMode) -> Result<Vec<f64>> {
    let k = index.max_order();
    let n = counts.total();
    if n < 2 {
        bail!(Domain, "cumulant estimates need N ≥ 2, got {n}");
    }
    if mode == EstimatorMode::Corrected && k > 3 {
        bail!(Domain, "the corrected estimator is only available up to order 3");
    }
    let moments = counts.click_moments(index);
    let mut values = cumulants_from_moments(index.modes(), k, moments)?;
    if mode == EstimatorMode::Corrected {
        let nf = n as f64;
        if n < 3 && k == 3 {
            bail!(Domain, "third-order k-statistics need N ≥ 3");
        }
        for d in 2..=k {
            let factor = match d {
                2 => nf / (nf - 1.0),
                _ => nf * nf / ((nf - 1.0) * (nf - 2.0)),
            };
            for v in &mut values[index.order_range(d)] {
                *v *= factor;
            }
        }
    }
    Ok(values)
}

/// Click cumulants of the samples for all subsets of size `1..=K`.
pub fn estimate_click_cumulants(samples: &Samples, k: usize, mode: EstimatorMode) -> Result<Vec<CumulantEstimate>> {
    if k == 0 || k > MAX_PATTERN_ORDER {
        bail!(Domain, "cumulant order {k} outside 1..={MAX_PATTERN_ORDER}");
    }
    let index = SubsetIndex::new(samples.modes(), k)?;
    let counts = PatternCounts::from_samples(samples);
    let values = click_cumulant_values(&counts, &index, mode)?;
    Ok(index
        .iter()
        .zip(values)
        .map(|(subset, value)| CumulantEstimate {
            order: subset.len(),
            subset,
            value,
            n_samples: counts.total(),
        })
        .collect())
}

/// Theoretical click cumulants in table order, from a parity cumulant table.
pub fn theoretical_click_cumulants(kappa: &CumulantTable, index: &SubsetIndex) -> Result<Vec<f64>> {
    if index.modes() != kappa.modes() || index.max_order() > kappa.max_order() {
        bail!(Dimension, "cumulant table does not cover the requested subsets");
    }
    Ok(index
        .iter()
        .enumerate()
        .map(|(rank, s)| click_cumulant(kappa, rank, s.len()))
        .collect())
}

/// Mean and standard error of `statistic` over `b` multinomial resamples.
pub fn bootstrap<F>(counts: &PatternCounts, b: usize, seed: u64, statistic: F) -> Result<(f64, f64)>
where
    F: Fn(&PatternCounts) -> f64,
{
    let (mean, se) = bootstrap_vec(counts, b, seed, |c| Ok(vec![statistic(c)]))?;
    Ok((mean[0], se[0]))
}

/// Component-wise bootstrap of a vector-valued statistic.
pub fn bootstrap_vec<F>(counts: &PatternCounts, b: usize, seed: u64, statistic: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&PatternCounts) -> Result<Vec<f64>>,
{
    if b < 2 {
        bail!(Domain, "bootstrap needs B ≥ 2, got {b}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let runs: Vec<Vec<f64>> = (0..b)
        .map(|_| statistic(&counts.resample(&mut rng)))
        .collect::<Result<_>>()?;
    let dim = runs[0].len();
    let mut means = Vec::with_capacity(dim);
    let mut ses = Vec::with_capacity(dim);
    let mut column = vec![0.0; b];
    for j in 0..dim {
        for (c, r) in column.iter_mut().zip(&runs) {
            *c = r[j];
        }
        let (m, s) = mean_std(&column);
        means.push(m);
        ses.push(s);
    }
    Ok((means, ses))
}

/// Ranks of a seeded random subset of the order-`d` subsets, keeping
/// `ceil(fraction · C(M, d))` of them, sorted.
pub fn subsample_order(index: &SubsetIndex, d: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        bail!(Domain, "subsampling fraction must lie in (0, 1], got {fraction}");
    }
    let range = index.order_range(d);
    let keep = ((range.len() as f64 * fraction).ceil() as usize).min(range.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample_indices(&mut rng, range.len(), keep)
        .into_iter()
        .map(|i| range.start + i)
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn coin_samples(m: usize, n: usize, p: f64, seed: u64) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = (0..m * n).map(|_| u8::from(rng.random::<f64>() < p)).collect();
        Samples::new(m, bits).unwrap()
    }

    #[test]
    fn correlator_estimates_trivial_sets() {
        let zeros = Samples::new(3, vec![0; 12]).unwrap();
        let ones = Samples::new(3, vec![1; 12]).unwrap();
        assert_eq!(estimate_correlator(&zeros, &[0, 2]).unwrap(), 1.0);
        assert_eq!(estimate_correlator(&ones, &[0, 1, 2]).unwrap(), -1.0);
        assert_eq!(estimate_correlator(&ones, &[1, 2]).unwrap(), 1.0);
        assert!(estimate_correlator(&Samples::new(3, vec![]).unwrap(), &[0]).is_err());
    }

    #[test]
    fn moments_by_counting() {
        let s = Samples::from_rows(3, &[[1u8, 1, 0], [1, 1, 1], [0, 0, 1], [1, 1, 0]]).unwrap();
        let idx = SubsetIndex::new(3, 3).unwrap();
        let m = PatternCounts::from_samples(&s).click_moments(&idx);
        assert_eq!(m[idx.rank(&[0])], 0.75);
        assert_eq!(m[idx.rank(&[2])], 0.5);
        assert_eq!(m[idx.rank(&[0, 1])], 0.75);
        assert_eq!(m[idx.rank(&[1, 2])], 0.25);
        assert_eq!(m[idx.rank(&[0, 1, 2])], 0.25);
    }

    #[test]
    fn first_order_is_click_rate_and_constant_data_has_no_cumulants() {
        let s = coin_samples(4, 1000, 0.3, 1);
        let est = estimate_click_cumulants(&s, 3, EstimatorMode::Plugin).unwrap();
        for k in 0..4 {
            let rate = s.rows().filter(|r| r[k] == 1).count() as f64 / 1000.0;
            assert!((est[k].value - rate).abs() < 1e-15);
        }
        let vac = Samples::new(4, vec![0; 40]).unwrap();
        let est = estimate_click_cumulants(&vac, 4, EstimatorMode::Plugin).unwrap();
        assert!(est.iter().all(|e| e.value == 0.0));
        let ones = Samples::new(4, vec![1; 40]).unwrap();
        let est = estimate_click_cumulants(&ones, 4, EstimatorMode::Plugin).unwrap();
        assert!(est.iter().filter(|e| e.order >= 2).all(|e| e.value.abs() < 1e-15));
    }

    #[test]
    fn independent_coins_have_small_pair_cumulants() {
        let n = 40_000;
        let s = coin_samples(5, n, 0.4, 2);
        let est = estimate_click_cumulants(&s, 2, EstimatorMode::Plugin).unwrap();
        for e in est.iter().filter(|e| e.order == 2) {
            assert!(e.value.abs() < 4.0 / (n as f64).sqrt(), "{e:?}");
        }
    }

    #[test]
    fn corrected_mode_is_unbiased_covariance() {
        let s = Samples::from_rows(2, &[[1u8, 1], [0, 0], [1, 0]]).unwrap();
        let est = estimate_click_cumulants(&s, 2, EstimatorMode::Corrected).unwrap();
        // sample covariance with n − 1: x = (1,0,1), y = (1,0,0)
        let want = ((1.0 - 2.0 / 3.0) * (1.0 - 1.0 / 3.0)
            + (0.0 - 2.0 / 3.0) * (0.0 - 1.0 / 3.0)
            + (1.0 - 2.0 / 3.0) * (0.0 - 1.0 / 3.0))
            / 2.0;
        assert!((est[2].value - want).abs() < 1e-15);
        assert!(estimate_click_cumulants(&s, 4, EstimatorMode::Corrected).is_err());
        assert!(estimate_click_cumulants(&s, 7, EstimatorMode::Plugin).is_err());
    }

    #[test]
    fn bootstrap_se_of_bernoulli_mean() {
        let n = 5000;
        let s = coin_samples(1, n, 0.3, 3);
        let counts = PatternCounts::from_samples(&s);
        let p = s.as_flat().iter().filter(|&&b| b == 1).count() as f64 / n as f64;
        let stat = |c: &PatternCounts| c.click_moments(&SubsetIndex::new(1, 1).unwrap())[0];
        let (_, se) = bootstrap(&counts, 100, 9, stat).unwrap();
        let closed = (p * (1.0 - p) / n as f64).sqrt();
        assert!(se > closed / 1.5 && se < closed * 1.5, "{se} vs {closed}");
        let (m, se0) = bootstrap(&counts, 10, 9, |_| 2.5).unwrap();
        assert_eq!((m, se0), (2.5, 0.0));
        assert!(bootstrap(&counts, 1, 9, |_| 0.0).is_err());
        assert_eq!(bootstrap(&counts, 20, 4, stat).unwrap(), bootstrap(&counts, 20, 4, stat).unwrap());
    }

    #[test]
    fn resample_keeps_total() {
        let s = coin_samples(3, 777, 0.5, 5);
        let c = PatternCounts::from_samples(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(c.resample(&mut rng).total(), 777);
        }
    }

    #[test]
    fn subsampling_is_seeded() {
        let idx = SubsetIndex::new(12, 5).unwrap();
        let a = subsample_order(&idx, 5, 1.0 / 24.0, 3).unwrap();
        assert_eq!(a.len(), 33);
        assert_eq!(a, subsample_order(&idx, 5, 1.0 / 24.0, 3).unwrap());
        assert!(a.iter().all(|r| idx.order_range(5).contains(r)));
    }
}
