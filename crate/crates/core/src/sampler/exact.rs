use super::engine::{Expansion, Family, MarginalSource};
use crate::cumulants::CumulantTable;
use crate::error::{bail, Result};
use crate::gaussian::{brute_force_distribution, GaussianInstance, BRUTE_FORCE_MAX_MODES};
use rand::Rng;

/// Exact marginals of a fully enumerated distribution (indexed as in
/// [`crate::gaussian::outcome_index`]).
#[derive(Clone, Debug)]
pub struct ExactMarginals {
    modes: usize,
    dist: Vec<f64>,
}

impl ExactMarginals {
    pub fn new(dist: Vec<f64>, modes: usize) -> Result<Self> {
        if modes > BRUTE_FORCE_MAX_MODES || dist.len() != 1 << modes {
            bail!(Dimension, "distribution of length {} does not cover {modes} modes", dist.len());
        }
        Ok(ExactMarginals { modes, dist })
    }

    pub fn from_instance(inst: &GaussianInstance) -> Result<Self> {
        Self::new(brute_force_distribution(inst)?, inst.modes())
    }

    pub fn distribution(&self) -> &[f64] {
        &self.dist
    }

    /// `p(x_i = bits_i for positions i ∈ [lo, m] ∖ elided)` with 1-based
    /// positions.
    pub fn of_path(&self, bits: &[u8], lo: usize, m: usize, elided: &[usize]) -> f64 {
        let mut mask = 0usize;
        let mut value = 0usize;
        for p in lo..=m {
            if elided.contains(&p) {
                continue;
            }
            let shift = self.modes - p;
            mask |= 1 << shift;
            value |= (bits[p - 1] as usize) << shift;
        }
        self.dist
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == value)
            .map(|(_, p)| p)
            .sum()
    }
}

struct OnPath<'a> {
    exact: &'a ExactMarginals,
    bits: &'a [u8],
}

impl MarginalSource for OnPath<'_> {
    fn marginal(&self, m: usize, lo: usize, elided: &[usize], _family: Family) -> f64 {
        self.exact.of_path(self.bits, lo, m, elided)
    }
}

/// `p(x_n = 0, x_{n−1}, …, x_1)` from the cumulant expansion of order
/// `max_order` with exact marginals on the right-hand side. `n` is a 1-based
/// position; only `bits[..n−1]` is read.
pub fn expansion_zero_branch(
    kappa: &CumulantTable,
    exact: &ExactMarginals,
    bits: &[u8],
    n: usize,
    max_order: usize,
) -> f64 {
    let mut exp = Expansion::new(kappa);
    for p in 1..n {
        exp.set_bit(p, bits[p - 1]);
    }
    exp.set_bit(n, 0);
    let src = OnPath { exact, bits };
    exp.expand(&src, n, 1, &[], max_order, Family::Prefix { depth: 0 })
}

/// Bias `p(…, x_n) − p(…, 1 − x_n)` summed directly over every
/// `R ⊆ [1, n−1]` with exact marginals: `Σ_R 2^{−|R|} γ_{R∪n} p(x_{[n−1]∖R})`.
pub fn bias_from_marginals(kappa: &CumulantTable, exact: &ExactMarginals, bits: &[u8], n: usize) -> Result<f64> {
    if n - 1 > 24 {
        bail!(ResourceGuard, "direct bias sum over 2^{} subsets refused", n - 1);
    }
    let chi = |p: usize| if bits[p - 1] == 0 { 1.0 } else { -1.0 };
    let mut acc = 0.0;
    for mask in 0u32..(1 << (n - 1)) {
        let r: Vec<usize> = (1..n).filter(|p| mask >> (p - 1) & 1 == 1).collect();
        if r.len() + 1 > kappa.max_order() {
            continue;
        }
        let mut modes: Vec<usize> = r.iter().map(|p| p - 1).collect();
        modes.push(n - 1);
        let gamma = kappa.try_get(&modes)? * r.iter().map(|&p| chi(p)).product::<f64>() * chi(n);
        let elided: Vec<usize> = r.iter().rev().copied().collect();
        acc += 0.5f64.powi(r.len() as i32) * gamma * exact.of_path(bits, 1, n - 1, &elided);
    }
    Ok(acc)
}

/// Inverse-CDF sampler over the brute-force distribution.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    modes: usize,
    cdf: Vec<f64>,
}

impl ExactSampler {
    pub fn new(inst: &GaussianInstance) -> Result<Self> {
        if inst.modes() > BRUTE_FORCE_MAX_MODES {
            bail!(
                ResourceGuard,
                "exact reference sampling needs M ≤ {BRUTE_FORCE_MAX_MODES}, got {}",
                inst.modes()
            );
        }
        Self::from_distribution(&brute_force_distribution(inst)?, inst.modes())
    }

    pub fn from_distribution(dist: &[f64], modes: usize) -> Result<Self> {
        if dist.len() != 1 << modes {
            bail!(Dimension, "distribution length {} for {modes} modes", dist.len());
        }
        let mut acc = 0.0;
        let cdf = dist
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(ExactSampler { modes, cdf })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u8]) {
        let total = *self.cdf.last().unwrap();
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        for (i, b) in out.iter_mut().enumerate() {
            *b = (idx >> (self.modes - 1 - i) & 1) as u8;
        }
    }
}
