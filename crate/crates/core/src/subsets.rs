//! Dense indexing of mode subsets of size `1..=K` through the combinatorial
//! number system.
//!
//! Subsets are ordered by size first, then colexicographically within a size:
//! a sorted subset `s_1 < … < s_d` has in-order rank `Σ_k C(s_k, k)`.

use crate::error::{bail, Result};

/// `C(n, k)` table for `n ≤ max_n`, `k ≤ max_k`.
#[derive(Clone, Debug)]
pub struct Binomials {
    max_k: usize,
    table: Vec<u64>,
}

impl Binomials {
    pub fn new(max_n: usize, max_k: usize) -> Self {
        let w = max_k + 1;
        let mut table = vec![0u64; (max_n + 1) * w];
        for n in 0..=max_n {
            table[n * w] = 1;
            for k in 1..=max_k.min(n) {
                let above = table[(n - 1) * w + k];
                let diag = table[(n - 1) * w + k - 1];
                table[n * w + k] = above.saturating_add(diag);
            }
        }
        Binomials { max_k, table }
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> u64 {
        if k > self.max_k {
            return binomial(n as u64, k as u64);
        }
        self.table[n * (self.max_k + 1) + k]
    }
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Rank/unrank map for all subsets of `[0, M)` with `1 ≤ |S| ≤ K`.
#[derive(Clone, Debug)]
pub struct SubsetIndex {
    modes: usize,
    max_order: usize,
    binom: Binomials,
    /// `offsets[d]` is the rank of the first subset of size `d`;
    /// `offsets[K+1]` is the total count.
    offsets: Vec<usize>,
}

impl SubsetIndex {
    pub fn new(modes: usize, max_order: usize) -> Result<Self> {
        if modes == 0 {
            bail!(Domain, "subset index needs at least one mode");
        }
        if max_order == 0 || max_order > modes {
            bail!(Domain, "order {max_order} must lie in 1..={modes}");
        }
        let binom = Binomials::new(modes, max_order + 1);
        let mut offsets = vec![0usize; max_order + 2];
        for d in 1..=max_order {
            let c = binom.get(modes, d);
            if c > usize::MAX as u64 / 2 {
                bail!(ResourceGuard, "C({modes}, {d}) subsets cannot be indexed");
            }
            offsets[d + 1] = offsets[d] + c as usize;
        }
        Ok(SubsetIndex {
            modes,
            max_order,
            binom,
            offsets,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Total number of indexed subsets, `Σ_{d=1..K} C(M, d)`.
    pub fn count(&self) -> usize {
        self.offsets[self.max_order + 1]
    }

    /// Rank range occupied by subsets of size `d`.
    pub fn order_range(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d + 1]
    }

    pub fn binomials(&self) -> &Binomials {
        &self.binom
    }

    #[inline]
    pub fn order_offset(&self, d: usize) -> usize {
        self.offsets[d]
    }

    /// Rank of a strictly increasing subset. No bounds checks beyond debug
    /// assertions; use [`SubsetIndex::try_rank`] for untrusted input.
    #[inline]
    pub fn rank(&self, subset: &[usize]) -> usize {
        debug_assert!(!subset.is_empty() && subset.len() <= self.max_order);
        let mut r = self.offsets[subset.len()];
        for (k, &s) in subset.iter().enumerate() {
            r += self.binom.get(s, k + 1) as usize;
        }
        r
    }

    pub fn try_rank(&self, subset: &[usize]) -> Result<usize> {
        if subset.is_empty() || subset.len() > self.max_order {
            bail!(Domain, "subset size {} outside 1..={}", subset.len(), self.max_order);
        }
        crate::gaussian::check_subset(subset, self.modes)?;
        Ok(self.rank(subset))
    }

    pub fn unrank(&self, offset: usize) -> Result<Vec<usize>> {
        if offset >= self.count() {
            bail!(Domain, "offset {offset} out of range (count {})", self.count());
        }
        let d = (1..=self.max_order)
            .find(|&d| offset < self.offsets[d + 1])
            .expect("offset below count");
        let mut rem = (offset - self.offsets[d]) as u64;
        let mut out = vec![0usize; d];
        let mut upper = self.modes;
        for k in (1..=d).rev() {
            // largest s < upper with C(s, k) ≤ rem
            let mut s = upper - 1;
            while self.binom.get(s, k) > rem {
                s -= 1;
            }
            out[k - 1] = s;
            rem -= self.binom.get(s, k);
            upper = s;
        }
        Ok(out)
    }

    /// Iterates every subset in rank order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (1..=self.max_order).flat_map(move |d| Combinations::new(self.modes, d))
    }
}

/// Colexicographic enumeration of the `d`-subsets of `[0, n)`.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, d: usize) -> Self {
        Combinations {
            n,
            current: (0..d).collect(),
            done: d > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.done = !next_colex(&mut self.current, self.n);
        Some(out)
    }
}

/// Advances a sorted subset of `[0, n)` to its colexicographic successor of
/// the same size. Returns `false` (leaving `current` unspecified) when it was
/// the last one.
pub fn next_colex(current: &mut [usize], n: usize) -> bool {
    let d = current.len();
    for i in 0..d {
        let limit = if i + 1 < d { current[i + 1] } else { n };
        if current[i] + 1 < limit {
            current[i] += 1;
            for (j, v) in current.iter_mut().enumerate().take(i) {
                *v = j;
            }
            return true;
        }
    }
    false
}
