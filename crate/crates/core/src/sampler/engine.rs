//! The truncated expansion shared by every marginal recursion.
//!
//! Positions are 1-based inside the sampler: position `i` is mode `i − 1`.
//! For a set of fixed positions `W = [lo, n] ∖ E` with top element `n`,
//!
//! ```text
//! p(x_W) = ½(1 + γ_n) p(x_{W∖n}) + Σ_{R ⊆ W∖n, R ≠ ∅} 2^{−(|R|+1)} γ_{R∪n} p(x_{W∖n∖R})
//! ```
//!
//! with `γ_A = κ(A) Π_{i∈A} (−1)^{x_i}`. Restricting `|R| + 1` to an
//! expansion order and replacing the marginals on the right by table
//! lookups gives every recursion the sampler needs.

use crate::cumulants::CumulantTable;

/// Largest number of elided positions handled in one lookup.
pub(crate) const MAX_ELIDED: usize = 16;

/// How a marginal with elided positions is approximated from tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Family {
    /// Prefix `[1, m]` with elisions; at most `depth` elisions are looked
    /// up directly, further ones split off interval factors from the top.
    Prefix { depth: usize },
    /// Interval `[lo, m]` with elisions, factored into interval marginals
    /// between consecutive elisions.
    Interval,
}

/// Source of (approximated) marginals over `[lo, m] ∖ elided`, with
/// `elided` sorted in strictly decreasing order and contained in `[lo, m]`.
pub(crate) trait MarginalSource {
    fn marginal(&self, m: usize, lo: usize, elided: &[usize], family: Family) -> f64;
}

/// Cumulant lookups with the parity signs of the realized bits.
pub(crate) struct Expansion<'a> {
    kappa: &'a CumulantTable,
    /// `chi[i] = (−1)^{x_i}` for position `i`; `chi[0]` is unused.
    pub chi: Vec<f64>,
}

impl<'a> Expansion<'a> {
    pub fn new(kappa: &'a CumulantTable) -> Self {
        Expansion {
            kappa,
            chi: vec![1.0; kappa.modes() + 1],
        }
    }

    pub fn set_bit(&mut self, pos: usize, bit: u8) {
        self.chi[pos] = if bit == 0 { 1.0 } else { -1.0 };
    }

    #[inline]
    fn binom(&self, n: usize, k: usize) -> usize {
        self.kappa.index().binomials().get(n, k) as usize
    }

    /// `γ_{n}` for the single position `n`.
    pub fn gamma_single(&self, n: usize) -> f64 {
        self.kappa.at(n - 1) * self.chi[n]
    }

    /// Evaluates the expansion of `p(x_{[lo,n]∖E})` up to `max_order`.
    pub fn expand<S: MarginalSource>(
        &self,
        src: &S,
        n: usize,
        lo: usize,
        elided: &[usize],
        max_order: usize,
        family: Family,
    ) -> f64 {
        let mut total = 0.5 * (1.0 + self.gamma_single(n)) * src.marginal(n - 1, lo, elided, family);
        let free = (n - lo) - elided.len();
        let top = max_order.min(self.kappa.max_order()).saturating_sub(1).min(free);
        let mut stack = [0usize; MAX_ELIDED];
        for j in 1..=top {
            let base = self.kappa.index().order_offset(j + 1) + self.binom(n - 1, j + 1);
            let mut walk = Walk {
                exp: self,
                src,
                n,
                lo,
                elided,
                family,
                scale: 0.5f64.powi(j as i32 + 1),
                size: j,
                stack: &mut stack,
                total: 0.0,
            };
            walk.descend(j, n - 1, base, self.chi[n]);
            total += walk.total;
        }
        total
    }
}

struct Walk<'w, 'a, S> {
    exp: &'w Expansion<'a>,
    src: &'w S,
    n: usize,
    lo: usize,
    elided: &'w [usize],
    family: Family,
    scale: f64,
    size: usize,
    stack: &'w mut [usize; MAX_ELIDED],
    total: f64,
}

impl<S: MarginalSource> Walk<'_, '_, S> {
    /// Picks the element at sorted position `k` (1-based, ascending) of `R`,
    /// below `upper`, in decreasing order.
    fn descend(&mut self, k: usize, upper: usize, rank: usize, sign: f64) {
        let floor = self.lo + k - 1;
        let mut r = upper;
        while r >= floor && r >= 1 {
            if !self.elided.contains(&r) {
                let rank = rank + self.exp.binom(r - 1, k);
                let sign = sign * self.exp.chi[r];
                self.stack[self.size - k] = r;
                if k == 1 {
                    self.leaf(rank, sign);
                } else {
                    self.descend(k - 1, r - 1, rank, sign);
                }
            }
            r -= 1;
        }
    }

    fn leaf(&mut self, rank: usize, sign: f64) {
        let gamma = self.exp.kappa.at(rank) * sign;
        if gamma == 0.0 {
            return;
        }
        let mut merged = [0usize; MAX_ELIDED];
        let len = merge_desc(self.elided, &self.stack[..self.size], &mut merged);
        let m = self.src.marginal(self.n - 1, self.lo, &merged[..len], self.family);
        self.total += self.scale * gamma * m;
    }
}

fn merge_desc(a: &[usize], b: &[usize], out: &mut [usize; MAX_ELIDED]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i] > b[j]);
        out[k] = if take_a {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        k += 1;
    }
    k
}
