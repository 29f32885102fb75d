use super::engine::{Expansion, Family, MarginalSource};
use super::{ExpansionOrders, SampleStatus};
use crate::cumulants::CumulantTable;
use crate::error::{bail, GbsError, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Per-sample dynamic-programming state.
///
/// Entries are indexed by 1-based positions (position `i` is mode `i − 1`):
///
/// - `prefix(m)`: `p(x_m, …, x_1)`, with `prefix(0) = 1`;
/// - `plus(b, l)`: interval marginal `p(x_b, …, x_l)`, `1 ≤ l ≤ b`;
/// - `single(m, e)`: prefix of length `m` with `x_e` summed out, `e < m`;
/// - `double(m, d, e)`: prefix of length `m` with `x_d`, `x_e` summed out,
///   `d < e < m`.
///
/// All entries of every length are kept, which is `O(M³)` values for the
/// double-elision tables.
#[derive(Clone, Debug)]
pub struct MarginalTables {
    modes: usize,
    prefix: Vec<f64>,
    zero_branch: Vec<f64>,
    plus: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    bits: Vec<u8>,
}

fn tri(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn tet(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

impl MarginalTables {
    pub fn new(modes: usize, depth: usize) -> Self {
        MarginalTables {
            modes,
            prefix: vec![1.0; modes + 1],
            zero_branch: vec![0.0; modes + 1],
            plus: vec![0.0; tri(modes + 1)],
            p1: vec![0.0; tri(modes)],
            p2: if depth >= 2 { vec![0.0; tet(modes)] } else { Vec::new() },
            bits: vec![0; modes],
        }
    }

    /// Number of stored values.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.zero_branch.len() + self.plus.len() + self.p1.len() + self.p2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes == 0
    }

    pub fn memory_bytes(&self) -> usize {
        8 * self.len() + self.bits.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// The bits of the last path.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn prefix(&self, m: usize) -> f64 {
        self.prefix[m]
    }

    /// `p(x_n = 0, x_{n−1}, …, x_1)` as computed at step `n`.
    pub fn zero_branch(&self, n: usize) -> f64 {
        self.zero_branch[n]
    }

    #[inline]
    pub fn plus(&self, b: usize, l: usize) -> f64 {
        if b < l {
            1.0
        } else {
            self.plus[tri(b) + l - 1]
        }
    }

    #[inline]
    pub fn single(&self, m: usize, e: usize) -> f64 {
        debug_assert!(e >= 1 && e < m);
        self.p1[tri(m - 1) + e - 1]
    }

    #[inline]
    pub fn double(&self, m: usize, d: usize, e: usize) -> f64 {
        debug_assert!(d >= 1 && d < e && e < m);
        self.p2[tet(m - 1) + (d - 1) + tri(e - 1)]
    }

    fn plus_mut(&mut self, b: usize, l: usize) -> &mut f64 {
        &mut self.plus[tri(b) + l - 1]
    }
}

impl MarginalSource for MarginalTables {
    fn marginal(&self, m: usize, lo: usize, elided: &[usize], family: Family) -> f64 {
        let mut m = m;
        let mut f = 1.0;
        match family {
            Family::Interval => {
                for &a in elided {
                    f *= self.plus(m, a + 1);
                    m = a - 1;
                }
                f * self.plus(m, lo)
            }
            Family::Prefix { depth } => {
                let mut i = 0;
                while i < elided.len() && (elided.len() - i > depth || elided[i] == m) {
                    f *= self.plus(m, elided[i] + 1);
                    m = elided[i] - 1;
                    i += 1;
                }
                f * match &elided[i..] {
                    [] => self.prefix[m],
                    [e] => self.single(m, *e),
                    [e, d] => self.double(m, *d, *e),
                    _ => unreachable!("lookup depth is at most two"),
                }
            }
        }
    }
}

/// Chain-rule sampler over a cumulant table.
#[derive(Clone, Debug)]
pub struct ChainSampler<'a> {
    kappa: &'a CumulantTable,
    orders: ExpansionOrders,
    clamp_epsilon: f64,
}

impl<'a> ChainSampler<'a> {
    /// Builds a sampler with explicit expansion orders. Orders may exceed
    /// the usual `{3, 4, 5}` range but not the order of `kappa`.
    pub fn with_orders(kappa: &'a CumulantTable, orders: ExpansionOrders) -> Result<Self> {
        orders.validate(kappa.max_order())?;
        Ok(ChainSampler {
            kappa,
            orders,
            clamp_epsilon: 0.0,
        })
    }

    /// Clamps every conditional into `[ε, 1 − ε]`.
    pub fn with_clamp_epsilon(mut self, eps: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eps) {
            bail!(Domain, "clamp epsilon must lie in [0, 0.5), got {eps}");
        }
        self.clamp_epsilon = eps;
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.kappa.modes()
    }

    pub fn orders(&self) -> ExpansionOrders {
        self.orders
    }

    pub fn new_tables(&self) -> MarginalTables {
        MarginalTables::new(self.modes(), self.orders.depth)
    }

    /// Draws one sample into `out`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        tables: &mut MarginalTables,
        rng: &mut R,
        out: &mut [u8],
    ) -> Result<SampleStatus> {
        let status = self.run(tables, Path::Draw(rng), false)?;
        out.copy_from_slice(&tables.bits);
        Ok(status)
    }

    /// Model probability of `bits` under the chain rule, i.e. the product of
    /// the clamped conditionals along the path. Fills every table, including
    /// those of the final length.
    pub fn evaluate_path(&self, tables: &mut MarginalTables, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.modes() {
            bail!(Dimension, "path has {} bits for {} modes", bits.len(), self.modes());
        }
        if bits.iter().any(|&b| b > 1) {
            bail!(Domain, "path bits must be 0 or 1");
        }
        self.run(tables, Path::<ChaCha8Rng>::Forced(bits), true)?;
        Ok(tables.prefix[self.modes()])
    }

    fn run<R: Rng + ?Sized>(
        &self,
        t: &mut MarginalTables,
        mut path: Path<'_, R>,
        fill_last: bool,
    ) -> Result<SampleStatus> {
        let m_total = self.modes();
        let o = self.orders;
        let family = Family::Prefix { depth: o.depth };
        let mut exp = Expansion::new(self.kappa);
        let mut status = SampleStatus::default();
        t.prefix[0] = 1.0;
        for n in 1..=m_total {
            exp.set_bit(n, 0);
            let p0 = exp.expand(t, n, 1, &[], o.step, family);
            if !p0.is_finite() {
                return Err(GbsError::Numerical(format!("non-finite marginal at mode {}", n - 1)));
            }
            t.zero_branch[n] = p0;
            let prev = t.prefix[n - 1];
            let q0 = if prev > 0.0 && prev.is_finite() {
                (p0 / prev).clamp(self.clamp_epsilon, 1.0 - self.clamp_epsilon)
            } else {
                status.fallback_steps += 1;
                0.5 * (1.0 + self.kappa.at(n - 1))
            };
            let bit = match &mut path {
                Path::Draw(rng) => u8::from(rng.random::<f64>() >= q0),
                Path::Forced(bits) => bits[n - 1],
            };
            t.bits[n - 1] = bit;
            exp.set_bit(n, bit);
            t.prefix[n] = if bit == 0 { q0 * prev } else { (1.0 - q0) * prev };
            if n < m_total || fill_last {
                self.update(t, &exp, n)?;
            }
        }
        Ok(status)
    }

    fn update(&self, t: &mut MarginalTables, exp: &Expansion<'_>, n: usize) -> Result<()> {
        let o = self.orders;
        let family = Family::Prefix { depth: o.depth };
        let check = |v: f64| -> Result<f64> {
            if v.is_finite() {
                Ok(v.clamp(0.0, 1.0))
            } else {
                Err(GbsError::Numerical(format!("non-finite auxiliary marginal at mode {}", n - 1)))
            }
        };
        for l in 1..=n {
            let v = check(exp.expand(t, n, l, &[], o.plus, Family::Interval))?;
            *t.plus_mut(n, l) = v;
        }
        for e in 1..n {
            let v = check(exp.expand(t, n, 1, &[e], o.p1, family))?;
            t.p1[tri(n - 1) + e - 1] = v;
        }
        if o.depth >= 2 {
            for e in 2..n {
                for d in 1..e {
                    let v = check(exp.expand(t, n, 1, &[e, d], o.p2, family))?;
                    t.p2[tet(n - 1) + (d - 1) + tri(e - 1)] = v;
                }
            }
        }
        Ok(())
    }
}

enum Path<'b, R: ?Sized> {
    Draw(&'b mut R),
    Forced(&'b [u8]),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulants::{cumulants_from_correlators, correlator_table, MemoryBudget};
    use crate::gaussian::{brute_force_distribution, outcome_index, random_instance, GaussianInstance};
    use crate::sampler::exact::ExactMarginals;

    fn kappa_for(inst: &GaussianInstance, k: usize) -> CumulantTable {
        let c = correlator_table(inst, k, 1, MemoryBudget::default()).unwrap();
        cumulants_from_correlators(&c).unwrap()
    }

    fn all_paths(m: usize) -> impl Iterator<Item = Vec<u8>> {
        (0..1usize << m).map(move |i| crate::gaussian::outcome_bits(i, m))
    }

    #[test]
    fn index_layouts_are_dense() {
        let m = 7;
        let mut seen = vec![false; tet(m)];
        for mm in 3..=m {
            for e in 2..mm {
                for d in 1..e {
                    let k = tet(mm - 1) + (d - 1) + tri(e - 1);
                    assert!(!seen[k]);
                    seen[k] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        let mut seen = vec![false; tri(m)];
        for mm in 2..=m {
            for e in 1..mm {
                seen[tri(mm - 1) + e - 1] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn independent_modes_give_product_tables() {
        let nbar = [0.3, 0.9, 0.1, 0.5, 0.7];
        let inst = GaussianInstance::thermal(&nbar, 2.0).unwrap();
        let kappa = kappa_for(&inst, 3);
        let s = ChainSampler::with_orders(&kappa, ExpansionOrders::double_elision(3)).unwrap();
        let mut t = s.new_tables();
        let bits = [1u8, 0, 0, 1, 1];
        let p = s.evaluate_path(&mut t, &bits).unwrap();
        let f = |i: usize| {
            let q = nbar[i] / (nbar[i] + 1.0);
            if bits[i] == 1 {
                q
            } else {
                1.0 - q
            }
        };
        let prod = |r: std::ops::RangeInclusive<usize>, skip: &[usize]| -> f64 {
            r.filter(|p| !skip.contains(p)).map(|p| f(p - 1)).product()
        };
        assert!((p - prod(1..=5, &[])).abs() < 1e-14);
        for b in 1..=5 {
            for l in 1..=b {
                assert!((t.plus(b, l) - prod(l..=b, &[])).abs() < 1e-14);
            }
            for e in 1..b {
                assert!((t.single(b, e) - prod(1..=b, &[e])).abs() < 1e-14);
                for d in 1..e {
                    assert!((t.double(b, d, e) - prod(1..=b, &[d, e])).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn vacuum_path_probabilities() {
        let vac = GaussianInstance::vacuum(6, 2.0).unwrap();
        let kappa = kappa_for(&vac, 3);
        let s = ChainSampler::with_orders(&kappa, ExpansionOrders::single_elision(3)).unwrap();
        let mut t = s.new_tables();
        assert_eq!(s.evaluate_path(&mut t, &[0; 6]).unwrap(), 1.0);
        assert_eq!(s.evaluate_path(&mut t, &[0, 0, 1, 0, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn full_order_reproduces_brute_force() {
        for (m, seed) in [(3usize, 1u64), (4, 2), (5, 3)] {
            let (inst, _) = random_instance(m, m / 2, 0.7, 1.0, seed, 2.0).unwrap();
            let dist = brute_force_distribution(&inst).unwrap();
            let kappa = kappa_for(&inst, m);
            let s = ChainSampler::with_orders(&kappa, ExpansionOrders::full(m)).unwrap();
            let exact = ExactMarginals::new(dist.clone(), m).unwrap();
            let mut t = s.new_tables();
            for bits in all_paths(m) {
                let p = s.evaluate_path(&mut t, &bits).unwrap();
                assert!((p - dist[outcome_index(&bits)]).abs() < 1e-9, "M={m} {bits:?}");
                for b in 1..=m {
                    for e in 1..b {
                        let want = exact.of_path(&bits, 1, b, &[e]);
                        assert!((t.single(b, e) - want).abs() < 1e-9);
                        for d in 1..e {
                            let want = exact.of_path(&bits, 1, b, &[e, d]);
                            assert!((t.double(b, d, e) - want).abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn interval_marginals_exact_up_to_three_positions() {
        let (inst, _) = random_instance(3, 1, 0.8, 1.1, 5, 2.0).unwrap();
        let dist = brute_force_distribution(&inst).unwrap();
        let kappa = kappa_for(&inst, 3);
        let s = ChainSampler::with_orders(&kappa, ExpansionOrders::full(3)).unwrap();
        let exact = ExactMarginals::new(dist, 3).unwrap();
        let mut t = s.new_tables();
        for bits in all_paths(3) {
            s.evaluate_path(&mut t, &bits).unwrap();
            for b in 1..=3 {
                for l in 1..=b {
                    assert!((t.plus(b, l) - exact.of_path(&bits, l, b, &[])).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn path_probabilities_sum_to_one() {
        let (inst, _) = random_instance(7, 3, 0.6, 1.0, 21, 2.0).unwrap();
        let kappa = kappa_for(&inst, 4);
        for orders in [ExpansionOrders::single_elision(3), ExpansionOrders::double_elision(4)] {
            let s = ChainSampler::with_orders(&kappa, orders).unwrap();
            let mut t = s.new_tables();
            let total: f64 = all_paths(7).map(|b| s.evaluate_path(&mut t, &b).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-12, "{total}");
        }
    }

    #[test]
    fn prefix_is_non_increasing() {
        let (inst, _) = random_instance(8, 4, 0.5, 1.0, 2, 2.0).unwrap();
        let kappa = kappa_for(&inst, 5);
        let s = ChainSampler::with_orders(&kappa, ExpansionOrders::double_elision(5)).unwrap();
        let mut t = s.new_tables();
        let mut rng = rand::rng();
        let mut out = vec![0u8; 8];
        for _ in 0..50 {
            s.sample(&mut t, &mut rng, &mut out).unwrap();
            for n in 1..=8 {
                assert!(t.prefix(n) <= t.prefix(n - 1));
            }
        }
    }
}
