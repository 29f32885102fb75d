//! Correlators `c(S) = E[Π_{k∈S} (−1)^{x_k}]` of a Gaussian ground truth and
//! the cumulants `κ(S)` derived from them through partition sums.
//!
//! Correlators are evaluated from vacuum overlaps of reduced states,
//! `c(S) = (−1)^{|S|} Σ_{R⊆S} (−2)^{|R|} ⟨0_R|ρ_R|0_R⟩`. The table builder
//! computes each overlap once and shares it between all supersets.

mod io;

pub use io::{read_table, table_bytes, write_table};

use crate::error::{bail, GbsError, Result};
use crate::gaussian::{check_subset, GaussianInstance, OverlapScratch};
use crate::partitions::{PatternSet, MAX_PATTERN_ORDER};
use crate::subsets::{next_colex, SubsetIndex};
use std::marker::PhantomData;

/// Default memory cap for subset tables: 8 GiB.
pub const DEFAULT_MEMORY_CAP: u64 = 8 << 30;
/// Environment variable overriding [`DEFAULT_MEMORY_CAP`].
pub const MEMORY_CAP_ENV: &str = "GBS_MEM_CAP_BYTES";

/// Largest subset size for which click marginals are evaluated exactly.
pub const MAX_MARGINAL_SUBSET: usize = 12;

pub trait TableKind: Clone + std::fmt::Debug + Send + Sync {
    const MAGIC: [u8; 4];
    const NAME: &'static str;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correlators;
#[derive(Clone, Debug, PartialEq)]
pub struct Cumulants;

impl TableKind for Correlators {
    const MAGIC: [u8; 4] = *b"GBSC";
    const NAME: &'static str = "correlator";
}

impl TableKind for Cumulants {
    const MAGIC: [u8; 4] = *b"GBSK";
    const NAME: &'static str = "cumulant";
}

/// Dense values over all mode subsets of size `1..=K`, in size-then-colex
/// order (see [`SubsetIndex`]).
#[derive(Clone, Debug)]
pub struct SubsetTable<K: TableKind> {
    index: SubsetIndex,
    values: Vec<f64>,
    _kind: PhantomData<K>,
}

pub type CorrelatorTable = SubsetTable<Correlators>;
pub type CumulantTable = SubsetTable<Cumulants>;

impl<K: TableKind> PartialEq for SubsetTable<K> {
    fn eq(&self, other: &Self) -> bool {
        self.modes() == other.modes()
            && self.max_order() == other.max_order()
            && self.values == other.values
    }
}

impl<K: TableKind> SubsetTable<K> {
    pub fn from_values(modes: usize, max_order: usize, values: Vec<f64>) -> Result<Self> {
        let index = SubsetIndex::new(modes, max_order)?;
        if values.len() != index.count() {
            bail!(
                Format,
                "{} table for M={modes}, K={max_order} needs {} values, got {}",
                K::NAME,
                index.count(),
                values.len()
            );
        }
        Ok(SubsetTable {
            index,
            values,
            _kind: PhantomData,
        })
    }

    pub fn modes(&self) -> usize {
        self.index.modes()
    }

    pub fn max_order(&self) -> usize {
        self.index.max_order()
    }

    pub fn index(&self) -> &SubsetIndex {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value for a sorted subset; `1` for the empty set.
    #[inline]
    pub fn get(&self, subset: &[usize]) -> f64 {
        if subset.is_empty() {
            1.0
        } else {
            self.values[self.index.rank(subset)]
        }
    }

    pub fn try_get(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Ok(1.0);
        }
        Ok(self.values[self.index.try_rank(subset)?])
    }

    #[inline]
    pub fn at(&self, rank: usize) -> f64 {
        self.values[rank]
    }
}

/// Memory cap applied before allocating subset tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryBudget {
    pub cap_bytes: u64,
}

impl Default for MemoryBudget {
    fn default() -> Self {
        MemoryBudget {
            cap_bytes: DEFAULT_MEMORY_CAP,
        }
    }
}

impl MemoryBudget {
    /// Reads [`MEMORY_CAP_ENV`], falling back to the default cap.
    pub fn from_env() -> Result<Self> {
        match std::env::var(MEMORY_CAP_ENV) {
            Ok(v) => {
                let cap_bytes = v.trim().parse().map_err(|_| {
                    GbsError::Domain(format!("{MEMORY_CAP_ENV}={v} is not a byte count"))
                })?;
                Ok(MemoryBudget { cap_bytes })
            }
            Err(_) => Ok(Self::default()),
        }
    }

    /// Refuses when `tables` dense tables over `Σ_{d≤K} C(M,d)` subsets do
    /// not fit.
    pub fn check(&self, modes: usize, max_order: usize, tables: u64) -> Result<()> {
        let count: u64 = (1..=max_order as u64)
            .map(|d| crate::subsets::binomial(modes as u64, d))
            .fold(0u64, |a, b| a.saturating_add(b));
        let required = count.saturating_mul(8).saturating_mul(tables);
        if required > self.cap_bytes {
            bail!(
                ResourceGuard,
                "M={modes}, K={max_order} needs {required} bytes for {tables} table(s); cap is {} bytes",
                self.cap_bytes
            );
        }
        Ok(())
    }
}

/// Fills `values[rank]` for every subset with `f(subset)`, splitting each
/// size class into contiguous chunks handled by separate threads. Writes
/// are disjoint, so the output does not depend on `workers`.
fn fill_by_subset<F>(index: &SubsetIndex, values: &mut [f64], workers: usize, f: F) -> Result<()>
where
    F: Fn(&[usize], &mut OverlapScratch) -> Result<f64> + Sync,
{
    let workers = workers.max(1);
    let mut jobs: Vec<(usize, &mut [f64])> = Vec::new();
    let mut rest = values;
    let mut consumed = 0;
    for d in 1..=index.max_order() {
        let range = index.order_range(d);
        let chunk = range.len().div_ceil(workers).max(1);
        let mut start = range.start;
        while start < range.end {
            let len = chunk.min(range.end - start);
            let (head, tail) = std::mem::take(&mut rest).split_at_mut(len);
            debug_assert_eq!(consumed, start);
            jobs.push((start, head));
            rest = tail;
            consumed += len;
            start += len;
        }
    }
    let f = &f;
    let run = |(start, slot): (usize, &mut [f64])| -> Result<()> {
        let mut subset = index.unrank(start)?;
        let mut scratch = OverlapScratch::default();
        for (i, out) in slot.iter_mut().enumerate() {
            if i > 0 {
                next_colex(&mut subset, index.modes());
            }
            *out = f(&subset, &mut scratch)?;
        }
        Ok(())
    };
    if workers == 1 {
        return jobs.into_iter().try_for_each(run);
    }
    // deal jobs round-robin to `workers` threads
    let mut per_worker: Vec<Vec<(usize, &mut [f64])>> = (0..workers).map(|_| Vec::new()).collect();
    for (i, job) in jobs.into_iter().enumerate() {
        per_worker[i % workers].push(job);
    }
    let results: Vec<Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = per_worker
            .into_iter()
            .map(|batch| scope.spawn(move || batch.into_iter().try_for_each(run)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("table worker panicked")).collect()
    });
    results.into_iter().collect()
}

fn sign(d: usize) -> f64 {
    if d % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Subset of `set` selected by the bits of `mask`.
fn select(set: &[usize], mask: u32, out: &mut Vec<usize>) {
    out.clear();
    out.extend(set.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v));
}

/// Correlator of a single subset from the covariance matrix.
pub fn correlator(inst: &GaussianInstance, subset: &[usize]) -> Result<f64> {
    check_subset(subset, inst.modes())?;
    if subset.len() > 30 {
        bail!(ResourceGuard, "correlator of order {} is too large", subset.len());
    }
    let mut scratch = OverlapScratch::default();
    let mut sub = Vec::with_capacity(subset.len());
    let d = subset.len();
    let mut acc = 0.0;
    for mask in 0u32..(1 << d) {
        select(subset, mask, &mut sub);
        let ov = inst.subset_vacuum_overlap(&sub, &mut scratch)?;
        acc += sign(sub.len()) * (1u64 << sub.len()) as f64 * ov;
    }
    Ok(sign(d) * acc)
}

/// Vacuum overlaps of every reduced state of size `1..=K`.
pub fn overlap_table(
    inst: &GaussianInstance,
    max_order: usize,
    workers: usize,
) -> Result<SubsetTable<Correlators>> {
    let index = SubsetIndex::new(inst.modes(), max_order)?;
    let mut values = vec![0.0; index.count()];
    fill_by_subset(&index, &mut values, workers, |s, scratch| {
        inst.subset_vacuum_overlap(s, scratch)
    })?;
    Ok(SubsetTable {
        index,
        values,
        _kind: PhantomData,
    })
}

/// All correlators up to order `K`.
pub fn correlator_table(
    inst: &GaussianInstance,
    max_order: usize,
    workers: usize,
    budget: MemoryBudget,
) -> Result<CorrelatorTable> {
    if max_order == 0 || max_order > MAX_PATTERN_ORDER {
        bail!(Domain, "table order {max_order} outside 1..={MAX_PATTERN_ORDER}");
    }
    budget.check(inst.modes(), max_order, 2)?;
    let overlaps = overlap_table(inst, max_order, workers)?;
    let index = overlaps.index.clone();
    let mut values = vec![0.0; index.count()];
    fill_by_subset(&index, &mut values, workers, |s, _| {
        let mut sub = Vec::with_capacity(s.len());
        let mut acc = 0.0;
        for mask in 0u32..(1 << s.len()) {
            select(s, mask, &mut sub);
            acc += sign(sub.len()) * (1u64 << sub.len()) as f64 * overlaps.get(&sub);
        }
        Ok(sign(s.len()) * acc)
    })?;
    Ok(SubsetTable {
        index,
        values,
        _kind: PhantomData,
    })
}

fn partition_transform<A: TableKind, B: TableKind>(
    input: &SubsetTable<A>,
    weighted: bool,
    workers: usize,
) -> Result<SubsetTable<B>> {
    let patterns = PatternSet::new(input.max_order())?;
    let index = input.index.clone();
    let mut values = vec![0.0; index.count()];
    fill_by_subset(&index, &mut values, workers, |s, _| {
        let d = s.len();
        let mut sub_vals = [0.0f64; 1 << MAX_PATTERN_ORDER];
        let mut sub = Vec::with_capacity(d);
        for mask in 1u32..(1 << d) {
            select(s, mask, &mut sub);
            sub_vals[mask as usize] = input.get(&sub);
        }
        let mut acc = 0.0;
        for p in patterns.order(d) {
            let prod: f64 = p.masks.iter().map(|&m| sub_vals[m as usize]).product();
            acc += if weighted { p.weight * prod } else { prod };
        }
        Ok(acc)
    })?;
    Ok(SubsetTable {
        index,
        values,
        _kind: PhantomData,
    })
}

/// `κ(S) = Σ_π w(π) Π_{b∈π} c(b)`.
pub fn cumulants_from_correlators(c: &CorrelatorTable) -> Result<CumulantTable> {
    partition_transform(c, true, 1)
}

/// As [`cumulants_from_correlators`] with `workers` threads.
pub fn cumulants_from_correlators_par(c: &CorrelatorTable, workers: usize) -> Result<CumulantTable> {
    partition_transform(c, true, workers)
}

/// Joint cumulants of arbitrary variables from their joint moments
/// `E[Π_{k∈S} Y_k]` given in table order; the partition sum is the same as
/// for correlators.
pub fn cumulants_from_moments(modes: usize, max_order: usize, moments: Vec<f64>) -> Result<Vec<f64>> {
    let t: CorrelatorTable = SubsetTable::from_values(modes, max_order, moments)?;
    Ok(cumulants_from_correlators(&t)?.values)
}

/// `c(S) = Σ_π Π_{b∈π} κ(b)`, the inverse of [`cumulants_from_correlators`].
pub fn correlators_from_cumulants(k: &CumulantTable) -> Result<CorrelatorTable> {
    partition_transform(k, false, 1)
}

/// `c(S'∪{n}) − Σ_{R⊆S'} κ(R∪{n}) c(S'∖R)`, which vanishes for a consistent
/// pair of tables. `rest` must be sorted with every element below `n`.
pub fn cumulant_recursion_residual(
    c: &CorrelatorTable,
    k: &CumulantTable,
    rest: &[usize],
    n: usize,
) -> Result<f64> {
    if rest.last().is_some_and(|&l| l >= n) {
        bail!(Domain, "all elements of S' must precede n={n}");
    }
    let mut full = rest.to_vec();
    full.push(n);
    let lhs = c.try_get(&full)?;
    let d = rest.len();
    let mut with_n = Vec::with_capacity(d + 1);
    let mut complement = Vec::with_capacity(d);
    let mut acc = 0.0;
    for mask in 0u32..(1 << d) {
        select(rest, mask, &mut with_n);
        with_n.push(n);
        select(rest, !mask & ((1 << d) - 1), &mut complement);
        acc += k.try_get(&with_n)? * c.try_get(&complement)?;
    }
    Ok(lhs - acc)
}

/// `p(x_k = 1 ∀ k ∈ S)` by inclusion–exclusion over vacuum overlaps.
pub fn moments_from_click_marginals(inst: &GaussianInstance, subset: &[usize]) -> Result<f64> {
    check_subset(subset, inst.modes())?;
    if subset.len() > MAX_MARGINAL_SUBSET {
        bail!(
            ResourceGuard,
            "click marginal of {} modes refused (limit {MAX_MARGINAL_SUBSET})",
            subset.len()
        );
    }
    let mut scratch = OverlapScratch::default();
    let mut sub = Vec::with_capacity(subset.len());
    let mut acc = 0.0;
    for mask in 0u32..(1 << subset.len()) {
        select(subset, mask, &mut sub);
        acc += sign(sub.len()) * inst.subset_vacuum_overlap(&sub, &mut scratch)?;
    }
    Ok(acc)
}

/// Cumulant of the 0/1 click variables on the subset at `rank`, obtained
/// from the parity cumulant: `(1 − κ)/2` at order one, `κ/(−2)^d` above.
pub fn click_cumulant(kappa: &CumulantTable, rank: usize, order: usize) -> f64 {
    let v = kappa.at(rank);
    if order == 1 {
        0.5 * (1.0 - v)
    } else {
        v / (-2.0f64).powi(order as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::random_instance;

    fn table<K: TableKind>(m: usize, k: usize, v: Vec<f64>) -> SubsetTable<K> {
        SubsetTable::from_values(m, k, v).unwrap()
    }

    #[test]
    fn vacuum_tables() {
        let vac = GaussianInstance::vacuum(5, 2.0).unwrap();
        let c = correlator_table(&vac, 3, 2, MemoryBudget::default()).unwrap();
        assert!(c.values().iter().all(|v| (*v - 1.0).abs() < 1e-15));
        let k = cumulants_from_correlators(&c).unwrap();
        for (rank, s) in k.index().iter().enumerate() {
            let expect = if s.len() == 1 { 1.0 } else { 0.0 };
            assert!((k.at(rank) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn second_order_cumulant_is_covariance() {
        let (inst, _) = random_instance(4, 2, 0.6, 1.0, 9, 2.0).unwrap();
        let c = correlator_table(&inst, 2, 1, MemoryBudget::default()).unwrap();
        let k = cumulants_from_correlators(&c).unwrap();
        let expect = c.get(&[1, 3]) - c.get(&[1]) * c.get(&[3]);
        assert!((k.get(&[1, 3]) - expect).abs() < 1e-15);
    }

    #[test]
    fn third_order_hand_expansion() {
        // c = κ123 + κ1κ23 + κ2κ13 + κ3κ12 + κ1κ2κ3
        let m = 3;
        let vals: Vec<f64> = vec![0.3, -0.2, 0.5, 0.05, -0.04, 0.07, 0.011];
        let k: CumulantTable = table(m, 3, vals);
        let c = correlators_from_cumulants(&k).unwrap();
        let (k1, k2, k3) = (k.get(&[0]), k.get(&[1]), k.get(&[2]));
        let expect = k.get(&[0, 1, 2])
            + k1 * k.get(&[1, 2])
            + k2 * k.get(&[0, 2])
            + k3 * k.get(&[0, 1])
            + k1 * k2 * k3;
        assert!((c.get(&[0, 1, 2]) - expect).abs() < 1e-16);
    }

    #[test]
    fn independent_modes_factorise() {
        let m = 4;
        let idx = SubsetIndex::new(m, 4).unwrap();
        let singles = [0.9, -0.3, 0.5, 0.7];
        let vals = idx
            .iter()
            .map(|s| if s.len() == 1 { singles[s[0]] } else { 0.0 })
            .collect();
        let k: CumulantTable = table(m, 4, vals);
        let c = correlators_from_cumulants(&k).unwrap();
        for s in idx.iter() {
            let prod: f64 = s.iter().map(|&i| singles[i]).product();
            assert!((c.get(&s) - prod).abs() < 1e-15);
        }
    }

    #[test]
    fn single_correlator_matches_table_exactly() {
        let (inst, _) = random_instance(6, 3, 0.5, 1.0, 4, 2.0).unwrap();
        let t = correlator_table(&inst, 5, 3, MemoryBudget::default()).unwrap();
        for (rank, s) in t.index().iter().enumerate() {
            assert_eq!(t.at(rank), correlator(&inst, &s).unwrap(), "{s:?}");
        }
    }

    #[test]
    fn worker_count_does_not_change_tables() {
        let (inst, _) = random_instance(7, 3, 0.5, 1.0, 8, 2.0).unwrap();
        let a = correlator_table(&inst, 4, 1, MemoryBudget::default()).unwrap();
        let b = correlator_table(&inst, 4, 8, MemoryBudget::default()).unwrap();
        assert_eq!(a.values(), b.values());
        let ka = cumulants_from_correlators(&a).unwrap();
        let kb = cumulants_from_correlators_par(&b, 5).unwrap();
        assert_eq!(ka.values(), kb.values());
    }

    #[test]
    fn memory_guard_reports_bytes() {
        let vac = GaussianInstance::vacuum(10, 2.0).unwrap();
        let err = correlator_table(&vac, 4, 1, MemoryBudget { cap_bytes: 1000 }).unwrap_err();
        match err {
            GbsError::ResourceGuard(msg) => assert!(msg.contains("6160"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn residual_trivial_cases() {
        let vac = GaussianInstance::vacuum(4, 2.0).unwrap();
        let c = correlator_table(&vac, 4, 1, MemoryBudget::default()).unwrap();
        let k = cumulants_from_correlators(&c).unwrap();
        assert_eq!(cumulant_recursion_residual(&c, &k, &[], 2).unwrap(), 0.0);
        assert!(cumulant_recursion_residual(&c, &k, &[0, 1, 2], 3).unwrap().abs() < 1e-15);
        assert!(cumulant_recursion_residual(&c, &k, &[3], 2).is_err());
    }

    #[test]
    fn click_moments_vacuum_and_guard() {
        let vac = GaussianInstance::vacuum(13, 2.0).unwrap();
        assert_eq!(moments_from_click_marginals(&vac, &[0, 4]).unwrap(), 0.0);
        let all: Vec<usize> = (0..13).collect();
        assert!(matches!(
            moments_from_click_marginals(&vac, &all),
            Err(GbsError::ResourceGuard(_))
        ));
    }

    #[test]
    fn correlator_of_thermal_mode() {
        let nbar = 0.8;
        let th = GaussianInstance::thermal(&[nbar], 2.0).unwrap();
        let q = nbar / (nbar + 1.0);
        assert!((correlator(&th, &[0]).unwrap() - (1.0 - 2.0 * q)).abs() < 1e-14);
    }
}
