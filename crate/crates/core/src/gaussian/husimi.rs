use super::GaussianInstance;
use crate::error::{bail, GbsError, Result};
use crate::linalg::complex_log_det;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Largest mode count for which the full outcome distribution is enumerated.
pub const BRUTE_FORCE_MAX_MODES: usize = 20;

const PROB_TOL: f64 = 1e-10;

/// Husimi-ordered covariance `Σ = ½I + (1/ħ) R σ R†`, `O = I − Σ⁻¹` and
/// `det Σ`, with `R = (1/√2)[[I, iI], [I, −iI]]`.
#[derive(Clone, Debug)]
pub struct HusimiForm {
    pub sigma_q: DMatrix<Complex64>,
    pub o: DMatrix<Complex64>,
    pub det_sigma: Complex64,
    modes: usize,
}

impl HusimiForm {
    pub fn new(inst: &GaussianInstance) -> Result<Self> {
        let m = inst.modes();
        let n = 2 * m;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let i = Complex64::i();
        let mut r = DMatrix::<Complex64>::zeros(n, n);
        for k in 0..m {
            r[(k, k)] = Complex64::new(s, 0.0);
            r[(k, k + m)] = i * s;
            r[(k + m, k)] = Complex64::new(s, 0.0);
            r[(k + m, k + m)] = -i * s;
        }
        let sigma = inst.sigma().map(|v| Complex64::new(v, 0.0));
        let rh = r.adjoint();
        let mut sigma_q = &r * sigma * rh / Complex64::new(inst.hbar(), 0.0);
        for k in 0..n {
            sigma_q[(k, k)] += 0.5;
        }
        let inv = sigma_q
            .clone()
            .try_inverse()
            .ok_or_else(|| GbsError::InvalidState("Husimi covariance is singular".into()))?;
        let o = DMatrix::<Complex64>::identity(n, n) - inv;
        let mut buf: Vec<Complex64> = (0..n * n).map(|k| sigma_q[(k / n, k % n)]).collect();
        let det_sigma = complex_log_det(&mut buf, n)
            .ok_or_else(|| GbsError::InvalidState("Husimi covariance is singular".into()))?
            .value();
        Ok(HusimiForm {
            sigma_q,
            o,
            det_sigma,
            modes: m,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Ground-truth probability of a threshold-detection outcome.
    ///
    /// The Torontonian sum carries the sign `(−1)^{|R|}`, which differs from
    /// the sign of the probability by `(−1)^{clicks}`; the factor is applied
    /// here.
    pub fn probability(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.modes {
            bail!(Dimension, "bitstring has length {}, expected {}", bits.len(), self.modes);
        }
        let clicked: Vec<usize> = (0..self.modes).filter(|&k| bits[k] != 0).collect();
        let c = clicked.len();
        let m = self.modes;
        let mut sub = DMatrix::<Complex64>::zeros(2 * c, 2 * c);
        for (a, &i) in clicked.iter().enumerate() {
            for (b, &j) in clicked.iter().enumerate() {
                sub[(a, b)] = self.o[(i, j)];
                sub[(a, b + c)] = self.o[(i, j + m)];
                sub[(a + c, b)] = self.o[(i + m, j)];
                sub[(a + c, b + c)] = self.o[(i + m, j + m)];
            }
        }
        let tor = torontonian(&sub)?;
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        let p = sign * tor / self.det_sigma.sqrt();
        let p = p.re;
        if !p.is_finite() || p < -PROB_TOL || p > 1.0 + PROB_TOL {
            bail!(Numerical, "probability {p:e} out of range for outcome {bits:?}");
        }
        Ok(p.clamp(0.0, 1.0))
    }
}

/// `tor(A) = Σ_{R⊆[n]} (−1)^{|R|} / sqrt(det(I − A_R))` for a `2n×2n`
/// matrix, where `A_R` keeps rows/columns `k` and `k+n` for `k ∈ R`.
///
/// Each square root is taken on the principal branch; a determinant with
/// non-positive real part is rejected since it cannot arise from a physical
/// state.
pub fn torontonian(a: &DMatrix<Complex64>) -> Result<Complex64> {
    let dim = a.nrows();
    if a.ncols() != dim || dim % 2 != 0 {
        bail!(Dimension, "torontonian needs a square 2n×2n matrix, got {}×{}", a.nrows(), a.ncols());
    }
    let n = dim / 2;
    if n > 30 {
        bail!(ResourceGuard, "torontonian of order {n} is beyond the supported size");
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut idx = Vec::with_capacity(dim);
    let mut buf = Vec::with_capacity(dim * dim);
    for mask in 0u64..(1u64 << n) {
        idx.clear();
        idx.extend((0..n).filter(|k| mask >> k & 1 == 1));
        let r = idx.len();
        idx.extend_from_within(..);
        for v in idx[r..].iter_mut() {
            *v += n;
        }
        let s = 2 * r;
        buf.clear();
        for a_i in 0..s {
            for b_i in 0..s {
                let id = if a_i == b_i { 1.0 } else { 0.0 };
                buf.push(Complex64::new(id, 0.0) - a[(idx[a_i], idx[b_i])]);
            }
        }
        let ld = complex_log_det(&mut buf, s)
            .ok_or_else(|| GbsError::Degenerate(format!("I − A_R is singular for R mask {mask:#b}")))?;
        if !ld.has_positive_real_part() {
            bail!(Degenerate, "det(I − A_R) has non-positive real part for R mask {mask:#b}");
        }
        let term = ld.inv_sqrt();
        if r % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(total)
}

/// Exact probability of `bits` for a non-displaced instance.
pub fn exact_probability(inst: &GaussianInstance, bits: &[u8]) -> Result<f64> {
    if inst.is_displaced() {
        bail!(Domain, "exact probabilities are only available for non-displaced states");
    }
    HusimiForm::new(inst)?.probability(bits)
}

/// Outcome index in lexicographic order: mode 0 is the most significant bit.
pub fn outcome_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1))
}

pub fn outcome_bits(index: usize, modes: usize) -> Vec<u8> {
    (0..modes).map(|k| ((index >> (modes - 1 - k)) & 1) as u8).collect()
}

/// Exact probabilities of all `2^M` outcomes in lexicographic order.
pub fn brute_force_distribution(inst: &GaussianInstance) -> Result<Vec<f64>> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    brute_force_distribution_with_workers(inst, workers)
}

/// As [`brute_force_distribution`], fanning outcomes out over `workers`
/// threads. Each outcome is written to its own slot, so the result does not
/// depend on the worker count.
pub fn brute_force_distribution_with_workers(
    inst: &GaussianInstance,
    workers: usize,
) -> Result<Vec<f64>> {
    let m = inst.modes();
    if m > BRUTE_FORCE_MAX_MODES {
        bail!(
            ResourceGuard,
            "brute-force distribution refused for {m} modes (limit {BRUTE_FORCE_MAX_MODES})"
        );
    }
    if inst.is_displaced() {
        bail!(Domain, "exact probabilities are only available for non-displaced states");
    }
    let form = HusimiForm::new(inst)?;
    let total = 1usize << m;
    let mut out = vec![0.0; total];
    let workers = workers.clamp(1, total);
    let chunk = total.div_ceil(workers);
    let results: Vec<Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = out
            .chunks_mut(chunk)
            .enumerate()
            .map(|(w, slot)| {
                let form = &form;
                scope.spawn(move || -> Result<()> {
                    for (off, p) in slot.iter_mut().enumerate() {
                        *p = form.probability(&outcome_bits(w * chunk + off, m))?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for r in results {
        r?;
    }
    Ok(out)
}
