//! Gaussian ground truths and exact threshold-detection probabilities.
//!
//! Quadratures use the `xxpp` ordering: for an `M`-mode state the first `M`
//! rows/columns of the covariance matrix are the `x` quadratures and the
//! last `M` the `p` quadratures. The vacuum has covariance `(ħ/2)·I`.

mod husimi;
mod io;
mod random;

pub use husimi::{
    brute_force_distribution, brute_force_distribution_with_workers, exact_probability,
    outcome_bits, outcome_index, torontonian, HusimiForm, BRUTE_FORCE_MAX_MODES,
};
pub use io::{load_instance, save_covariance_json, save_jiuzhang_json, InstanceFile};
pub use random::{haar_unitary, random_instance};

use crate::error::{bail, GbsError, Result};
use crate::linalg::{cholesky_in_place, forward_substitute};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Symmetry tolerance, relative to the largest covariance entry.
const SYMMETRY_TOL: f64 = 1e-10;
/// Lowest admissible eigenvalue of `σ + i(ħ/2)Ω`, relative to `max(1, ‖σ‖)`.
const UNCERTAINTY_TOL: f64 = 1e-8;

/// An `M`-mode Gaussian state: quadrature covariance, means and ħ.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianInstance {
    modes: usize,
    hbar: f64,
    sigma: DMatrix<f64>,
    mu: DVector<f64>,
}

impl GaussianInstance {
    /// Validates symmetry and the uncertainty relation before accepting the
    /// state.
    pub fn new(sigma: DMatrix<f64>, mu: Option<DVector<f64>>, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            bail!(Domain, "hbar must be positive, got {hbar}");
        }
        let n = sigma.nrows();
        if n == 0 || n % 2 != 0 || sigma.ncols() != n {
            bail!(
                Dimension,
                "covariance must be a non-empty 2M×2M matrix, got {}×{}",
                sigma.nrows(),
                sigma.ncols()
            );
        }
        let mu = mu.unwrap_or_else(|| DVector::zeros(n));
        if mu.len() != n {
            bail!(Dimension, "mean vector has length {}, expected {n}", mu.len());
        }
        if sigma.iter().chain(mu.iter()).any(|v| !v.is_finite()) {
            bail!(InvalidState, "non-finite covariance or mean entry");
        }
        let inst = GaussianInstance {
            modes: n / 2,
            hbar,
            sigma,
            mu,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Skips validation. Used for states derived from a validated state by
    /// operations that preserve physicality (marginals).
    pub(crate) fn new_unchecked(sigma: DMatrix<f64>, mu: DVector<f64>, hbar: f64) -> Self {
        GaussianInstance {
            modes: sigma.nrows() / 2,
            hbar,
            sigma,
            mu,
        }
    }

    pub fn vacuum(modes: usize, hbar: f64) -> Result<Self> {
        if modes == 0 {
            bail!(Domain, "mode count must be positive");
        }
        Self::new(DMatrix::identity(2 * modes, 2 * modes) * (hbar / 2.0), None, hbar)
    }

    /// Product state of thermal modes with the given mean photon numbers.
    pub fn thermal(mean_photons: &[f64], hbar: f64) -> Result<Self> {
        if mean_photons.iter().any(|n| !(*n >= 0.0)) {
            bail!(Domain, "mean photon numbers must be nonnegative");
        }
        let m = mean_photons.len();
        let mut sigma = DMatrix::zeros(2 * m, 2 * m);
        for (k, n) in mean_photons.iter().enumerate() {
            let v = hbar / 2.0 * (2.0 * n + 1.0);
            sigma[(k, k)] = v;
            sigma[(k + m, k + m)] = v;
        }
        Self::new(sigma, None, hbar)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn is_displaced(&self) -> bool {
        self.mu.iter().any(|v| *v != 0.0)
    }

    fn validate(&self) -> Result<()> {
        let n = 2 * self.modes;
        let scale = self.sigma.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (self.sigma[(i, j)] - self.sigma[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    bail!(InvalidState, "covariance is not symmetric at ({i}, {j})");
                }
            }
        }
        // σ + i(ħ/2)Ω is Hermitian; its real embedding [[σ, -B], [B, σ]] with
        // B = (ħ/2)Ω is symmetric and has the same spectrum (doubled).
        let m = self.modes;
        let h = self.hbar / 2.0;
        let mut emb = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let s = 0.5 * (self.sigma[(i, j)] + self.sigma[(j, i)]);
                emb[(i, j)] = s;
                emb[(i + n, j + n)] = s;
            }
        }
        for k in 0..m {
            // Ω = [[0, I], [-I, 0]]
            let (xk, pk) = (k, k + m);
            emb[(n + xk, pk)] = h;
            emb[(n + pk, xk)] = -h;
            emb[(xk, n + pk)] = -h;
            emb[(pk, n + xk)] = h;
        }
        let eig = SymmetricEigen::new(emb).eigenvalues;
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -UNCERTAINTY_TOL * scale {
            bail!(
                InvalidState,
                "uncertainty relation violated: smallest eigenvalue {min:e}"
            );
        }
        Ok(())
    }

    /// Reduced state on `subset` (strictly increasing, 0-based mode indices).
    pub fn reduce(&self, subset: &[usize]) -> Result<GaussianInstance> {
        check_subset(subset, self.modes)?;
        if subset.is_empty() {
            bail!(Domain, "reduction to an empty subset");
        }
        let idx = quadrature_indices(subset, self.modes);
        let r = idx.len();
        let sigma = DMatrix::from_fn(r, r, |i, j| self.sigma[(idx[i], idx[j])]);
        let mu = DVector::from_fn(r, |i, _| self.mu[idx[i]]);
        Ok(GaussianInstance::new_unchecked(sigma, mu, self.hbar))
    }

    /// `⟨0_R|ρ_R|0_R⟩` for the reduced state on `subset`; 1 for the empty set.
    ///
    /// Builds the reduced matrix in `scratch` so table construction avoids
    /// per-subset allocations.
    pub(crate) fn subset_vacuum_overlap(
        &self,
        subset: &[usize],
        scratch: &mut OverlapScratch,
    ) -> Result<f64> {
        if subset.is_empty() {
            return Ok(1.0);
        }
        let m = self.modes;
        let r = 2 * subset.len();
        scratch.idx.clear();
        scratch.idx.extend(subset.iter().copied());
        scratch.idx.extend(subset.iter().map(|k| k + m));
        scratch.mat.clear();
        scratch.mat.resize(r * r, 0.0);
        scratch.vec.clear();
        for (a, &i) in scratch.idx.iter().enumerate() {
            for (b, &j) in scratch.idx.iter().enumerate() {
                scratch.mat[a * r + b] = self.sigma[(i, j)];
            }
            scratch.vec.push(self.mu[i]);
        }
        overlap_from_parts(&mut scratch.mat, &mut scratch.vec, r, self.hbar)
    }
}

/// Reusable buffers for [`GaussianInstance::subset_vacuum_overlap`].
#[derive(Default)]
pub(crate) struct OverlapScratch {
    idx: Vec<usize>,
    mat: Vec<f64>,
    vec: Vec<f64>,
}

pub(crate) fn check_subset(subset: &[usize], modes: usize) -> Result<()> {
    for w in subset.windows(2) {
        if w[0] >= w[1] {
            bail!(Domain, "subset indices must be strictly increasing: {subset:?}");
        }
    }
    if let Some(&last) = subset.last() {
        if last >= modes {
            bail!(Domain, "mode index {last} out of range for {modes} modes");
        }
    }
    Ok(())
}

fn quadrature_indices(subset: &[usize], modes: usize) -> Vec<usize> {
    subset
        .iter()
        .copied()
        .chain(subset.iter().map(|k| k + modes))
        .collect()
}

/// Vacuum probability of a Gaussian state with covariance `sigma` and means
/// `mu`: `exp[-½ μᵀ(σ + ħ/2 I)⁻¹ μ] / sqrt(det[(σ + ħ/2 I)/ħ])`.
pub fn vacuum_overlap(sigma: &DMatrix<f64>, mu: &DVector<f64>, hbar: f64) -> Result<f64> {
    let r = sigma.nrows();
    if sigma.ncols() != r || mu.len() != r || r % 2 != 0 {
        bail!(Dimension, "reduced state has inconsistent shapes");
    }
    if r == 0 {
        return Ok(1.0);
    }
    let mut mat: Vec<f64> = (0..r * r).map(|k| sigma[(k / r, k % r)]).collect();
    let mut vec: Vec<f64> = mu.iter().copied().collect();
    overlap_from_parts(&mut mat, &mut vec, r, hbar)
}

fn overlap_from_parts(mat: &mut [f64], vec: &mut [f64], r: usize, hbar: f64) -> Result<f64> {
    // B = (σ + ħ/2 I)/ħ
    for i in 0..r {
        for j in 0..r {
            mat[i * r + j] /= hbar;
        }
        mat[i * r + i] += 0.5;
    }
    if !cholesky_in_place(mat, r) {
        bail!(
            Numerical,
            "σ + (ħ/2)I is not positive definite; the reduced state is unphysical"
        );
    }
    let mut log_det = 0.0;
    for i in 0..r {
        log_det += 2.0 * mat[i * r + i].ln();
    }
    // μᵀ(σ + ħ/2 I)⁻¹μ = |L⁻¹μ|² / ħ
    let quad = if vec.iter().any(|v| *v != 0.0) {
        forward_substitute(mat, r, vec);
        vec.iter().map(|v| v * v).sum::<f64>() / hbar
    } else {
        0.0
    };
    let p = (-0.5 * quad - 0.5 * log_det).exp();
    if p > 1.0 + 1e-9 {
        bail!(Numerical, "vacuum overlap {p} exceeds 1");
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Squeezers and transmission matrix of a lossy interferometer fed with
/// two-mode squeezed vacua.
#[derive(Clone, Debug, PartialEq)]
pub struct JiuzhangSpec {
    /// Squeezing parameters, one per two-mode squeezer.
    pub r: Vec<f64>,
    /// `2k × M` complex transmission matrix (rows: input modes).
    pub t: DMatrix<Complex64>,
}

impl JiuzhangSpec {
    pub fn new(r: Vec<f64>, t: DMatrix<Complex64>) -> Result<Self> {
        if r.is_empty() {
            bail!(Domain, "at least one squeezer is required");
        }
        if r.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            bail!(Domain, "squeezing parameters must be finite and nonnegative");
        }
        if t.nrows() != 2 * r.len() || t.ncols() == 0 {
            bail!(
                Dimension,
                "transmission matrix is {}×{}, expected {}×M",
                t.nrows(),
                t.ncols(),
                2 * r.len()
            );
        }
        let smax = t.clone().singular_values().iter().cloned().fold(0.0, f64::max);
        if smax > 1.0 + 1e-9 {
            bail!(Domain, "transmission matrix is not physical: largest singular value {smax}");
        }
        Ok(JiuzhangSpec { r, t })
    }

    pub fn squeezers(&self) -> usize {
        self.r.len()
    }

    pub fn output_modes(&self) -> usize {
        self.t.ncols()
    }

    pub fn ground_truth(&self, hbar: f64) -> Result<GaussianInstance> {
        let input = build_input_covariance(&self.r, hbar)?;
        let v = embed_transmission(&self.t)?;
        ground_truth_covariance(&input, &v)
    }
}

/// Covariance of `k` two-mode squeezed vacua on `2k` modes. Pair `j`
/// occupies modes `2j` and `2j+1`.
///
/// Squeezing `r` enters as `cosh(2r)`, `sinh(2r)`, so that a lossless pair
/// has vacuum probability `1/cosh²(r)`.
pub fn build_input_covariance(r: &[f64], hbar: f64) -> Result<GaussianInstance> {
    if r.is_empty() {
        bail!(Domain, "at least one squeezer is required");
    }
    if let Some(bad) = r.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        bail!(Domain, "squeezing parameter {bad} must be finite and nonnegative");
    }
    let m = 2 * r.len();
    let h = hbar / 2.0;
    let mut sigma = DMatrix::zeros(2 * m, 2 * m);
    for (j, &rj) in r.iter().enumerate() {
        let (c, s) = ((2.0 * rj).cosh(), (2.0 * rj).sinh());
        let (a, b) = (2 * j, 2 * j + 1);
        sigma[(a, a)] = h * c;
        sigma[(b, b)] = h * c;
        sigma[(a, b)] = h * s;
        sigma[(b, a)] = h * s;
        sigma[(a + m, a + m)] = h * c;
        sigma[(b + m, b + m)] = h * c;
        sigma[(a + m, b + m)] = -h * s;
        sigma[(b + m, a + m)] = -h * s;
    }
    GaussianInstance::new(sigma, None, hbar)
}

/// Real `2M × 4k` representation of the linear map `a_out = Tᵀ a_in` in
/// `xxpp` ordering: `[[Re Tᵀ, -Im Tᵀ], [Im Tᵀ, Re Tᵀ]]`.
pub fn embed_transmission(t: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    let (inputs, outputs) = t.shape();
    if inputs == 0 || outputs == 0 {
        bail!(Dimension, "empty transmission matrix");
    }
    let mut v = DMatrix::zeros(2 * outputs, 2 * inputs);
    for o in 0..outputs {
        for i in 0..inputs {
            let z = t[(i, o)];
            v[(o, i)] = z.re;
            v[(o, i + inputs)] = -z.im;
            v[(o + outputs, i)] = z.im;
            v[(o + outputs, i + inputs)] = z.re;
        }
    }
    Ok(v)
}

/// `σ_out = V σ Vᵀ + (ħ/2)(I − V Vᵀ)`, `μ_out = V μ`.
pub fn ground_truth_covariance(
    input: &GaussianInstance,
    v: &DMatrix<f64>,
) -> Result<GaussianInstance> {
    if v.ncols() != 2 * input.modes() || v.nrows() % 2 != 0 || v.nrows() == 0 {
        bail!(
            Dimension,
            "V is {}×{} but the input has {} modes",
            v.nrows(),
            v.ncols(),
            input.modes()
        );
    }
    let n = v.nrows();
    let vvt = v * v.transpose();
    let sigma =
        v * input.sigma() * v.transpose() + (DMatrix::identity(n, n) - vvt) * (input.hbar() / 2.0);
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let mu = v * input.mu();
    GaussianInstance::new(sigma, Some(mu), input.hbar()).map_err(|e| match e {
        GbsError::InvalidState(msg) => {
            GbsError::InvalidState(format!("output state is unphysical: {msg}"))
        }
        other => other,
    })
}
