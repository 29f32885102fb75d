use super::{GaussianInstance, JiuzhangSpec};
use crate::error::{bail, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Haar-random `m×m` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::from_fn(m, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random lossy instance: `k` two-mode squeezers with `r_j ~ U[0, r_max]`
/// feeding the first `2k` rows of a Haar unitary, attenuated by `sqrt(eta)`.
/// Deterministic for a fixed seed.
pub fn random_instance(
    modes: usize,
    squeezers: usize,
    eta: f64,
    r_max: f64,
    seed: u64,
    hbar: f64,
) -> Result<(GaussianInstance, JiuzhangSpec)> {
    if squeezers == 0 || 2 * squeezers > modes {
        bail!(Domain, "need 1 ≤ k and 2k ≤ M, got k={squeezers}, M={modes}");
    }
    if !(eta > 0.0 && eta <= 1.0) {
        bail!(Domain, "transmission eta must lie in (0, 1], got {eta}");
    }
    if !(r_max >= 0.0) || !r_max.is_finite() {
        bail!(Domain, "r_max must be finite and nonnegative, got {r_max}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = haar_unitary(modes, &mut rng);
    let r: Vec<f64> = (0..squeezers).map(|_| rng.random::<f64>() * r_max).collect();
    let scale = Complex64::new(eta.sqrt(), 0.0);
    let t = u.rows(0, 2 * squeezers).into_owned() * scale;
    let spec = JiuzhangSpec::new(r, t)?;
    let inst = spec.ground_truth(hbar)?;
    Ok((inst, spec))
}
