//! Small dense kernels used in the hot loops (Torontonian terms, vacuum
//! overlaps). Matrices are row-major scratch slices so callers can reuse
//! buffers across the many small determinants they evaluate.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Determinant stored as `exp(log_abs) * exp(i * arg)`, `arg` in `(-π, π]`.
///
/// Products of pivots are accumulated in this form so that a determinant
/// of a 40×40 matrix with tiny or huge pivots does not overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub arg: f64,
}

impl LogDet {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.log_abs.exp(), self.arg)
    }

    /// `1 / sqrt(det)` on the principal branch of the square root.
    pub fn inv_sqrt(&self) -> Complex64 {
        Complex64::from_polar((-0.5 * self.log_abs).exp(), -0.5 * self.arg)
    }

    /// Whether the determinant lies in the open right half plane.
    pub fn has_positive_real_part(&self) -> bool {
        self.arg.abs() < 0.5 * PI
    }
}

fn wrap_angle(mut a: f64) -> f64 {
    a %= 2.0 * PI;
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Log-determinant of the `n×n` row-major matrix in `a` by LU with partial
/// pivoting. `a` is overwritten. Returns `None` for an exactly singular
/// matrix. The empty matrix has determinant 1.
pub fn complex_log_det(a: &mut [Complex64], n: usize) -> Option<LogDet> {
    debug_assert_eq!(a.len(), n * n);
    let mut log_abs = 0.0;
    let mut arg = 0.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = a[row * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            arg += PI;
        }
        let p = a[col * n + col];
        log_abs += p.norm().ln();
        arg += p.arg();
        let inv = p.inv();
        for row in col + 1..n {
            let f = a[row * n + col] * inv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in col + 1..n {
                let upd = f * a[col * n + j];
                a[row * n + j] -= upd;
            }
        }
    }
    Some(LogDet {
        log_abs,
        arg: wrap_angle(arg),
    })
}

/// In-place Cholesky factorisation of a symmetric positive-definite
/// row-major `n×n` matrix; the lower triangle receives `L`. Returns `false`
/// if a non-positive pivot is met.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

/// Solves `L y = b` in place for the lower-triangular factor produced by
/// [`cholesky_in_place`].
pub fn forward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}
