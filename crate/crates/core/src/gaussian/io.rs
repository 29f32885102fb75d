use super::{GaussianInstance, JiuzhangSpec};
use crate::error::{bail, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk instance: either an explicit covariance or squeezers plus a
/// transmission matrix. Unknown keys are rejected, so a file mixing both
/// forms fails to parse.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum InstanceFile {
    Covariance(CovarianceForm),
    Jiuzhang(JiuzhangForm),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CovarianceForm {
    pub hbar: f64,
    #[serde(rename = "M")]
    pub modes: usize,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JiuzhangForm {
    pub hbar: f64,
    #[serde(rename = "M")]
    pub modes: usize,
    pub r: Vec<f64>,
    #[serde(rename = "T_re")]
    pub t_re: Vec<Vec<f64>>,
    #[serde(rename = "T_im")]
    pub t_im: Vec<Vec<f64>>,
}

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        bail!(Dimension, "{what} must be {nrows}×{ncols}");
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl InstanceFile {
    /// Builds the ground truth, returning the squeezer description too when
    /// the file uses that form.
    pub fn into_instance(self) -> Result<(GaussianInstance, Option<JiuzhangSpec>)> {
        match self {
            InstanceFile::Covariance(c) => {
                let n = 2 * c.modes;
                let sigma = matrix_from_rows(&c.sigma, n, n, "sigma")?;
                let mu = match c.mu {
                    Some(v) if v.len() != n => bail!(Dimension, "mu must have length {n}"),
                    Some(v) => Some(DVector::from_vec(v)),
                    None => None,
                };
                Ok((GaussianInstance::new(sigma, mu, c.hbar)?, None))
            }
            InstanceFile::Jiuzhang(j) => {
                let k2 = 2 * j.r.len();
                let re = matrix_from_rows(&j.t_re, k2, j.modes, "T_re")?;
                let im = matrix_from_rows(&j.t_im, k2, j.modes, "T_im")?;
                let t = DMatrix::from_fn(k2, j.modes, |a, b| Complex64::new(re[(a, b)], im[(a, b)]));
                let spec = JiuzhangSpec::new(j.r, t)?;
                let inst = spec.ground_truth(j.hbar)?;
                Ok((inst, Some(spec)))
            }
        }
    }

    pub fn from_covariance(inst: &GaussianInstance) -> Self {
        InstanceFile::Covariance(CovarianceForm {
            hbar: inst.hbar(),
            modes: inst.modes(),
            sigma: rows_of(inst.sigma()),
            mu: inst.is_displaced().then(|| inst.mu().iter().copied().collect()),
        })
    }

    pub fn from_jiuzhang(spec: &JiuzhangSpec, hbar: f64) -> Self {
        InstanceFile::Jiuzhang(JiuzhangForm {
            hbar,
            modes: spec.output_modes(),
            r: spec.r.clone(),
            t_re: rows_of(&spec.t.map(|z| z.re)),
            t_im: rows_of(&spec.t.map(|z| z.im)),
        })
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<(GaussianInstance, Option<JiuzhangSpec>)> {
    let text = std::fs::read_to_string(path)?;
    let file: InstanceFile = serde_json::from_str(&text)?;
    file.into_instance()
}

fn write_json(path: &Path, file: &InstanceFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn save_covariance_json(path: impl AsRef<Path>, inst: &GaussianInstance) -> Result<()> {
    write_json(path.as_ref(), &InstanceFile::from_covariance(inst))
}

pub fn save_jiuzhang_json(path: impl AsRef<Path>, spec: &JiuzhangSpec, hbar: f64) -> Result<()> {
    write_json(path.as_ref(), &InstanceFile::from_jiuzhang(spec, hbar))
}
