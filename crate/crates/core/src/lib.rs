//! Cumulant-truncation emulator for Gaussian boson sampling (GBS) with
//! threshold detectors.
//!
//! The crate is organised as a pipeline:
//!
//! - [`gaussian`]: Gaussian ground truths (covariance matrices, lossy
//!   interferometers), Torontonian-based exact click probabilities and the
//!   brute-force distribution used as an oracle at small mode counts.
//! - [`subsets`] and [`partitions`]: the combinatorial plumbing, i.e. dense
//!   colexicographic indexing of mode subsets and set-partition patterns.
//! - [`cumulants`]: correlator tables `c(S)` computed from vacuum overlaps of
//!   reduced states, and their conversion to cumulant tables `κ(S)`.
//! - [`sampler`]: chain-rule samplers driven by a truncated cumulant
//!   expansion, with dynamic-programming tables of approximated marginals
//!   (single- and double-elision variants) plus an exact reference sampler.
//! - [`benchmark`]: validation statistics (click cumulants, Pearson and
//!   Spearman coefficients, XEB, total-click distribution, TVD, bootstrap).
//! - [`cli`]: the orchestration layer behind the `gbs` binary.
//!
//! Mode indices are 0-based throughout the API; bitstrings are `u8` slices
//! holding 0 or 1.

pub mod benchmark;
pub mod cli;
pub mod cumulants;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod partitions;
pub mod sampler;
pub mod subsets;

pub use error::{GbsError, Result};
pub use gaussian::{GaussianInstance, JiuzhangSpec};

/// Default value of ħ used by every constructor that does not take one.
pub const DEFAULT_HBAR: f64 = 2.0;
