//! Chain-rule samplers.
//!
//! Bits are drawn mode by mode from `p(x_n | x_{n−1}, …, x_1)`, where the
//! joint marginals come from a cumulant expansion truncated at order `K`
//! and evaluated against per-sample tables of approximated marginals.
//! [`Method::SingleElision`] keeps marginals with one summed-out bit,
//! [`Method::DoubleElision`] also keeps those with two.
//! [`Method::ExactReference`] draws from the brute-force distribution.

mod batch;
mod chain;
mod engine;
pub mod exact;
mod io;

pub use batch::{batch_sample, sample_rng, SampleBatch, SampleTiming, Sampler};
pub use chain::{ChainSampler, MarginalTables};
pub use exact::{ExactMarginals, ExactSampler};
pub use io::{read_samples, write_samples_binary, write_samples_text, SampleHeader, Samples};

use crate::error::{bail, GbsError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SingleElision,
    DoubleElision,
    ExactReference,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::SingleElision => "single_elision",
            Method::DoubleElision => "double_elision",
            Method::ExactReference => "exact_reference",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = GbsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "single_elision" | "single" => Ok(Method::SingleElision),
            "double_elision" | "double" => Ok(Method::DoubleElision),
            "exact_reference" | "exact" => Ok(Method::ExactReference),
            _ => bail!(Domain, "unknown method {s:?}"),
        }
    }
}

/// Expansion orders of the sampling step and of the three auxiliary
/// recursions, plus how many elided bits are looked up directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionOrders {
    pub step: usize,
    pub plus: usize,
    pub p1: usize,
    pub p2: usize,
    pub depth: usize,
}

impl ExpansionOrders {
    /// Step order `K`, auxiliaries at order 2.
    pub fn single_elision(k: usize) -> Self {
        ExpansionOrders {
            step: k,
            plus: 2.min(k),
            p1: 2.min(k),
            p2: 0,
            depth: 1,
        }
    }

    /// Step order `K`, auxiliaries at (3, 3, 2) capped by `K`.
    pub fn double_elision(k: usize) -> Self {
        ExpansionOrders {
            step: k,
            plus: 3.min(k),
            p1: 3.min(k),
            p2: 2.min(k),
            depth: 2,
        }
    }

    /// Every recursion at order `m`, which is exact for the step and the
    /// elision tables when `M ≤ 5`.
    pub fn full(m: usize) -> Self {
        ExpansionOrders {
            step: m,
            plus: m,
            p1: m,
            p2: m,
            depth: 2,
        }
    }

    pub(crate) fn validate(&self, table_order: usize) -> Result<()> {
        if !(1..=2).contains(&self.depth) {
            bail!(Domain, "elision depth must be 1 or 2, got {}", self.depth);
        }
        let mut used = vec![("step", self.step), ("p_plus", self.plus), ("p1", self.p1)];
        if self.depth == 2 {
            used.push(("p2", self.p2));
        }
        for (name, o) in used {
            if o == 0 || o > table_order {
                bail!(Domain, "{name} order {o} outside 1..={table_order}");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Truncation order, one of 3, 4, 5.
    pub order: usize,
    pub method: Method,
    /// Orders for `(p⁺, p⁽¹⁾, p⁽²⁾)`; method defaults when `None`.
    pub aux_orders: Option<(usize, usize, usize)>,
    pub seed: u64,
    pub samples: usize,
    pub workers: usize,
    /// Conditionals are clamped into `[ε, 1 − ε]`.
    pub clamp_epsilon: f64,
}

impl SamplerConfig {
    pub fn new(method: Method, order: usize, samples: usize, seed: u64) -> Self {
        SamplerConfig {
            order,
            method,
            aux_orders: None,
            seed,
            samples,
            workers: 1,
            clamp_epsilon: 0.0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=5).contains(&self.order) {
            bail!(Domain, "truncation order must be 3, 4 or 5, got {}", self.order);
        }
        if self.workers == 0 {
            bail!(Domain, "workers must be positive");
        }
        if !(0.0..0.5).contains(&self.clamp_epsilon) {
            bail!(Domain, "clamp epsilon must lie in [0, 0.5)");
        }
        if let Some(o) = self.expansion_orders() {
            o.validate(self.order)?;
        }
        Ok(())
    }

    /// Expansion orders of the chain methods; `None` for the exact sampler.
    pub fn expansion_orders(&self) -> Option<ExpansionOrders> {
        let mut o = match self.method {
            Method::SingleElision => ExpansionOrders::single_elision(self.order),
            Method::DoubleElision => ExpansionOrders::double_elision(self.order),
            Method::ExactReference => return None,
        };
        if let Some((plus, p1, p2)) = self.aux_orders {
            o.plus = plus;
            o.p1 = p1;
            if o.depth == 2 {
                o.p2 = p2;
            }
        }
        Some(o)
    }
}

/// Diagnostics of one drawn sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleStatus {
    /// Steps at which the prefix marginal had vanished and the first-order
    /// conditional was used instead.
    pub fallback_steps: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [Method::SingleElision, Method::DoubleElision, Method::ExactReference] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("triple".parse::<Method>().is_err());
    }

    #[test]
    fn default_orders() {
        let c = SamplerConfig::new(Method::DoubleElision, 5, 10, 0);
        let o = c.expansion_orders().unwrap();
        assert_eq!((o.step, o.plus, o.p1, o.p2, o.depth), (5, 3, 3, 2, 2));
        let c = SamplerConfig::new(Method::SingleElision, 3, 10, 0);
        let o = c.expansion_orders().unwrap();
        assert_eq!((o.step, o.plus, o.p1, o.depth), (3, 2, 2, 1));
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new(Method::DoubleElision, 6, 1, 0).validate().is_err());
        assert!(SamplerConfig::new(Method::DoubleElision, 2, 1, 0).validate().is_err());
        let mut c = SamplerConfig::new(Method::DoubleElision, 3, 1, 0);
        c.aux_orders = Some((4, 3, 2));
        assert!(c.validate().is_err());
        c.aux_orders = Some((2, 2, 1));
        assert!(c.validate().is_ok());
        assert!(SamplerConfig::new(Method::SingleElision, 3, 1, 0).with_workers(0).validate().is_err());
    }
}
