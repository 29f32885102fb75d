use super::estimate::{bootstrap_vec, click_cumulant_values, subsample_order, theoretical_click_cumulants, EstimatorMode, PatternCounts};
use super::stats::{linear_fit, pearson, spearman, tvd};
use super::xeb::{empirical_distribution, total_click_histogram, total_clicks_of_distribution, xeb, XebPoint};
use crate::cumulants::CumulantTable;
use crate::error::{bail, Result};
use crate::gaussian::BRUTE_FORCE_MAX_MODES;
use crate::sampler::Samples;
use crate::subsets::SubsetIndex;
use serde::Serialize;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

pub const DEFAULT_BOOTSTRAP: usize = 100;

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkOptions {
    pub orders: RangeInclusive<usize>,
    pub xeb_range: Option<RangeInclusive<usize>>,
    /// Bootstrap resamples for the cumulant error bars; 0 disables them.
    pub bootstrap: usize,
    pub seed: u64,
    pub estimator: EstimatorMode,
    /// Fraction of order-5 subsets kept in the scatter.
    pub order5_fraction: f64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            orders: 2..=5,
            xeb_range: None,
            bootstrap: DEFAULT_BOOTSTRAP,
            seed: 0,
            estimator: EstimatorMode::Plugin,
            order5_fraction: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderSummary {
    pub order: usize,
    pub subsets: usize,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    pub label: String,
    pub n_samples: usize,
    pub orders: Vec<OrderSummary>,
    pub xeb: Vec<XebPoint>,
    pub tvd: Option<f64>,
    #[serde(skip)]
    pub estimates: Vec<f64>,
    #[serde(skip)]
    pub standard_errors: Vec<f64>,
    #[serde(skip)]
    pub clicks: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkReport {
    pub modes: usize,
    pub options: BenchmarkOptions,
    pub log_base: &'static str,
    pub samples: Vec<SampleReport>,
    #[serde(skip)]
    pub subsets: Vec<Vec<usize>>,
    #[serde(skip)]
    pub theory: Vec<f64>,
    #[serde(skip)]
    pub clicks_exact: Option<Vec<f64>>,
    pub notices: Vec<String>,
}

fn summarize(order: usize, theory: &[f64], est: &[f64]) -> OrderSummary {
    OrderSummary {
        order,
        subsets: theory.len(),
        pearson: pearson(theory, est).ok(),
        spearman: spearman(theory, est).ok(),
        slope: linear_fit(theory, est).ok().map(|f| f.0),
        intercept: linear_fit(theory, est).ok().map(|f| f.1),
    }
}

/// Compares every sample set with the theoretical click cumulants from
/// `kappa` and, when `exact` holds the full distribution, with XEB, the
/// total-click distribution and the TVD.
pub fn run_benchmark(
    inputs: &[(String, Samples)],
    kappa: &CumulantTable,
    exact: Option<&[f64]>,
    opts: &BenchmarkOptions,
) -> Result<BenchmarkReport> {
    if inputs.is_empty() {
        bail!(Domain, "no sample sets to benchmark");
    }
    let m = kappa.modes();
    let (lo, hi) = (*opts.orders.start(), *opts.orders.end());
    if lo == 0 || lo > hi || hi > kappa.max_order() {
        bail!(Domain, "orders {lo}..{hi} not covered by the cumulant table (K={})", kappa.max_order());
    }
    for (label, s) in inputs {
        if s.is_empty() {
            bail!(Domain, "sample set {label} is empty");
        }
        if s.modes() != m {
            bail!(Dimension, "sample set {label} has {} modes, instance has {m}", s.modes());
        }
    }
    let index = SubsetIndex::new(m, hi)?;
    let mut selected: Vec<usize> = Vec::new();
    for d in lo..=hi {
        if d == 5 && opts.order5_fraction < 1.0 {
            selected.extend(subsample_order(&index, 5, opts.order5_fraction, opts.seed)?);
        } else {
            selected.extend(index.order_range(d));
        }
    }
    let theory_all = theoretical_click_cumulants(kappa, &index)?;
    let theory: Vec<f64> = selected.iter().map(|&r| theory_all[r]).collect();
    let subsets: Vec<Vec<usize>> = selected.iter().map(|&r| index.unrank(r)).collect::<Result<_>>()?;

    let mut notices = Vec::new();
    let exact = match exact {
        Some(d) if d.len() == 1 << m => Some(d),
        Some(_) => bail!(Dimension, "exact distribution does not match {m} modes"),
        None => {
            notices.push(format!(
                "no exact distribution (M={m} > {BRUTE_FORCE_MAX_MODES} or not supplied): XEB, TVD and exact click distribution skipped"
            ));
            None
        }
    };

    let mut reports = Vec::new();
    for (label, s) in inputs {
        let counts = PatternCounts::from_samples(s);
        let all = click_cumulant_values(&counts, &index, opts.estimator)?;
        let estimates: Vec<f64> = selected.iter().map(|&r| all[r]).collect();
        let standard_errors = if opts.bootstrap >= 2 {
            let (_, se) = bootstrap_vec(&counts, opts.bootstrap, opts.seed, |c| {
                let v = click_cumulant_values(c, &index, opts.estimator)?;
                Ok(selected.iter().map(|&r| v[r]).collect())
            })?;
            se
        } else {
            vec![f64::NAN; selected.len()]
        };
        let orders = (lo..=hi)
            .map(|d| {
                let pick: Vec<usize> = (0..selected.len()).filter(|&i| subsets[i].len() == d).collect();
                let t: Vec<f64> = pick.iter().map(|&i| theory[i]).collect();
                let e: Vec<f64> = pick.iter().map(|&i| estimates[i]).collect();
                summarize(d, &t, &e)
            })
            .collect();
        let (xeb_points, tvd_value) = match exact {
            Some(dist) => {
                let range = opts.xeb_range.clone().unwrap_or(0..=m);
                let pts = xeb(s, dist, *range.start()..=(*range.end()).min(m))?;
                (pts, Some(tvd(&empirical_distribution(s)?, dist)?))
            }
            None => (Vec::new(), None),
        };
        reports.push(SampleReport {
            label: label.clone(),
            n_samples: s.len(),
            orders,
            xeb: xeb_points,
            tvd: tvd_value,
            estimates,
            standard_errors,
            clicks: total_click_histogram(s)?,
        });
    }
    Ok(BenchmarkReport {
        modes: m,
        options: opts.clone(),
        log_base: "e",
        samples: reports,
        subsets,
        theory,
        clicks_exact: exact.map(|d| total_clicks_of_distribution(d, m)),
        notices,
    })
}

fn suffix(report: &BenchmarkReport, base: &str, label: &str) -> String {
    if report.samples.len() == 1 {
        base.to_string()
    } else {
        format!("{base}_{label}")
    }
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

pub fn cumulants_csv(r: &BenchmarkReport) -> String {
    let mut out = String::from("subset,order,theory");
    for s in &r.samples {
        let _ = write!(out, ",{},{}", suffix(r, "estimate", &s.label), suffix(r, "se", &s.label));
    }
    out.push('\n');
    for (i, sub) in r.subsets.iter().enumerate() {
        let name: Vec<String> = sub.iter().map(|k| k.to_string()).collect();
        let _ = write!(out, "{},{},{}", name.join("-"), sub.len(), fmt(r.theory[i]));
        for s in &r.samples {
            let _ = write!(out, ",{},{}", fmt(s.estimates[i]), fmt(s.standard_errors[i]));
        }
        out.push('\n');
    }
    out
}

pub fn xeb_csv(r: &BenchmarkReport) -> String {
    let mut out = String::from("C");
    for s in &r.samples {
        for base in ["xeb", "se", "n"] {
            let _ = write!(out, ",{}", suffix(r, base, &s.label));
        }
    }
    out.push('\n');
    let mut cs: Vec<usize> = r.samples.iter().flat_map(|s| s.xeb.iter().map(|p| p.clicks)).collect();
    cs.sort_unstable();
    cs.dedup();
    for c in cs {
        let _ = write!(out, "{c}");
        for s in &r.samples {
            match s.xeb.iter().find(|p| p.clicks == c) {
                Some(p) => {
                    let _ = write!(out, ",{},{},{}", fmt(p.xeb), fmt(p.se), p.n);
                }
                None => out.push_str(",,,0"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn clicks_csv(r: &BenchmarkReport) -> String {
    let mut out = String::from("C");
    for s in &r.samples {
        let _ = write!(out, ",{}", suffix(r, "p_emp", &s.label));
    }
    out.push_str(",p_exact\n");
    for c in 0..=r.modes {
        let _ = write!(out, "{c}");
        for s in &r.samples {
            let _ = write!(out, ",{}", fmt(s.clicks[c]));
        }
        match &r.clicks_exact {
            Some(e) => {
                let _ = writeln!(out, ",{}", fmt(e[c]));
            }
            None => out.push_str(",\n"),
        }
    }
    out
}

/// Writes `cumulants_scatter.csv`, `xeb.csv`, `clicks.csv` and
/// `summary.json` into `dir` and returns their paths.
pub fn write_report(r: &BenchmarkReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        paths.push(p);
        Ok(())
    };
    put("cumulants_scatter.csv", cumulants_csv(r))?;
    put("xeb.csv", xeb_csv(r))?;
    put("clicks.csv", clicks_csv(r))?;
    put("summary.json", serde_json::to_string_pretty(r)? + "\n")?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulants::{correlator_table, cumulants_from_correlators, MemoryBudget};
    use crate::gaussian::{brute_force_distribution, random_instance};
    use crate::sampler::{sample_rng, ExactSampler};

    fn setup(n: usize) -> (CumulantTable, Vec<f64>, Samples) {
        let (inst, _) = random_instance(5, 2, 0.8, 1.0, 4, 2.0).unwrap();
        let kappa = cumulants_from_correlators(&correlator_table(&inst, 3, 1, MemoryBudget::default()).unwrap()).unwrap();
        let dist = brute_force_distribution(&inst).unwrap();
        let s = ExactSampler::from_distribution(&dist, 5).unwrap();
        let mut rng = sample_rng(3, 0);
        let mut bits = vec![0u8; 5 * n];
        for row in bits.chunks_exact_mut(5) {
            s.sample(&mut rng, row);
        }
        (kappa, dist, Samples::new(5, bits).unwrap())
    }

    #[test]
    fn two_files_side_by_side() {
        let (kappa, dist, s) = setup(2000);
        let opts = BenchmarkOptions {
            orders: 2..=3,
            bootstrap: 5,
            ..Default::default()
        };
        let inputs = vec![("a".to_string(), s.clone()), ("b".to_string(), s)];
        let r = run_benchmark(&inputs, &kappa, Some(&dist), &opts).unwrap();
        let csv = cumulants_csv(&r);
        assert!(csv.starts_with("subset,order,theory,estimate_a,se_a,estimate_b,se_b\n"));
        assert_eq!(csv.lines().count(), 1 + 10 + 10);
        assert!(xeb_csv(&r).starts_with("C,xeb_a,se_a,n_a,xeb_b,se_b,n_b\n"));
        assert!(clicks_csv(&r).starts_with("C,p_emp_a,p_emp_b,p_exact\n"));
        let dir = tempfile::tempdir().unwrap();
        let paths = write_report(&r, dir.path()).unwrap();
        assert_eq!(paths.len(), 4);
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["log_base"], "e");
    }

    #[test]
    fn exact_samples_correlate_with_theory() {
        let (kappa, dist, s) = setup(200_000);
        let opts = BenchmarkOptions {
            orders: 2..=2,
            bootstrap: 0,
            ..Default::default()
        };
        let r = run_benchmark(&[("x".into(), s)], &kappa, Some(&dist), &opts).unwrap();
        assert!(r.samples[0].orders[0].pearson.unwrap() > 0.99);
        assert!(r.samples[0].tvd.unwrap() < 0.05);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let (kappa, _, s) = setup(10);
        let opts = BenchmarkOptions::default();
        assert!(run_benchmark(&[], &kappa, None, &opts).is_err());
        let empty = Samples::new(5, vec![]).unwrap();
        let o = BenchmarkOptions {
            orders: 2..=3,
            ..Default::default()
        };
        assert!(run_benchmark(&[("e".into(), empty)], &kappa, None, &o).is_err());
        assert!(run_benchmark(&[("s".into(), s)], &kappa, None, &opts).is_err());
    }
}
