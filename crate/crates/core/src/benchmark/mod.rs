//! Validation statistics for sample sets: click-cumulant estimates against
//! theory, Pearson and Spearman coefficients with linear fits, XEB by total
//! click number, total-click distributions, TVD and bootstrap errors.

mod estimate;
mod report;
mod stats;
mod xeb;

pub use estimate::{
    bootstrap, bootstrap_vec, click_cumulant_values, estimate_click_cumulants, estimate_correlator, subsample_order,
    theoretical_click_cumulants, CumulantEstimate, EstimatorMode, PatternCounts,
};
pub use report::{
    clicks_csv, cumulants_csv, run_benchmark, write_report, xeb_csv, BenchmarkOptions, BenchmarkReport, OrderSummary,
    SampleReport, DEFAULT_BOOTSTRAP,
};
pub use stats::{average_ranks, linear_fit, mean_std, pearson, spearman, tvd};
pub use xeb::{
    empirical_distribution, exact_total_clicks, expected_xeb, product_of_marginals, total_click_histogram,
    total_clicks_of_distribution, uniform_weight_samples, xeb, xeb_for_clicks, XebPoint,
};
