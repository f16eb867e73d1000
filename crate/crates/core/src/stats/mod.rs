//! Statistical kernel: order-statistics quantiles, the two-sample
//! Kolmogorov-Smirnov test, rank and linear correlation, and the
//! translator-identification experiment built on top of them.

mod corr;
mod identify;
mod ks;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corr::{pearson_correlation, rank_correlation, ranks, RankFlavor, EXACT_PERMUTATION_MAX_N};
pub use identify::{
    auto_pairing_plan, identification_experiment, parse_pairing_plan, ComparisonClass, Decision,
    ClassTally, DecisionRule, IdentificationConfig, IdentificationReport, PairOutcome, PairSpec, SampleFilter,
};
pub use ks::{ks2_statistic, ks2_test, ks2_test_with, kolmogorov_survival, KsOptions, DEFAULT_EXACT_LIMIT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains NaN")]
    NotANumber,
    #[error("quantile probe {0} outside [0, 1]")]
    BadProbe(f64),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} paired observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("constant series; correlation is undefined")]
    ConstantSeries,
    #[error("pairing plan line {line}: {message}")]
    BadPlan { line: usize, message: String },
    #[error("pair references unknown session `{0}`")]
    MissingSession(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Asymptotic,
}

/// Outcome of a hypothesis test or correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// KS `D`, or the correlation coefficient.
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
    pub method: Method,
    /// Sample-size switch between exact and asymptotic p-values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_limit: Option<usize>,
}

fn check_finite(sample: &[f64]) -> Result<(), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(StatsError::NotANumber);
    }
    Ok(())
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Quantile of pre-sorted data, linear interpolation between order
/// statistics (`h = (n - 1) p`).
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

pub fn quantiles(sample: &[f64], probes: &[f64]) -> Result<Vec<f64>, StatsError> {
    check_finite(sample)?;
    if let Some(&bad) = probes.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::BadProbe(bad));
    }
    let s = sorted(sample);
    Ok(probes.iter().map(|&p| quantile_sorted(&s, p)).collect())
}

/// Order-statistics median; mean of the two central values for even `n`.
pub fn median(sample: &[f64]) -> Result<f64, StatsError> {
    check_finite(sample)?;
    let s = sorted(sample);
    let n = s.len();
    Ok(if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 })
}

/// Median of integer milliseconds. Exact: the result is a whole or half
/// millisecond.
pub fn median_ms(sample: &[u64]) -> Option<f64> {
    if sample.is_empty() {
        return None;
    }
    let mut s = sample.to_vec();
    let n = s.len();
    let mid = n / 2;
    let (_, upper, _) = s.select_nth_unstable(mid);
    let upper = *upper;
    if n % 2 == 1 {
        Some(upper as f64)
    } else {
        let lower = *s[..mid].iter().max().expect("non-empty lower half");
        Some((lower as f64 + upper as f64) / 2.0)
    }
}

pub fn mean(sample: &[f64]) -> Result<f64, StatsError> {
    check_finite(sample)?;
    Ok(sample.iter().sum::<f64>() / sample.len() as f64)
}
