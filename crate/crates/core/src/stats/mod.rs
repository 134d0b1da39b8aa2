//! Statistical tests for crowd quality control, system significance and
//! metric meta-evaluation.

mod correlation;
mod meta;
mod rank;
mod significance;
pub mod special;

pub use correlation::{pearson, williams};
pub use meta::{
    inter_system_sts, metric_meta_eval, replication_report, InterSystemReport, MetaEvalReport, MetricCorrelation,
    Replication, ScatterPoint, WilliamsComparison,
};
pub use rank::{ranksum, ranksum_with, signed_rank, signed_rank_with, RANKSUM_EXACT_MAX, SIGNED_RANK_EXACT_MAX};
pub use significance::{significance_matrix, SignificanceMatrix};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("all paired differences are zero")]
    Degenerate,
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    InsufficientSample { needed: usize, got: usize },
    #[error("zero variance: correlation undefined")]
    ZeroVariance,
    #[error("invalid correlation input: {0}")]
    InvalidCorrelation(String),
    #[error("system sets differ: only in first {only_first:?}, only in second {only_second:?}")]
    SystemMismatch {
        only_first: Vec<String>,
        only_second: Vec<String>,
    },
    #[error("{0}")]
    Metric(#[from] crate::metrics::MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    NormalApprox,
    /// Student t reference distribution.
    TDist,
}

/// Forces a code path in the rank tests; `Auto` applies the exactness bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Exact,
    NormalApprox,
}

/// Outcome of a significance test.
///
/// `p_greater` is the one-sided p-value for the alternative that the first
/// argument is larger (first sample stochastically greater, first member of
/// each pair larger, or first correlation larger); `p_less` is the opposite
/// tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_greater: f64,
    pub p_less: f64,
    pub p_two_sided: f64,
    pub method: Method,
    pub n: usize,
}
