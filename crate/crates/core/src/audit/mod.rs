//! Pointwise recourse, baseline auditors, audit metrics, coverage curves and
//! the brute-force oracle.

mod baseline;
mod coverage;
mod dataset;
pub mod eval;
mod metrics;
mod oracle;
mod point;

use crate::lp::LpError;
use crate::rep::RepError;
use crate::verifier::VerifyError;

pub use baseline::{
    run_baseline, sample_region_points, score_extremes, BaselineMethod, BaselineOptions, BaselineOutput,
    BaselineVerdict, DEFAULT_REGION_SAMPLES, SAMPLE_RETRY_CAP,
};
pub use coverage::{coverage_lower_bound, CountMethod, Coverage, MONTE_CARLO_SAMPLES};
pub use dataset::{read_dataset, Dataset};
pub use metrics::{compute_metrics, AuditMetrics, Rates, RegionAudit, RegionFlags};
pub use oracle::{brute_force_oracle, brute_force_recourse, BoxSearch, OracleCaps, OracleResult};
pub use point::{point_has_recourse, PointVerdict};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error("point {0:?} is outside the region")]
    PointOutsideRegion(Vec<i64>),
    #[error("recourse witness failed the direct model check")]
    WitnessRejected,
    #[error("the data method needs a dataset")]
    MissingDataset,
    #[error("unknown method '{0}' (expected data, region, score or rever)")]
    UnknownMethod(String),
    #[error("no feasible point found after {retries} draws; the region is too sparse to sample")]
    SamplingDensity { retries: usize },
    #[error("region '{0}' has no exact ground truth")]
    MissingGroundTruth(String),
    #[error("metrics mix methods {0} and {1}")]
    MixedMethods(String, String),
    #[error("boxes {0} and {1} overlap")]
    OverlappingBoxes(usize, usize),
    #[error("oracle cap exceeded: {size} {what} (cap {cap})")]
    OracleCap { what: &'static str, size: u128, cap: u128 },
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Rep(#[from] RepError),
}

/// Keeps regions with at least `min` dataset rows inside them.
pub fn regions_with_support<'a>(
    models: impl IntoIterator<Item = &'a crate::model::ActionModel>,
    data: &Dataset,
    min: usize,
) -> Vec<bool> {
    models
        .into_iter()
        .map(|m| data.rows.iter().filter(|x| eval::is_feasible_point(m, x)).count() >= min)
        .collect()
}
