use serde::Serialize;

use super::{AuditError, BaselineMethod, BaselineVerdict, PointVerdict};
use crate::verifier::VerdictState;

/// One method's result on one region, with the ground truth to score it against.
#[derive(Debug, Clone)]
pub struct RegionAudit {
    pub region: String,
    pub method: BaselineMethod,
    pub output: BaselineVerdict,
    /// Exact verdict for the region.
    pub truth: Option<VerdictState>,
    /// Classified test points inside the region, when a test set is supplied.
    pub test_points: Option<Vec<PointVerdict>>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionFlags {
    pub region: String,
    pub certifies_responsive: bool,
    pub outputs_responsive: bool,
    pub blindspot: bool,
    pub realized_blindspot: Option<bool>,
    pub certifies_confined: bool,
    pub outputs_confined: bool,
    pub loophole: bool,
    pub realized_loophole: Option<bool>,
    pub comp_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rates {
    pub certifies_responsive: f64,
    pub outputs_responsive: f64,
    pub blindspot: f64,
    pub realized_blindspot: Option<f64>,
    pub certifies_confined: f64,
    pub outputs_confined: f64,
    pub loophole: f64,
    pub realized_loophole: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditMetrics {
    pub method: BaselineMethod,
    pub regions: Vec<RegionFlags>,
    pub rates: Rates,
    pub comp_time_mean: f64,
    /// Sample standard deviation; zero for a single region.
    pub comp_time_std: f64,
}

fn flags(r: &RegionAudit) -> Result<RegionFlags, AuditError> {
    let truth = match r.truth {
        Some(t @ (VerdictState::Responsive | VerdictState::Confined | VerdictState::Neither)) => t,
        _ => return Err(AuditError::MissingGroundTruth(r.region.clone())),
    };
    let outputs_responsive = r.output == BaselineVerdict::Responsive;
    let outputs_confined = r.output == BaselineVerdict::Confined;
    let rever = r.method == BaselineMethod::Rever;
    let tests = r.test_points.as_deref();
    Ok(RegionFlags {
        region: r.region.clone(),
        certifies_responsive: rever && outputs_responsive,
        outputs_responsive,
        blindspot: outputs_responsive && truth != VerdictState::Responsive,
        realized_blindspot: tests.map(|t| outputs_responsive && t.iter().any(|p| !p.has_recourse)),
        certifies_confined: rever && outputs_confined,
        outputs_confined,
        loophole: outputs_confined && truth != VerdictState::Confined,
        realized_loophole: tests.map(|t| outputs_confined && t.iter().any(|p| p.has_recourse)),
        comp_time_seconds: r.seconds,
    })
}

fn rate(flags: &[RegionFlags], pick: impl Fn(&RegionFlags) -> bool) -> f64 {
    if flags.is_empty() {
        0.0
    } else {
        flags.iter().filter(|f| pick(f)).count() as f64 / flags.len() as f64
    }
}

fn optional_rate(flags: &[RegionFlags], pick: impl Fn(&RegionFlags) -> Option<bool>) -> Option<f64> {
    let vals: Option<Vec<bool>> = flags.iter().map(pick).collect();
    let vals = vals?;
    if vals.is_empty() {
        return Some(0.0);
    }
    Some(vals.iter().filter(|v| **v).count() as f64 / vals.len() as f64)
}

/// Per-region flags and rates over the region set for a single method.
///
/// Records are sorted by region name first, so the result does not depend on
/// the order in which audits finished.
pub fn compute_metrics(records: &[RegionAudit]) -> Result<AuditMetrics, AuditError> {
    let method = records.first().map_or(BaselineMethod::Rever, |r| r.method);
    if let Some(r) = records.iter().find(|r| r.method != method) {
        return Err(AuditError::MixedMethods(r.method.as_str().to_string(), method.as_str().to_string()));
    }
    let mut sorted: Vec<&RegionAudit> = records.iter().collect();
    sorted.sort_by(|a, b| a.region.cmp(&b.region));
    let regions = sorted.into_iter().map(flags).collect::<Result<Vec<_>, _>>()?;
    let rates = Rates {
        certifies_responsive: rate(&regions, |f| f.certifies_responsive),
        outputs_responsive: rate(&regions, |f| f.outputs_responsive),
        blindspot: rate(&regions, |f| f.blindspot),
        realized_blindspot: optional_rate(&regions, |f| f.realized_blindspot),
        certifies_confined: rate(&regions, |f| f.certifies_confined),
        outputs_confined: rate(&regions, |f| f.outputs_confined),
        loophole: rate(&regions, |f| f.loophole),
        realized_loophole: optional_rate(&regions, |f| f.realized_loophole),
    };
    let times: Vec<f64> = regions.iter().map(|f| f.comp_time_seconds).collect();
    let n = times.len() as f64;
    let mean = if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / n };
    let std = if times.len() < 2 {
        0.0
    } else {
        (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(AuditMetrics {
        method,
        regions,
        rates,
        comp_time_mean: mean,
        comp_time_std: std,
    })
}
