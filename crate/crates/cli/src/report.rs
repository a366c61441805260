//! JSON report types and the human summary printed to standard error.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use rever_core::model::{ActionModel, IntBox, Problem};
use rever_core::rational::{self, Rational};
use rever_core::rep::RestrictionSet;
use rever_core::verifier::{CertificateBundle, FoundBox, VerdictState};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub problem: ProblemDigest,
    pub regions: Vec<RegionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<serde_json::Value>>,
}

#[derive(Debug, Serialize)]
pub struct ProblemDigest {
    pub name: Option<String>,
    pub features: usize,
    /// Constraint counts by kind, as written in the problem file.
    pub constraints: BTreeMap<String, usize>,
    pub settings: Settings,
}

#[derive(Debug, Serialize)]
pub struct Settings {
    pub mode: &'static str,
    pub restriction_cap: usize,
    pub node_cap: usize,
    pub seed: u64,
}

impl ProblemDigest {
    pub fn new(name: Option<String>, p: &Problem, settings: Settings) -> Self {
        let mut constraints = BTreeMap::new();
        for c in &p.model.constraints {
            let kind = serde_json::to_value(c.kind).ok().and_then(|v| v.as_str().map(String::from));
            *constraints.entry(kind.unwrap_or_default()).or_insert(0) += 1;
        }
        ProblemDigest {
            name,
            features: p.model.dim(),
            constraints,
            settings,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RestrictionDigest {
    pub mode: &'static str,
    pub count: usize,
    pub variables: Vec<String>,
    pub assumptions_hold: bool,
    pub violations: Vec<String>,
    pub residual: Vec<String>,
    pub guarantee: &'static str,
}

impl RestrictionDigest {
    pub fn new(m: &ActionModel, rs: &RestrictionSet) -> Self {
        RestrictionDigest {
            mode: rs.mode.as_str(),
            count: rs.len(),
            variables: rs.variables.iter().map(|v| v.describe(m)).collect(),
            assumptions_hold: rs.report.passes,
            violations: rs.report.violations.iter().map(|v| v.message(m)).collect(),
            residual: rs.residual.iter().map(|v| v.message(m)).collect(),
            guarantee: rs.guarantee().as_str(),
        }
    }
}

#[derive(Debug, Default, Serialize)]
pub struct RegionReport {
    pub name: String,
    /// Region bounds that differ from the feature bounds.
    pub bounds: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restrictions: Option<RestrictionDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_status: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub largest_box: Option<BoxReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<BoxReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhausted: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baselines: Option<Vec<BaselineReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxReport {
    pub size: String,
    pub size_decimal: f64,
    /// Only the bounds that differ from the region.
    pub bounds: Vec<String>,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificates: Option<Vec<CertificateReport>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub restriction: Vec<FixedValue>,
    /// Exact multipliers, one per row of the recourse existence system.
    pub multipliers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedValue {
    pub variable: String,
    pub value: i64,
}

#[derive(Debug, Serialize)]
pub struct CoverageReport {
    pub method: serde_json::Value,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub boxes: usize,
    pub fraction: String,
    pub fraction_decimal: f64,
}

#[derive(Debug, Serialize)]
pub struct BaselineReport {
    pub method: &'static str,
    pub output: serde_json::Value,
    pub points_checked: usize,
    pub points_with_recourse: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub confined_points: usize,
    pub recourse_points: usize,
    pub box_search: serde_json::Value,
}

pub fn fixed_values(m: &ActionModel, r: &rever_core::rep::Restriction) -> Vec<FixedValue> {
    r.fixed
        .iter()
        .map(|(v, value)| FixedValue {
            variable: v.describe(m),
            value: *value,
        })
        .collect()
}

fn bound_text(name: &str, l: i64, u: i64) -> String {
    if l == u {
        format!("{name} = {l}")
    } else {
        format!("{name} ∈ [{l}, {u}]")
    }
}

/// `name ∈ [l, u]` for every axis where `b` differs from `outer`.
pub fn nontrivial_bounds(m: &ActionModel, b: &IntBox, outer: &IntBox) -> Vec<String> {
    (0..m.dim())
        .filter(|&j| b.l[j] != outer.l[j] || b.u[j] != outer.u[j])
        .map(|j| bound_text(&m.features[j].name, b.l[j], b.u[j]))
        .collect()
}

pub fn region_bounds(m: &ActionModel) -> Vec<String> {
    let full = IntBox::new(
        m.features.iter().map(|f| f.lower).collect(),
        m.features.iter().map(|f| f.upper).collect(),
    );
    nontrivial_bounds(m, &m.full_box(), &full)
}

pub fn box_report(m: &ActionModel, bx: &IntBox, size: &Rational, certificates: Option<&CertificateBundle>) -> BoxReport {
    BoxReport {
        size: rational::to_string(size),
        size_decimal: rational::to_f64(size),
        bounds: nontrivial_bounds(m, bx, &m.full_box()),
        lower: bx.l.clone(),
        upper: bx.u.clone(),
        certificates: certificates.map(|c| {
            c.per_restriction
                .iter()
                .map(|(r, cert)| CertificateReport {
                    restriction: fixed_values(m, r),
                    multipliers: cert.y.iter().map(rational::to_string).collect(),
                })
                .collect()
        }),
    }
}

pub fn found_box_report(m: &ActionModel, b: &FoundBox, emit_certificates: bool) -> BoxReport {
    box_report(m, &b.bx, &b.size, emit_certificates.then_some(&b.certificates))
}

pub fn curve(fractions: &[Rational]) -> Vec<CurvePoint> {
    fractions
        .iter()
        .enumerate()
        .map(|(k, f)| CurvePoint {
            boxes: k + 1,
            fraction: rational::to_string(f),
            fraction_decimal: rational::to_f64(f),
        })
        .collect()
}

/// Exit status for a verdict; the combined status of several regions is the
/// most severe one, with confined only when every region is confined.
pub fn exit_code(state: VerdictState) -> u8 {
    match state {
        VerdictState::Responsive => 0,
        VerdictState::Confined => 10,
        VerdictState::Neither => 20,
        VerdictState::Inconclusive => 30,
    }
}

pub fn combine(states: &[VerdictState]) -> VerdictState {
    if states.contains(&VerdictState::Inconclusive) {
        VerdictState::Inconclusive
    } else if states.iter().all(|s| *s == VerdictState::Responsive) {
        VerdictState::Responsive
    } else if states.iter().all(|s| *s == VerdictState::Confined) {
        VerdictState::Confined
    } else {
        VerdictState::Neither
    }
}

/// Short text for standard error.
pub fn summary(report: &Report) -> String {
    let mut out = String::new();
    for r in &report.regions {
        let _ = write!(out, "region {}", r.name);
        if let Some(v) = r.verdict {
            let _ = write!(out, ": {v}");
        }
        if let Some(d) = &r.restrictions {
            let _ = write!(out, " ({} restriction(s), guarantee {})", d.count, d.guarantee);
        }
        out.push('\n');
        if let Some(reason) = &r.reason {
            let _ = writeln!(out, "  {reason}");
        }
        if let Some(b) = &r.largest_box {
            let _ = writeln!(out, "  largest confined box, size {}: {}", b.size, describe(&b.bounds));
        }
        if let Some(boxes) = &r.boxes {
            for (k, b) in boxes.iter().enumerate() {
                let _ = writeln!(out, "  box {} size {}: {}", k + 1, b.size, describe(&b.bounds));
            }
            if r.exhausted == Some(true) {
                let _ = writeln!(out, "  no further confined boxes");
            }
        }
        if let Some(c) = &r.coverage {
            let _ = writeln!(out, "  {:>6}  {:>10}", "boxes", "covered");
            for p in &c.points {
                let _ = writeln!(out, "  {:>6}  {:>10.6}", p.boxes, p.fraction_decimal);
            }
        }
        if let Some(bs) = &r.baselines {
            for b in bs {
                let output = b.output.as_str().unwrap_or("?");
                let _ = writeln!(
                    out,
                    "  {:<7} {output} ({} of {} points with recourse)",
                    b.method, b.points_with_recourse, b.points_checked
                );
            }
        }
        if let Some(o) = &r.oracle {
            let _ = writeln!(
                out,
                "  {} confined and {} recourse points",
                o.confined_points, o.recourse_points
            );
        }
    }
    if let Some(o) = report.overall {
        let _ = writeln!(out, "overall: {o}");
    }
    out
}

fn describe(bounds: &[String]) -> String {
    if bounds.is_empty() {
        "the whole region".into()
    } else {
        bounds.join(", ")
    }
}
