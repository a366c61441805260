use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;

use rever_core::audit::{
    brute_force_oracle, compute_metrics, coverage_lower_bound, eval, point_has_recourse, read_dataset,
    regions_with_support, run_baseline, BaselineMethod, BaselineOptions, Dataset, OracleCaps, RegionAudit,
};
use rever_core::lp::validate_certificate;
use rever_core::model::{box_size, parse_problem, ActionModel, IntBox, Problem, Region};
use rever_core::rational;
use rever_core::rep::{assemble_rep, check_tu_assumptions, select_restrictions, Policy, RestrictionSet};
use rever_core::verifier::{
    enumerate_confined_boxes, export_fcp_model, import_solution, is_box_confined, verify_region, ExportOptions,
    VerdictState, VerifyOptions,
};

use crate::report::{self, BoxReport, CoverageReport, ProblemDigest, RegionReport, Report, RestrictionDigest, Settings};
use crate::Common;

/// A loaded problem with each audited region prepared.
pub struct Loaded {
    pub name: Option<String>,
    pub raw: Problem,
    pub lowered: Problem,
    pub regions: Vec<(String, Region)>,
}

pub fn load(path: &Path, region: Option<&str>) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw = parse_problem(&text).with_context(|| format!("{}", path.display()))?;
    let lowered = raw.lowered().with_context(|| format!("{}", path.display()))?;
    let name = serde_json::from_str::<Value>(&text)
        .ok()
        .and_then(|v| v.get("name").and_then(Value::as_str).map(String::from));
    let mut regions: Vec<(String, Region)> = raw
        .region_set()
        .into_iter()
        .enumerate()
        .map(|(k, r)| (r.name.clone().unwrap_or_else(|| if k == 0 { "region".into() } else { format!("region_{k}") }), r))
        .collect();
    if let Some(want) = region {
        regions.retain(|(n, _)| n == want);
        if regions.is_empty() {
            bail!("no region named '{want}'");
        }
    }
    Ok(Loaded {
        name,
        raw,
        lowered,
        regions,
    })
}

impl Common {
    pub fn policy(&self) -> Policy {
        match self.mode {
            crate::Mode::Exact => Policy::Exact,
            crate::Mode::Relaxed => Policy::Relaxed,
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        let mut o = VerifyOptions {
            node_cap: self.node_cap,
            workers: self.workers,
            ..VerifyOptions::default()
        };
        if let Some(t) = self.tolerance {
            o.lp.tolerance = t;
        }
        o
    }

    fn settings(&self) -> Settings {
        Settings {
            mode: match self.mode {
                crate::Mode::Exact => "exact",
                crate::Mode::Relaxed => "relaxed",
            },
            restriction_cap: self.restriction_cap,
            node_cap: self.node_cap,
            seed: self.seed,
        }
    }

    fn restrictions(&self, m: &ActionModel) -> Result<RestrictionSet> {
        Ok(select_restrictions(m, &check_tu_assumptions(m), self.policy(), self.restriction_cap)?)
    }
}

fn new_report(command: &'static str, l: &Loaded, c: &Common) -> Report {
    Report {
        schema_version: report::SCHEMA_VERSION,
        command,
        problem: ProblemDigest::new(l.name.clone(), &l.raw, c.settings()),
        regions: Vec::new(),
        overall: None,
        metrics: None,
    }
}

fn region_report(name: &str, m: &ActionModel) -> RegionReport {
    RegionReport {
        name: name.to_string(),
        bounds: report::region_bounds(m),
        ..RegionReport::default()
    }
}

fn seconds(c: &Common, start: Instant) -> Option<f64> {
    c.timings.then(|| start.elapsed().as_secs_f64())
}

pub fn verify(l: &Loaded, c: &Common, emit_certificates: bool) -> Result<(Report, u8)> {
    let mut rep = new_report("verify", l, c);
    let opts = c.verify_options();
    let mut states = Vec::new();
    for (name, region) in &l.regions {
        let start = Instant::now();
        let m = l.lowered.model.with_region(region.clone());
        let rs = c.restrictions(&m)?;
        let v = verify_region(&m, &l.lowered.classifier, &rs, &opts)?;
        states.push(v.state);
        let mut r = region_report(name, &m);
        r.restrictions = Some(RestrictionDigest::new(&m, &rs));
        r.verdict = Some(v.state.as_str());
        r.reason = v.reason.clone();
        r.region_status = v.region_status.map(|s| s.as_str());
        r.largest_box = v.largest_box.as_ref().map(|b| report::found_box_report(&m, b, emit_certificates));
        r.seconds = seconds(c, start);
        rep.regions.push(r);
    }
    let overall = report::combine(&states);
    rep.overall = Some(overall.as_str());
    Ok((rep, report::exit_code(overall)))
}

pub fn enumerate(l: &Loaded, c: &Common, max_boxes: usize, emit_certificates: bool) -> Result<(Report, u8)> {
    let mut rep = new_report("enumerate", l, c);
    let opts = c.verify_options();
    let mut code = 0;
    for (name, region) in &l.regions {
        let start = Instant::now();
        let m = l.lowered.model.with_region(region.clone());
        let rs = c.restrictions(&m)?;
        let mut r = region_report(name, &m);
        r.restrictions = Some(RestrictionDigest::new(&m, &rs));
        match enumerate_confined_boxes(&m, &l.lowered.classifier, &rs, max_boxes, &opts) {
            Ok(e) => {
                let boxes: Vec<IntBox> = e.boxes.iter().map(|b| b.bx.clone()).collect();
                let cov = coverage_lower_bound(&m, &boxes, c.seed)?;
                r.boxes = Some(
                    e.boxes
                        .iter()
                        .map(|b| report::found_box_report(&m, b, emit_certificates))
                        .collect(),
                );
                r.exhausted = Some(e.exhausted);
                r.coverage = Some(CoverageReport {
                    method: serde_json::to_value(cov.method)?,
                    points: report::curve(&cov.fractions),
                });
            }
            Err(rever_core::verifier::VerifyError::Inconclusive { nodes, node_cap }) => {
                r.verdict = Some(VerdictState::Inconclusive.as_str());
                r.reason = Some(format!("node cap of {node_cap} reached after {nodes} nodes"));
                code = report::exit_code(VerdictState::Inconclusive);
            }
            Err(e) => return Err(e.into()),
        }
        r.seconds = seconds(c, start);
        rep.regions.push(r);
    }
    Ok((rep, code))
}

fn read_csv(path: &Path, m: &ActionModel) -> Result<Dataset> {
    let f = std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    read_dataset(f, m).with_context(|| format!("{}", path.display()))
}

pub struct AuditArgs<'a> {
    pub methods: Vec<BaselineMethod>,
    pub dataset: Option<&'a Path>,
    pub test: Option<&'a Path>,
    pub samples: usize,
    pub min_support: usize,
}

pub fn audit(l: &Loaded, c: &Common, a: &AuditArgs) -> Result<(Report, u8)> {
    let mut rep = new_report("audit", l, c);
    let opts = c.verify_options();
    let data = a.dataset.map(|p| read_csv(p, &l.raw.model)).transpose()?;
    let test = a.test.map(|p| read_csv(p, &l.raw.model)).transpose()?;
    if a.methods.contains(&BaselineMethod::Data) && data.is_none() {
        bail!("the data method needs --dataset");
    }

    let models: Vec<ActionModel> = l
        .regions
        .iter()
        .map(|(_, r)| l.lowered.model.with_region(r.clone()))
        .collect();
    let keep = match (&data, a.min_support) {
        (Some(d), n) if n > 0 => regions_with_support(&models, d, n),
        _ => vec![true; models.len()],
    };

    let mut records: Vec<Vec<RegionAudit>> = vec![Vec::new(); a.methods.len()];
    for (((name, _), m), keep) in l.regions.iter().zip(&models).zip(keep) {
        if !keep {
            continue;
        }
        let rs = c.restrictions(m)?;
        let truth = verify_region(m, &l.lowered.classifier, &rs, &opts)?;
        let test_points = test
            .as_ref()
            .map(|t| {
                t.rows
                    .iter()
                    .filter(|x| eval::is_feasible_point(m, x))
                    .map(|x| point_has_recourse(m, &l.lowered.classifier, &rs, x, &opts))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        let mut r = region_report(name, m);
        r.restrictions = Some(RestrictionDigest::new(m, &rs));
        r.verdict = Some(truth.state.as_str());
        r.largest_box = truth.largest_box.as_ref().map(|b| report::found_box_report(m, b, false));
        let mut outputs = Vec::new();
        for (k, method) in a.methods.iter().enumerate() {
            let start = Instant::now();
            let bopts = BaselineOptions {
                samples: a.samples,
                seed: c.seed,
                verify: opts,
            };
            let out = run_baseline(*method, m, &l.lowered.classifier, &rs, data.as_ref(), &bopts)?;
            let elapsed = start.elapsed().as_secs_f64();
            outputs.push(report::BaselineReport {
                method: method.as_str(),
                output: serde_json::to_value(out.output)?,
                points_checked: out.sample.len(),
                points_with_recourse: out.sample.iter().filter(|p| p.has_recourse).count(),
                seconds: c.timings.then_some(elapsed),
            });
            records[k].push(RegionAudit {
                region: name.clone(),
                method: *method,
                output: out.output,
                truth: Some(truth.state),
                test_points: test_points.clone(),
                seconds: elapsed,
            });
        }
        r.baselines = Some(outputs);
        rep.regions.push(r);
    }
    let mut metrics = Vec::new();
    for recs in &records {
        let mut v = serde_json::to_value(compute_metrics(recs)?)?;
        if !c.timings {
            strip_timings(&mut v);
        }
        metrics.push(v);
    }
    rep.metrics = Some(metrics);
    Ok((rep, 0))
}

/// Drops wall-clock fields so reports are reproducible.
fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.starts_with("comp_time"));
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

pub fn oracle(l: &Loaded, c: &Common) -> Result<(Report, u8)> {
    let mut rep = new_report("oracle", l, c);
    let mut states = Vec::new();
    for (name, region) in &l.regions {
        let start = Instant::now();
        let m = l.raw.model.with_region(region.clone());
        let o = brute_force_oracle(&m, &l.raw.classifier, &OracleCaps::default())?;
        let state = if o.is_responsive() {
            VerdictState::Responsive
        } else if o.is_confined() {
            VerdictState::Confined
        } else {
            VerdictState::Neither
        };
        states.push(state);
        let mut r = region_report(name, &m);
        r.verdict = Some(state.as_str());
        if let (Some(b), Some(size)) = (&o.largest_box, &o.largest_confined_box_size) {
            r.largest_box = Some(report::box_report(&m, b, size, None));
        }
        r.oracle = Some(report::OracleReport {
            confined_points: o.confined_points.len(),
            recourse_points: o.recourse_points.len(),
            box_search: serde_json::to_value(o.box_search)?,
        });
        r.seconds = seconds(c, start);
        rep.regions.push(r);
    }
    let overall = report::combine(&states);
    rep.overall = Some(overall.as_str());
    Ok((rep, report::exit_code(overall)))
}

fn single_region(l: &Loaded) -> Result<(ActionModel, &str)> {
    match l.regions.as_slice() {
        [(name, r)] => Ok((l.lowered.model.with_region(r.clone()), name)),
        _ => bail!("the problem has {} regions; pick one with --region", l.regions.len()),
    }
}

fn box_from_json(v: &Value) -> Result<IntBox> {
    let ints = |key: &str| -> Result<Vec<i64>> {
        v.get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| anyhow!("box is missing `{key}`"))?
            .iter()
            .map(|x| x.as_i64().ok_or_else(|| anyhow!("`{key}` must hold integers")))
            .collect()
    };
    Ok(IntBox::new(ints("lower")?, ints("upper")?))
}

/// Boxes to exclude: a JSON array of `{lower, upper}` objects, or a report whose
/// first region lists boxes.
pub fn read_exclusions(path: &Path, m: &ActionModel) -> Result<Vec<IntBox>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
    let items: Vec<Value> = match &v {
        Value::Array(items) => items.clone(),
        Value::Object(obj) => {
            let region = obj
                .get("regions")
                .and_then(|r| r.get(0))
                .ok_or_else(|| anyhow!("{}: expected an array of boxes or a report", path.display()))?;
            match (region.get("boxes"), region.get("largest_box")) {
                (Some(Value::Array(b)), _) => b.clone(),
                (_, Some(b)) if !b.is_null() => vec![b.clone()],
                _ => Vec::new(),
            }
        }
        _ => bail!("{}: expected an array of boxes or a report", path.display()),
    };
    let boxes = items.iter().map(box_from_json).collect::<Result<Vec<_>>>()?;
    if let Some(b) = boxes.iter().find(|b| b.dim() != m.dim()) {
        bail!("exclusion box has {} coordinates for {} features", b.dim(), m.dim());
    }
    Ok(boxes)
}

pub fn export(l: &Loaded, c: &Common, exclusions: Option<&Path>, opts: &ExportOptions) -> Result<String> {
    let (m, _) = single_region(l)?;
    let rs = c.restrictions(&m)?;
    let ex = exclusions.map(|p| read_exclusions(p, &m)).transpose()?.unwrap_or_default();
    Ok(export_fcp_model(&m, &l.lowered.classifier, &rs, &ex, opts)?)
}

pub fn check_solution(l: &Loaded, c: &Common, solution: &Path, exclusions: Option<&Path>) -> Result<(Value, u8)> {
    let (m, name) = single_region(l)?;
    let rs = c.restrictions(&m)?;
    let ex = exclusions.map(|p| read_exclusions(p, &m)).transpose()?.unwrap_or_default();
    let text = std::fs::read_to_string(solution).with_context(|| format!("reading {}", solution.display()))?;
    let (imported, check) = import_solution(&text, &m, &l.lowered.classifier, &rs, &ex)?;
    let valid = check.is_valid();
    let size = box_size(&imported.bx, &m);
    let out = serde_json::json!({
        "schema_version": report::SCHEMA_VERSION,
        "command": "check-solution",
        "region": name,
        "valid": valid,
        "snapped": imported.snapped,
        "box": report::box_report(&m, &imported.bx, &size, None),
        "problems": check.problems,
    });
    Ok((out, if valid { 0 } else { 1 }))
}

/// Re-validates every box of a saved report against the problem.
pub fn check_report(l: &Loaded, c: &Common, path: &Path) -> Result<(Value, u8)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let saved: Value = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
    let version = saved.get("schema_version").and_then(Value::as_u64);
    if version != Some(report::SCHEMA_VERSION as u64) {
        bail!("{}: unsupported schema_version {version:?}", path.display());
    }
    let opts = c.verify_options();
    let mut problems = Vec::new();
    let mut checked = 0usize;
    let regions = saved.get("regions").and_then(Value::as_array).cloned().unwrap_or_default();
    for r in &regions {
        let name = r.get("name").and_then(Value::as_str).unwrap_or_default();
        let Some((_, region)) = l.regions.iter().find(|(n, _)| n == name) else {
            problems.push(format!("region '{name}' is not in the problem"));
            continue;
        };
        let m = l.lowered.model.with_region(region.clone());
        let rs = c.restrictions(&m)?;
        let mut boxes: Vec<BoxReport> = Vec::new();
        if let Some(b) = r.get("largest_box").filter(|b| !b.is_null()) {
            boxes.push(serde_json::from_value(b.clone())?);
        }
        if let Some(Value::Array(bs)) = r.get("boxes") {
            for b in bs {
                boxes.push(serde_json::from_value(b.clone())?);
            }
        }
        for (k, b) in boxes.iter().enumerate() {
            checked += 1;
            let bx = IntBox::new(b.lower.clone(), b.upper.clone());
            let label = format!("region '{name}' box {}", k + 1);
            if !m.box_in_region(&bx) {
                problems.push(format!("{label} lies outside the region"));
                continue;
            }
            if rational::to_string(&box_size(&bx, &m)) != b.size {
                problems.push(format!("{label} reports size {} but measures {}", b.size, rational::to_string(&box_size(&bx, &m))));
            }
            match &b.certificates {
                Some(certs) => check_certificates(&m, l, &rs, &bx, certs, &label, &mut problems)?,
                None => {
                    let res = is_box_confined(&m, &l.lowered.classifier, &rs, &bx, &opts)?;
                    if !res.is_confined() {
                        problems.push(format!("{label} is not confined ({})", res.status.as_str()));
                    }
                }
            }
        }
    }
    let valid = problems.is_empty();
    let out = serde_json::json!({
        "schema_version": report::SCHEMA_VERSION,
        "command": "check-report",
        "boxes_checked": checked,
        "valid": valid,
        "problems": problems,
    });
    Ok((out, if valid { 0 } else { 1 }))
}

fn check_certificates(
    m: &ActionModel,
    l: &Loaded,
    rs: &RestrictionSet,
    bx: &IntBox,
    certs: &[report::CertificateReport],
    label: &str,
    problems: &mut Vec<String>,
) -> Result<()> {
    if certs.len() != rs.len() {
        problems.push(format!("{label} has {} certificates for {} restrictions", certs.len(), rs.len()));
        return Ok(());
    }
    for r in &rs.restrictions {
        let want = report::fixed_values(m, r);
        let Some(cert) = certs.iter().find(|c| c.restriction == want) else {
            problems.push(format!("{label} lacks a certificate for restriction {}", r.describe(m)));
            continue;
        };
        let y = cert
            .multipliers
            .iter()
            .map(|s| rational::parse(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| anyhow!("{label}: {e}"))?;
        let s = assemble_rep(m, &l.lowered.classifier, bx, r)?;
        if y.len() != s.num_rows() {
            problems.push(format!("{label}: {} multipliers for {} rows", y.len(), s.num_rows()));
            continue;
        }
        if let rever_core::lp::CertificateCheck::Reject(why) = validate_certificate(&s, &y)? {
            problems.push(format!("{label}: certificate for {} rejected: {why}", r.describe(m)));
        }
    }
    Ok(())
}
