//! Acceptance harness: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use rand::Rng;

use rever_core::audit::{
    brute_force_oracle, compute_metrics, read_dataset, run_baseline, BaselineMethod, BaselineOptions, BaselineVerdict,
    OracleCaps, RegionAudit,
};
use rever_core::lp::{solve_feasibility, validate_certificate, Feasibility, LinearSystem};
use rever_core::model::{parse_problem, ConstraintKind, IntBox, Problem};
use rever_core::rational::{int, ratio, Rational};
use rever_core::rep::{assemble_rep, check_tu_assumptions, select_restrictions, Policy, RestrictionSet};
use rever_core::verifier::{
    export_fcp_model, find_largest_confined_box, import_solution, is_box_confined, verify_region, ConfinementStatus,
    ExportFormat, ExportOptions, VerdictState, VerifyOptions,
};

type Outcome = Result<String, String>;

fn demo(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demos").join(name)
}

fn load(name: &str) -> Problem {
    let text = std::fs::read_to_string(demo(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_problem(&text).and_then(|p| p.lowered()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn restrictions(p: &Problem, policy: Policy) -> RestrictionSet {
    select_restrictions(&p.model, &check_tu_assumptions(&p.model), policy, 1024).expect("restrictions")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Independent check of `yᵀA = 0`, `y ≥ 0`, `yᵀb < 0`.
fn is_farkas_ray(s: &LinearSystem, y: &[Rational]) -> bool {
    if y.len() != s.num_rows() || y.iter().any(Signed::is_negative) {
        return false;
    }
    let mut col = vec![Rational::zero(); s.num_vars()];
    let mut rhs = Rational::zero();
    for (row, yi) in s.rows.iter().zip(y) {
        for (j, a) in &row.coeffs {
            col[*j] += a * yi;
        }
        rhs += &row.rhs * yi;
    }
    col.iter().all(Zero::is_zero) && rhs.is_negative()
}

fn satisfies(s: &LinearSystem, x: &[Rational]) -> bool {
    s.rows.iter().all(|row| {
        let lhs = row.coeffs.iter().fold(Rational::zero(), |acc, (j, a)| acc + a * &x[*j]);
        lhs <= row.rhs
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(1);
    let (mut feasible, mut infeasible) = (0, 0);
    for k in 0..1000 {
        let n = rng.random_range(1..=10);
        let m = rng.random_range(1..=20);
        let mut s = LinearSystem::with_vars(n);
        for _ in 0..m {
            let coeffs: Vec<(usize, Rational)> = (0..n).map(|j| (j, int(rng.random_range(-5..=5)))).collect();
            s.add_row(coeffs, int(rng.random_range(-5..=5)));
        }
        match solve_feasibility(&s).map_err(|e| format!("system {k}: {e}"))? {
            Feasibility::Feasible(x) => {
                ensure(satisfies(&s, &x), || format!("system {k}: point violates a row"))?;
                feasible += 1;
            }
            Feasibility::Infeasible(c) => {
                let accepted = validate_certificate(&s, &c.y).map_err(|e| e.to_string())?.is_accept();
                ensure(accepted && is_farkas_ray(&s, &c.y), || format!("system {k}: certificate rejected"))?;
                infeasible += 1;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))?;
    Ok(format!("{feasible} feasible, {infeasible} certified infeasible, {took:.2?}"))
}

fn criterion_2() -> Outcome {
    let mut rng = common::rng(2);
    let mut feasible = 0;
    for k in 0..200 {
        let inst = common::lrc_instance(&mut rng);
        for _ in 0..5 {
            let b = common::random_box(&mut rng, &inst.lowered.model.full_box());
            let p = &inst.lowered;
            let s = assemble_rep(&p.model, &p.classifier, &b, &Default::default()).map_err(|e| e.to_string())?;
            let relaxed = solve_feasibility(&s).map_err(|e| e.to_string())?.is_feasible();
            let discrete = common::box_has_recourse_by_enumeration(p, &b);
            ensure(relaxed == discrete, || {
                format!("model {k}, box {b:?}: relaxed {relaxed}, enumeration {discrete}\n{}", inst.json)
            })?;
            feasible += relaxed as usize;
        }
    }
    Ok(format!("1000/1000 boxes agree ({feasible} with recourse)"))
}

struct Small {
    inst: common::Instance,
    rs: RestrictionSet,
    truth: rever_core::audit::OracleResult,
}

fn small_instances() -> Vec<Small> {
    let mut rng = common::rng(3);
    (0..100)
        .map(|_| {
            let (inst, rs) = common::mixed_instance(&mut rng);
            let truth = common::oracle(&inst);
            Small { inst, rs, truth }
        })
        .collect()
}

fn criterion_3(cases: &[Small]) -> Outcome {
    let mut with_box = 0;
    for (k, c) in cases.iter().enumerate() {
        common::check_largest_box(&c.inst, &c.rs, &c.truth).map_err(|e| format!("instance {k}: {e}"))?;
        with_box += c.truth.largest_confined_box_size.is_some() as usize;
    }
    Ok(format!("{} instances match the oracle ({with_box} with a confined box)", cases.len()))
}

fn criterion_4(cases: &[Small]) -> Outcome {
    let (mut boxes, mut exhausted) = (0, 0);
    for (k, c) in cases.iter().enumerate() {
        let (found, done) =
            common::check_enumeration(&c.inst, &c.rs, &c.truth, 25).map_err(|e| format!("instance {k}: {e}"))?;
        boxes += found.len();
        exhausted += done as usize;
    }
    Ok(format!("{boxes} boxes checked, {exhausted} enumerations exhausted and complete"))
}

fn criterion_5() -> Outcome {
    let opts = VerifyOptions::default();
    let relaxed = load("counterexample.json");
    let rs = restrictions(&relaxed, Policy::Relaxed);
    let region = relaxed.model.full_box();
    let r = is_box_confined(&relaxed.model, &relaxed.classifier, &rs, &region, &opts).map_err(|e| e.to_string())?;
    ensure(r.status == ConfinementStatus::UnknownNotConfined, || format!("relaxed status {:?}", r.status))?;
    let w = r.witness.ok_or("relaxed mode returned no witness")?;
    ensure(w.a[0] >= ratio(1, 2) && !w.is_integral(), || format!("relaxed witness a1 = {}", w.a[0]))?;
    // the half-step action a1 = 0.5, a2 = -5.5 at x = (0, 6) satisfies the relaxed system
    let s = assemble_rep(&relaxed.model, &relaxed.classifier, &region, &rs.restrictions[0]).map_err(|e| e.to_string())?;
    let point = [int(0), int(6), ratio(1, 2), ratio(-11, 2)];
    ensure(satisfies(&s, &point), || "a1 = 0.5 is not feasible for the relaxation".into())?;

    let exact = restrictions(&relaxed, Policy::Exact);
    let v = verify_region(&relaxed.model, &relaxed.classifier, &exact, &opts).map_err(|e| e.to_string())?;
    ensure(v.state == VerdictState::Confined, || format!("exact verdict {:?}", v.state))?;

    let raw = parse_problem(&std::fs::read_to_string(demo("counterexample.json")).unwrap()).unwrap();
    let truth = brute_force_oracle(&raw.model, &raw.classifier, &OracleCaps::default()).map_err(|e| e.to_string())?;
    let grid: Vec<Vec<i64>> = (5..=10).map(|v| vec![0, v]).collect();
    ensure(truth.confined_points == grid && truth.is_confined(), || "oracle disagrees on {0}x{5..10}".into())?;
    Ok(format!(
        "relaxed witness a1 = {}, exact verdict confined with {} restrictions, oracle confines all 6 points",
        w.a[0],
        exact.len()
    ))
}

fn criterion_6() -> Outcome {
    let p = load("heloc_shaped.json");
    let binary = p.model.features.iter().filter(|f| f.lower == 0 && f.upper == 1).count();
    ensure(binary == 42 && p.model.dim() == 43, || format!("{binary} binary of {}", p.model.dim()))?;
    let rs = restrictions(&p, Policy::Exact);
    ensure(rs.len() == 4, || format!("{} restrictions", rs.len()))?;
    ensure(rs.residual.is_empty(), || "residual violations after restriction".into())?;
    Ok(format!("{} restrictions over {} fixed action variables", rs.len(), rs.variables.len()))
}

fn criterion_7() -> Outcome {
    let p = load("one_dimensional.json");
    let rs = restrictions(&p, Policy::Exact);
    let opts = BaselineOptions::default();
    let truth = verify_region(&p.model, &p.classifier, &rs, &opts.verify).map_err(|e| e.to_string())?;
    ensure(truth.state == VerdictState::Neither && truth.largest_box.is_some(), || {
        format!("exact verdict {:?}", truth.state)
    })?;
    let mut data_records = Vec::new();
    let mut rever_records = Vec::new();
    for (region, file, expected) in [
        ("blindspot", "one_dimensional_blindspot.csv", BaselineVerdict::Responsive),
        ("loophole", "one_dimensional_loophole.csv", BaselineVerdict::Confined),
    ] {
        let data = read_dataset(std::fs::File::open(demo(file)).unwrap(), &p.model).map_err(|e| e.to_string())?;
        for (method, records) in [(BaselineMethod::Data, &mut data_records), (BaselineMethod::Rever, &mut rever_records)] {
            let out = run_baseline(method, &p.model, &p.classifier, &rs, Some(&data), &opts).map_err(|e| e.to_string())?;
            if method == BaselineMethod::Data {
                ensure(out.output == expected, || format!("{region}: data output {:?}", out.output))?;
            }
            records.push(RegionAudit {
                region: region.into(),
                method,
                output: out.output,
                truth: Some(truth.state),
                test_points: None,
                seconds: 0.0,
            });
        }
    }
    let data = compute_metrics(&data_records).map_err(|e| e.to_string())?;
    let rever = compute_metrics(&rever_records).map_err(|e| e.to_string())?;
    ensure(data.regions[0].blindspot && data.regions[1].loophole, || "data flags missing".into())?;
    ensure(rever.rates.blindspot == 0.0 && rever.rates.loophole == 0.0, || "rever recorded a flaw".into())?;
    Ok("data: 1 blindspot, 1 loophole; rever: 0 blindspots, 0 loopholes".into())
}

fn criterion_8() -> Outcome {
    let p = load("scale_instance.json");
    let raw = parse_problem(&std::fs::read_to_string(demo("scale_instance.json")).unwrap()).unwrap();
    let binary = p.model.features.iter().filter(|f| f.lower == 0 && f.upper == 1).count();
    let non_separable = raw.model.constraints.iter().filter(|c| c.operands.len() > 1).count();
    let kinds_ok = raw.model.constraints.iter().all(|c| {
        matches!(c.kind, ConstraintKind::Thermometer | ConstraintKind::OneHot)
            || (c.kind == ConstraintKind::DirectionalLinkage && c.operands.iter().all(|o| o.coef.abs() == 1))
    });
    ensure(binary == 40 && p.model.dim() == 41 && non_separable == 20 && kinds_ok, || {
        format!("{binary} binary, {} features, {non_separable} non-separable", p.model.dim())
    })?;
    ensure(check_tu_assumptions(&p.model).passes, || "assumption checks fail".into())?;
    let rs = restrictions(&p, Policy::Exact);
    let start = Instant::now();
    let found = find_largest_confined_box(&p.model, &p.classifier, &rs, &[], &VerifyOptions::default())
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    let size = found.map(|b| rever_core::rational::to_string(&b.size)).unwrap_or_else(|| "none".into());
    Ok(format!("largest box size {size} in {took:.2?}"))
}

fn criterion_9() -> Outcome {
    let p = load("one_dimensional.json");
    let rs = restrictions(&p, Policy::Exact);
    let mut docs = Vec::new();
    for format in [ExportFormat::Lp, ExportFormat::Mps] {
        let opts = ExportOptions { format, corrected_big_m: false };
        let a = export_fcp_model(&p.model, &p.classifier, &rs, &[], &opts).map_err(|e| e.to_string())?;
        let b = export_fcp_model(&p.model, &p.classifier, &rs, &[], &opts).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{format:?} export is not deterministic"))?;
        docs.push(a);
    }
    ensure(docs[0].contains("u1") && docs[0].contains("y5"), || "unexpected variable names".into())?;
    // classifier row, a <= 0 and the box upper row combine to 0 <= -1 when u = 5
    let solution = "u1 = 5\nl1 = 0\ny1 = 1\ny2 = 1\ny3 = 0\ny4 = 1\ny5 = 0\n";
    let (imported, check) = import_solution(solution, &p.model, &p.classifier, &rs, &[]).map_err(|e| e.to_string())?;
    ensure(check.is_valid(), || format!("rejected: {:?}", check.problems))?;
    ensure(imported.bx == IntBox::new(vec![0], vec![5]), || format!("box {:?}", imported.bx))?;
    Ok("hand-built solution accepted; LP and MPS exports are byte-identical across runs".into())
}

fn criterion_10(cases: &[Small]) -> Outcome {
    let (mut curves, mut exhausted) = (0, 0);
    for (k, c) in cases.iter().enumerate() {
        let (boxes, done) =
            common::check_enumeration(&c.inst, &c.rs, &c.truth, 1000).map_err(|e| format!("instance {k}: {e}"))?;
        common::check_coverage(&c.inst, &c.truth, &boxes, done).map_err(|e| format!("instance {k}: {e}"))?;
        curves += !boxes.is_empty() as usize;
        exhausted += done as usize;
    }
    Ok(format!("{curves} nonempty curves bounded and monotone, {exhausted} exhausted and exact"))
}

fn run(n: usize, what: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match outcome {
        Ok(detail) => {
            println!("[PASS] criterion {n}: {what} ({detail})");
            true
        }
        Err(detail) => {
            println!("[FAIL] criterion {n}: {what}: {detail}");
            false
        }
    }
}

fn main() -> ExitCode {
    let cases = small_instances();
    let results = [
        run(1, "Farkas alternative on 1000 random systems", criterion_1),
        run(2, "relaxation matches enumeration on TU-passing models", criterion_2),
        run(3, "largest confined box matches the oracle optimum", || criterion_3(&cases)),
        run(4, "enumerated boxes are disjoint, confined, non-increasing and complete", || criterion_4(&cases)),
        run(5, "two-feature counterexample", criterion_5),
        run(6, "heloc-shaped model yields four restrictions", criterion_6),
        run(7, "blindspot and loophole demonstration", criterion_7),
        run(8, "scale-shaped instance within the time budget", criterion_8),
        run(9, "export round trip on the one-dimensional demo", criterion_9),
        run(10, "coverage curve bounded by the oracle", || criterion_10(&cases)),
    ];
    if results.iter().all(|ok| *ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
