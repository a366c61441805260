//! Seeded random instances shared by the property and acceptance tests.
//!
//! Instances are written as JSON problem files and parsed through the public
//! entry point, so the generators exercise the same path as real input.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rever_core::model::{build_action_model, IntBox, Problem};
use rever_core::rep::{
    check_tu_assumptions, select_restrictions, Guarantee, Policy, RestrictionSet, DEFAULT_RESTRICTION_CAP,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parsed problem, its lowered form and the JSON it came from.
#[derive(Debug, Clone)]
pub struct Instance {
    pub json: Value,
    pub raw: Problem,
    pub lowered: Problem,
}

impl Instance {
    pub fn from_json(json: Value) -> Option<Instance> {
        let raw = build_action_model(&json).ok()?;
        let lowered = raw.lowered().ok()?;
        Some(Instance { json, raw, lowered })
    }

    pub fn restrictions(&self, policy: Policy) -> Option<RestrictionSet> {
        let m = &self.lowered.model;
        select_restrictions(m, &check_tu_assumptions(m), policy, DEFAULT_RESTRICTION_CAP).ok()
    }
}

const ACTIONABILITY: [&str; 4] = ["immutable", "free", "monotone_increase", "monotone_decrease"];
const SCOPES: [&str; 3] = ["x", "a", "x_plus_a"];
const SENSES: [&str; 5] = ["le", "ge", "le", "ge", "eq"];

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn features(rng: &mut ChaCha8Rng, d: usize, binary: usize, max_range: i64, immutable: f64) -> Vec<Value> {
    (0..d)
        .map(|j| {
            let (lo, hi) = if j < binary {
                (0, 1)
            } else {
                let lo = rng.random_range(-2..=2);
                (lo, lo + rng.random_range(1..=max_range))
            };
            let act = if rng.random_bool(immutable) { "immutable" } else { *pick(rng, &ACTIONABILITY[1..]) };
            let mut f = json!({"name": format!("f{j}"), "lower": lo, "upper": hi, "actionability": act});
            if act != "immutable" && rng.random_bool(0.4) {
                f["step"] = json!({"lower": rng.random_range(-3..=0), "upper": rng.random_range(0..=3)});
            }
            f
        })
        .collect()
}

/// Random integer weights with the decision boundary near the middle of the feature box.
fn classifier(rng: &mut ChaCha8Rng, features: &[Value]) -> Value {
    let weights: Vec<i64> = features.iter().map(|_| rng.random_range(-3..=3)).collect();
    let twice_mid: i64 = bounds_of(features).iter().zip(&weights).map(|((lo, hi), w)| w * (lo + hi)).sum();
    let intercept = format!("{}/2", -twice_mid + rng.random_range(-4..=4));
    json!({"weights": weights, "intercept": intercept})
}

fn bounds_of(features: &[Value]) -> Vec<(i64, i64)> {
    features
        .iter()
        .map(|f| (f["lower"].as_i64().unwrap(), f["upper"].as_i64().unwrap()))
        .collect()
}

fn region(rng: &mut ChaCha8Rng, features: &[Value]) -> Value {
    let mut bounds = serde_json::Map::new();
    for (f, (lo, hi)) in features.iter().zip(bounds_of(features)) {
        if rng.random_bool(0.7) {
            continue;
        }
        let a = rng.random_range(lo..=hi);
        let b = rng.random_range(lo..=hi);
        bounds.insert(f["name"].as_str().unwrap().to_string(), json!([a.min(b), a.max(b)]));
    }
    json!({"bounds": bounds})
}

fn name(j: usize) -> String {
    format!("f{j}")
}

fn bound_constraint(rng: &mut ChaCha8Rng, bounds: &[(i64, i64)]) -> Value {
    let j = rng.random_range(0..bounds.len());
    let scope = *pick(rng, &SCOPES);
    let sign = *pick(rng, &[1i64, -1]);
    let (lo, hi) = bounds[j];
    let v = if scope == "a" { rng.random_range(-2..=2) } else { rng.random_range(lo..=hi) };
    json!({"kind": "integer_bound", "scope": scope, "operands": [{"feature": name(j), "sign": sign}],
           "bound": sign * v})
}

fn linkage(rng: &mut ChaCha8Rng, d: usize) -> Value {
    let i = rng.random_range(0..d);
    let mut j = rng.random_range(0..d - 1);
    if j >= i {
        j += 1;
    }
    let (si, sj) = *pick(rng, &[(1i64, -1i64), (-1, 1), (1, 1), (-1, -1)]);
    json!({"kind": "directional_linkage", "scope": pick(rng, &SCOPES),
           "operands": [{"feature": name(i), "sign": si}, {"feature": name(j), "sign": sj}],
           "sense": pick(rng, &SENSES), "bound": rng.random_range(-1..=1)})
}

/// Linear-recourse constraints only, kept when the model passes the TU checks.
///
/// `d ≤ 6`, ranges `≤ 5`, at most four K-hot groups and six linkages.
pub fn lrc_instance(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let d = rng.random_range(2..=6);
        let binary = rng.random_range(0..=d);
        let feats = features(rng, d, binary, 5, 0.25);
        let bounds = bounds_of(&feats);
        let mut constraints = Vec::new();

        let mut pool: Vec<usize> = (0..binary).collect();
        pool.shuffle(rng);
        let groups = rng.random_range(0..=4usize);
        for _ in 0..groups {
            if pool.len() < 2 {
                break;
            }
            let size = rng.random_range(2..=pool.len().min(3));
            let members: Vec<usize> = pool.drain(..size).collect();
            let ops: Vec<Value> = members.iter().map(|&j| json!({"feature": name(j)})).collect();
            constraints.push(json!({"kind": "k_hot", "scope": pick(rng, &SCOPES), "operands": ops,
                                    "k": rng.random_range(0..=size as i64), "sense": pick(rng, &SENSES)}));
        }
        for _ in 0..rng.random_range(0..=6usize) {
            constraints.push(linkage(rng, d));
        }
        for _ in 0..rng.random_range(0..=2usize) {
            constraints.push(bound_constraint(rng, &bounds));
        }
        let json = json!({"classifier": classifier(rng, &feats), "features": feats,
                          "constraints": constraints, "region": region(rng, &feats)});
        let Some(inst) = Instance::from_json(json) else { continue };
        if check_tu_assumptions(&inst.lowered.model).passes {
            return inst;
        }
    }
}

/// Small instance with any constraint kind, kept when exact restriction
/// selection succeeds with an exact guarantee.
///
/// `d ≤ 4`, ranges `≤ 5`.
pub fn mixed_instance(rng: &mut ChaCha8Rng) -> (Instance, RestrictionSet) {
    loop {
        let d = rng.random_range(2..=4);
        let binary = rng.random_range(0..=d).min(rng.random_range(0..=d));
        let feats = features(rng, d, binary, 5, 0.5);
        let bounds = bounds_of(&feats);
        let mut constraints = Vec::new();
        let mut used_one_hot = false;
        let mut used_thermometer = false;
        for _ in 0..rng.random_range(1..=3usize) {
            match rng.random_range(0..7) {
                0 if binary >= 2 && !used_one_hot => {
                    used_one_hot = true;
                    let size = rng.random_range(2..=binary);
                    let ops: Vec<Value> = (0..size).map(|j| json!({"feature": name(j)})).collect();
                    constraints.push(json!({"kind": "one_hot", "scope": pick(rng, &["x", "x_plus_a"]),
                                            "operands": ops}));
                }
                1 if binary >= 2 && !used_thermometer => {
                    used_thermometer = true;
                    let size = rng.random_range(2..=binary);
                    let ops: Vec<Value> = (0..size).rev().map(|j| json!({"feature": name(j)})).collect();
                    let mut c = json!({"kind": "thermometer", "scope": pick(rng, &SCOPES), "operands": ops});
                    if rng.random_bool(0.5) {
                        c["direction"] = json!(pick(rng, &["increase", "decrease"]));
                    }
                    constraints.push(c);
                }
                2 => {
                    let i = rng.random_range(0..d);
                    let j = (i + rng.random_range(1..d)) % d;
                    let big = *pick(rng, &[2i64, 3, -2, -3]);
                    let small = *pick(rng, &[1i64, -1, 2, -2]);
                    constraints.push(json!({"kind": "scaled_linkage", "scope": pick(rng, &["a", "a", "x_plus_a"]),
                        "operands": [{"feature": name(i), "scale": small}, {"feature": name(j), "scale": big}],
                        "sense": pick(rng, &SENSES), "bound": rng.random_range(-2..=2)}));
                }
                3 if binary >= 1 => {
                    let i = rng.random_range(0..binary);
                    let j = (i + rng.random_range(1..d)) % d;
                    let (lo, hi) = bounds[j];
                    let coef = *pick(rng, &[1i64, -1]);
                    let v = rng.random_range(lo..=hi);
                    constraints.push(json!({"kind": "if_then", "scope": pick(rng, &["x", "x_plus_a"]),
                        "operands": [{"feature": name(i)}, {"feature": name(j), "sign": coef}],
                        "sense": pick(rng, &["le", "ge"]), "bound": coef * v}));
                }
                4 => constraints.push(linkage(rng, d)),
                5 => constraints.push(bound_constraint(rng, &bounds)),
                _ => {}
            }
        }
        let json = json!({"classifier": classifier(rng, &feats), "features": feats,
                          "constraints": constraints, "region": region(rng, &feats)});
        let Some(inst) = Instance::from_json(json) else { continue };
        let Some(rs) = inst.restrictions(Policy::Exact) else { continue };
        if rs.guarantee() == Guarantee::Exact {
            return (inst, rs);
        }
    }
}

/// Uniform random sub-box of `outer`.
pub fn random_box(rng: &mut ChaCha8Rng, outer: &IntBox) -> IntBox {
    let mut l = Vec::with_capacity(outer.dim());
    let mut u = Vec::with_capacity(outer.dim());
    for j in 0..outer.dim() {
        let a = rng.random_range(outer.l[j]..=outer.u[j]);
        let b = rng.random_range(outer.l[j]..=outer.u[j]);
        l.push(a.min(b));
        u.push(a.max(b));
    }
    IntBox::new(l, u)
}

/// Every integer point of `b`, in lexicographic order.
pub fn box_points(b: &IntBox) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    if b.is_empty() {
        return out;
    }
    let mut x = b.l.clone();
    loop {
        out.push(x.clone());
        let mut k = b.dim();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if x[k] < b.u[k] {
                x[k] += 1;
                break;
            }
            x[k] = b.l[k];
        }
    }
}

use num_traits::Zero;
use rever_core::audit::{brute_force_oracle, brute_force_recourse, coverage_lower_bound, eval, OracleCaps, OracleResult};
use rever_core::lp::{solve_feasibility_with, SolveOptions};
use rever_core::model::box_size;
use rever_core::rational::{self, Rational};
use rever_core::rep::{assemble_rep, Restriction};
use rever_core::verifier::{enumerate_confined_boxes, find_largest_confined_box, VerifyOptions};

/// Whether some feasible point of `b` has an integer recourse action, by enumeration.
pub fn box_has_recourse_by_enumeration(p: &Problem, b: &IntBox) -> bool {
    box_points(b)
        .iter()
        .filter(|x| eval::is_feasible_point(&p.model, x))
        .any(|x| brute_force_recourse(&p.model, &p.classifier, x, u128::MAX).unwrap())
}

/// Relaxed REP feasibility against enumeration on `boxes` random sub-boxes.
pub fn check_relaxation(inst: &Instance, rng: &mut ChaCha8Rng, boxes: usize) -> Result<(), String> {
    let p = &inst.lowered;
    for _ in 0..boxes {
        let b = random_box(rng, &p.model.full_box());
        let s = assemble_rep(&p.model, &p.classifier, &b, &Restriction::default()).map_err(|e| e.to_string())?;
        let relaxed = solve_feasibility_with(&s, &SolveOptions::exact()).map_err(|e| e.to_string())?.is_feasible();
        let discrete = box_has_recourse_by_enumeration(p, &b);
        if relaxed != discrete {
            return Err(format!("box {b:?}: relaxed {relaxed}, enumeration {discrete}\n{}", inst.json));
        }
    }
    Ok(())
}

pub fn oracle(inst: &Instance) -> OracleResult {
    brute_force_oracle(&inst.raw.model, &inst.raw.classifier, &OracleCaps::default()).expect("oracle within caps")
}

/// Largest-box size against the oracle optimum.
pub fn check_largest_box(inst: &Instance, rs: &RestrictionSet, truth: &OracleResult) -> Result<(), String> {
    let p = &inst.lowered;
    let found = find_largest_confined_box(&p.model, &p.classifier, rs, &[], &VerifyOptions::default())
        .map_err(|e| e.to_string())?;
    let size = found.as_ref().map(|b| b.size.clone());
    if size != truth.largest_confined_box_size {
        return Err(format!(
            "largest box size {:?} ({:?}), oracle {:?} ({:?})\n{}",
            size.map(|s| rational::to_string(&s)),
            found.map(|b| b.bx),
            truth.largest_confined_box_size.as_ref().map(rational::to_string),
            truth.largest_box,
            inst.json
        ));
    }
    Ok(())
}

fn confined_by_oracle(truth: &OracleResult, b: &IntBox) -> bool {
    !truth.recourse_points.iter().any(|x| b.contains(x))
}

/// Enumerated boxes: disjoint, confined, non-increasing, and complete when exhausted.
/// Returns the enumeration's boxes and whether it was exhausted.
pub fn check_enumeration(
    inst: &Instance,
    rs: &RestrictionSet,
    truth: &OracleResult,
    max_boxes: usize,
) -> Result<(Vec<IntBox>, bool), String> {
    let p = &inst.lowered;
    let e = enumerate_confined_boxes(&p.model, &p.classifier, rs, max_boxes, &VerifyOptions::default())
        .map_err(|e| e.to_string())?;
    let boxes: Vec<IntBox> = e.boxes.iter().map(|b| b.bx.clone()).collect();
    for (i, b) in boxes.iter().enumerate() {
        if !confined_by_oracle(truth, b) {
            return Err(format!("box {i} {b:?} holds a recourse point\n{}", inst.json));
        }
        if box_size(b, &p.model) != e.boxes[i].size {
            return Err(format!("box {i} reports the wrong size"));
        }
        for (k, c) in boxes.iter().enumerate().skip(i + 1) {
            if !b.is_disjoint(c) {
                return Err(format!("boxes {i} and {k} overlap\n{}", inst.json));
            }
        }
    }
    if e.boxes.windows(2).any(|w| w[0].size < w[1].size) {
        return Err(format!("sizes increase\n{}", inst.json));
    }
    if e.exhausted {
        if let Some(x) = truth.confined_points.iter().find(|x| !boxes.iter().any(|b| b.contains(x))) {
            return Err(format!("confined point {x:?} left uncovered\n{}", inst.json));
        }
    }
    Ok((boxes, e.exhausted))
}

/// Coverage curve: monotone, bounded by the oracle's confined fraction, and
/// equal to it when the enumeration was exhausted.
pub fn check_coverage(inst: &Instance, truth: &OracleResult, boxes: &[IntBox], exhausted: bool) -> Result<(), String> {
    let c = coverage_lower_bound(&inst.lowered.model, boxes, 0).map_err(|e| e.to_string())?;
    let total = truth.confined_points.len() + truth.recourse_points.len();
    let exact = if total == 0 {
        Rational::zero()
    } else {
        rational::ratio(truth.confined_points.len() as i64, total as i64)
    };
    if c.fractions.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("curve decreases\n{}", inst.json));
    }
    if let Some(v) = c.fractions.iter().find(|v| **v > exact) {
        return Err(format!("curve point {} above {}\n{}", rational::to_string(v), rational::to_string(&exact), inst.json));
    }
    if exhausted && !boxes.is_empty() && c.fractions.last() != Some(&exact) {
        return Err(format!("final point differs from the confined fraction\n{}", inst.json));
    }
    Ok(())
}
