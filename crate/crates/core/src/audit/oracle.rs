//! Exhaustive ground truth for small instances.
//!
//! Every region point is tried against every integer action, with no linear
//! programming involved. Confined boxes are then found by scanning all boxes
//! against a prefix-sum table of recourse points.

use num_traits::Zero;
use serde::Serialize;

use super::{eval, AuditError};
use crate::model::{box_size, ActionModel, IntBox, LinearClassifier, Scope};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    pub points: u128,
    pub actions_per_point: u128,
    pub boxes: u128,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            points: 1_000_000,
            actions_per_point: 100_000,
            boxes: 1_000_000,
        }
    }
}

/// How the largest confined box was searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoxSearch {
    Exhaustive,
    /// Corners restricted to a lattice of this stride; the size is a lower bound.
    SubGrid { stride: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub confined_points: Vec<Vec<i64>>,
    pub recourse_points: Vec<Vec<i64>>,
    /// Largest confined box, ties to the smallest `(l, u)`.
    pub largest_box: Option<IntBox>,
    pub largest_confined_box_size: Option<Rational>,
    pub box_search: BoxSearch,
}

impl OracleResult {
    /// Region has no confined point.
    pub fn is_responsive(&self) -> bool {
        self.confined_points.is_empty()
    }

    /// Region has no recourse point.
    pub fn is_confined(&self) -> bool {
        self.recourse_points.is_empty()
    }
}

fn span(lo: i64, hi: i64) -> u128 {
    if hi < lo {
        0
    } else {
        (hi - lo) as u128 + 1
    }
}

/// Row-major iteration over an integer box, last coordinate fastest.
fn for_each_point(b: &IntBox, mut visit: impl FnMut(&[i64])) {
    if b.is_empty() {
        return;
    }
    let d = b.dim();
    let mut x = b.l.clone();
    loop {
        visit(&x);
        let mut k = d;
        loop {
            if k == 0 {
                return;
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

struct ActionSearch<'a> {
    m: &'a ActionModel,
    f: &'a LinearClassifier,
    x: &'a [i64],
    ranges: Vec<(i64, i64)>,
    /// Best score reachable from features `j..`.
    tail_best: Vec<Rational>,
    /// Constraints that can be evaluated once feature `j` is assigned.
    ready: Vec<Vec<usize>>,
    a: Vec<i64>,
}

impl ActionSearch<'_> {
    fn dfs(&mut self, j: usize, partial: &Rational) -> bool {
        let d = self.x.len();
        if partial + &self.tail_best[j] < Rational::zero() {
            return false;
        }
        if j == d {
            return eval::is_recourse_action(self.m, self.f, self.x, &self.a);
        }
        let (lo, hi) = self.ranges[j];
        let w = &self.f.weights[j];
        for v in lo..=hi {
            self.a[j] = v;
            // Later features are still zero; only constraints whose features are all assigned are checked.
            let ok = self.ready[j]
                .iter()
                .all(|&ci| eval::constraint_holds(&self.m.constraints[ci], self.x, &self.a));
            if ok && self.dfs(j + 1, &(partial + w * rational::int(self.x[j] + v))) {
                return true;
            }
        }
        self.a[j] = 0;
        false
    }
}

/// Whether some integer action gives `x` recourse, by enumeration.
///
/// `x` is assumed to be a feasible region point.
pub fn brute_force_recourse(
    m: &ActionModel,
    f: &LinearClassifier,
    x: &[i64],
    cap: u128,
) -> Result<bool, AuditError> {
    let d = m.dim();
    let ranges: Vec<(i64, i64)> = m
        .features
        .iter()
        .enumerate()
        .map(|(j, feat)| {
            let (al, ah) = feat.action_bounds();
            let lo = al.unwrap_or(i64::MIN / 4).max(feat.lower - x[j]);
            let hi = ah.unwrap_or(i64::MAX / 4).min(feat.upper - x[j]);
            (lo, hi)
        })
        .collect();
    let total = ranges.iter().fold(1u128, |acc, &(l, h)| acc.saturating_mul(span(l, h)));
    if total == 0 {
        return Ok(false);
    }
    if total > cap {
        return Err(AuditError::OracleCap {
            what: "actions per point",
            size: total,
            cap,
        });
    }
    let mut tail_best = vec![Rational::zero(); d + 1];
    tail_best[d] = f.intercept.clone();
    for j in (0..d).rev() {
        let (lo, hi) = ranges[j];
        let w = &f.weights[j];
        let best = std::cmp::max(w * rational::int(x[j] + lo), w * rational::int(x[j] + hi));
        tail_best[j] = &tail_best[j + 1] + best;
    }
    let mut ready = vec![Vec::new(); d];
    for (ci, c) in m.constraints.iter().enumerate() {
        if c.scope == Scope::X {
            continue;
        }
        if let Some(last) = c.features().max() {
            ready[last].push(ci);
        }
    }
    let mut search = ActionSearch {
        m,
        f,
        x,
        ranges,
        tail_best,
        ready,
        a: vec![0; d],
    };
    // the intercept is folded into `tail_best[d]`
    Ok(search.dfs(0, &Rational::zero()))
}

/// Lattice `lo, lo + stride, ...` up to `hi`, always including `hi`.
fn corners(lo: i64, hi: i64, stride: i64) -> Vec<i64> {
    let mut v: Vec<i64> = (0..).map(|k| lo + k * stride).take_while(|&c| c <= hi).collect();
    if v.last() != Some(&hi) {
        v.push(hi);
    }
    v
}

fn box_count(cands: &[Vec<i64>]) -> u128 {
    cands
        .iter()
        .map(|c| {
            let n = c.len() as u128;
            n * (n + 1) / 2
        })
        .fold(1u128, |a, b| a.saturating_mul(b))
}

/// Dense `d`-dimensional prefix sums of an indicator over the region grid.
struct PrefixTable {
    lo: Vec<i64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    sums: Vec<u64>,
}

impl PrefixTable {
    fn new(region: &IntBox, marked: &[Vec<i64>]) -> Self {
        let d = region.dim();
        // one leading zero slab per axis
        let dims: Vec<usize> = (0..d).map(|j| (region.u[j] - region.l[j] + 2) as usize).collect();
        let mut strides = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * dims[j + 1];
        }
        let total: usize = dims.iter().product();
        let mut sums = vec![0u64; total];
        for p in marked {
            let idx: usize = (0..d).map(|j| (p[j] - region.l[j] + 1) as usize * strides[j]).sum();
            sums[idx] += 1;
        }
        for j in 0..d {
            for idx in 0..total {
                if (idx / strides[j]) % dims[j] > 0 {
                    sums[idx] += sums[idx - strides[j]];
                }
            }
        }
        PrefixTable {
            lo: region.l.clone(),
            dims,
            strides,
            sums,
        }
    }

    /// Number of marked points in `b`, by inclusion and exclusion over corners.
    /// Single-value axes have a zero lower slab and are skipped.
    fn count(&self, b: &IntBox) -> i64 {
        let d = self.dims.len();
        let active: Vec<usize> = (0..d).filter(|&j| self.dims[j] > 2).collect();
        let upper: usize = (0..d).map(|j| (b.u[j] - self.lo[j] + 1) as usize * self.strides[j]).sum();
        let mut total = 0i64;
        for mask in 0u64..(1u64 << active.len()) {
            let mut idx = upper;
            for (bit, &j) in active.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    idx -= (b.u[j] - b.l[j] + 1) as usize * self.strides[j];
                }
            }
            let v = self.sums[idx] as i64;
            if mask.count_ones() % 2 == 0 {
                total += v;
            } else {
                total -= v;
            }
        }
        total
    }
}

const TABLE_CAP: u128 = 1 << 24;

/// Classifies every region point and finds the largest box free of recourse points.
pub fn brute_force_oracle(m: &ActionModel, f: &LinearClassifier, caps: &OracleCaps) -> Result<OracleResult, AuditError> {
    let region = m.full_box();
    let grid = region.volume();
    if grid > caps.points {
        return Err(AuditError::OracleCap {
            what: "region points",
            size: grid,
            cap: caps.points,
        });
    }
    let mut confined_points = Vec::new();
    let mut recourse_points = Vec::new();
    let mut failure = None;
    for_each_point(&region, |x| {
        if failure.is_some() || !eval::is_feasible_point(m, x) {
            return;
        }
        match brute_force_recourse(m, f, x, caps.actions_per_point) {
            Ok(true) => recourse_points.push(x.to_vec()),
            Ok(false) => confined_points.push(x.to_vec()),
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }

    let d = m.dim();
    let widest = (0..d).map(|j| region.u[j] - region.l[j]).max().unwrap_or(0);
    let mut stride = 1i64;
    let cands = loop {
        let c: Vec<Vec<i64>> = (0..d).map(|j| corners(region.l[j], region.u[j], stride)).collect();
        let n = box_count(&c);
        if n <= caps.boxes {
            break c;
        }
        if stride > widest {
            return Err(AuditError::OracleCap {
                what: "boxes",
                size: n,
                cap: caps.boxes,
            });
        }
        stride += 1;
    };
    let table_size = (0..d).fold(1u128, |a, j| a.saturating_mul(span(region.l[j], region.u[j]) + 1));
    if table_size > TABLE_CAP {
        return Err(AuditError::OracleCap {
            what: "prefix table cells",
            size: table_size,
            cap: TABLE_CAP,
        });
    }
    let box_search = if stride == 1 {
        BoxSearch::Exhaustive
    } else {
        BoxSearch::SubGrid { stride }
    };

    let table = PrefixTable::new(&region, &recourse_points);
    let mut best: Option<(Rational, IntBox)> = None;
    // odometer over (l_j, u_j) pairs per feature, lexicographic in (l, u)
    let pairs: Vec<Vec<(i64, i64)>> = cands
        .iter()
        .map(|c| {
            let mut v = Vec::new();
            for (i, &l) in c.iter().enumerate() {
                for &u in &c[i..] {
                    v.push((l, u));
                }
            }
            v
        })
        .collect();
    let mut idx = vec![0usize; d];
    loop {
        let b = IntBox::new(
            (0..d).map(|j| pairs[j][idx[j]].0).collect(),
            (0..d).map(|j| pairs[j][idx[j]].1).collect(),
        );
        if table.count(&b) == 0 {
            let size = box_size(&b, m);
            let better = match &best {
                None => true,
                Some((s, bb)) => size > *s || (size == *s && (&b.l, &b.u) < (&bb.l, &bb.u)),
            };
            if better {
                best = Some((size, b));
            }
        }
        let mut k = d;
        let done = loop {
            if k == 0 {
                break true;
            }
            k -= 1;
            if idx[k] + 1 < pairs[k].len() {
                idx[k] += 1;
                break false;
            }
            idx[k] = 0;
        };
        if done {
            break;
        }
    }

    Ok(OracleResult {
        confined_points,
        recourse_points,
        largest_confined_box_size: best.as_ref().map(|(s, _)| s.clone()),
        largest_box: best.map(|(_, b)| b),
        box_search,
    })
}
