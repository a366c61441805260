//! Fraction of region points covered by a growing list of confined boxes.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{eval, AuditError};
use crate::model::{ActionModel, Constraint, IntBox, Scope};
use crate::rational::Rational;

pub const MONTE_CARLO_SAMPLES: usize = 100_000;

/// Largest feature group enumerated point by point.
const GROUP_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountMethod {
    /// Exact counts over independent feature groups.
    Exact,
    /// Uniform samples from the region box, keeping feasible ones.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    /// Entry `k` covers the first `k + 1` boxes.
    pub fractions: Vec<Rational>,
    pub method: CountMethod,
}

/// Features linked through `x`-scoped constraints, each group sorted.
fn feature_groups(m: &ActionModel) -> Vec<Vec<usize>> {
    let d = m.dim();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for c in m.constraints_in(Scope::X) {
        let fs: Vec<usize> = c.features().collect();
        for w in fs.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; d];
    for j in 0..d {
        let r = find(&mut parent, j);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(j);
    }
    groups
}

struct Group {
    features: Vec<usize>,
    /// Feasible assignments, or `None` for an unconstrained single feature.
    points: Option<Vec<Vec<i64>>>,
}

impl Group {
    fn count(&self, b: &IntBox) -> u128 {
        match &self.points {
            None => {
                let j = self.features[0];
                if b.u[j] < b.l[j] {
                    0
                } else {
                    (b.u[j] - b.l[j]) as u128 + 1
                }
            }
            Some(pts) => pts
                .iter()
                .filter(|p| self.features.iter().zip(p.iter()).all(|(&j, &v)| b.l[j] <= v && v <= b.u[j]))
                .count() as u128,
        }
    }
}

fn exact_groups(m: &ActionModel) -> Option<Vec<Group>> {
    let region = m.full_box();
    let mut out = Vec::new();
    for features in feature_groups(m) {
        let constraints: Vec<&Constraint> = m
            .constraints_in(Scope::X)
            .filter(|c| c.features().any(|j| features.contains(&j)))
            .collect();
        if constraints.is_empty() {
            out.push(Group { features, points: None });
            continue;
        }
        let size = features
            .iter()
            .fold(1u128, |a, &j| a.saturating_mul((region.u[j] - region.l[j]) as u128 + 1));
        if size > GROUP_CAP {
            return None;
        }
        // enumerate the group's sub-box with other coordinates at the region's lower corner
        let mut x = region.l.clone();
        let mut points = Vec::new();
        loop {
            if constraints.iter().all(|c| eval::constraint_holds(c, &x, &[])) {
                points.push(features.iter().map(|&j| x[j]).collect());
            }
            let mut k = features.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                let j = features[k];
                if x[j] < region.u[j] {
                    x[j] += 1;
                    break false;
                }
                x[j] = region.l[j];
            };
            if done {
                break;
            }
        }
        out.push(Group {
            features,
            points: Some(points),
        });
    }
    Some(out)
}

fn check_disjoint(boxes: &[IntBox]) -> Result<(), AuditError> {
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if !boxes[i].is_disjoint(&boxes[j]) {
                return Err(AuditError::OverlappingBoxes(i, j));
            }
        }
    }
    Ok(())
}

/// Lower bound on the share of region points with fixed predictions, per prefix of `boxes`.
pub fn coverage_lower_bound(m: &ActionModel, boxes: &[IntBox], seed: u64) -> Result<Coverage, AuditError> {
    check_disjoint(boxes)?;
    let region = m.full_box();
    let clipped: Vec<IntBox> = boxes.iter().map(|b| b.intersect(&region)).collect();

    if let Some(groups) = exact_groups(m) {
        let count = |b: &IntBox| -> u128 {
            if b.is_empty() {
                return 0;
            }
            groups.iter().fold(1u128, |a, g| a.saturating_mul(g.count(b)))
        };
        let total = count(&region);
        let mut covered = 0u128;
        let fractions = clipped
            .iter()
            .map(|b| {
                covered += count(b);
                ratio_u128(covered, total)
            })
            .collect();
        return Ok(Coverage {
            fractions,
            method: CountMethod::Exact,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut feasible = 0u128;
    let mut hits = vec![0u128; clipped.len()];
    let mut x = vec![0i64; m.dim()];
    for _ in 0..MONTE_CARLO_SAMPLES {
        for (j, v) in x.iter_mut().enumerate() {
            *v = rng.random_range(region.l[j]..=region.u[j]);
        }
        if !eval::is_feasible_point(m, &x) {
            continue;
        }
        feasible += 1;
        if let Some(k) = clipped.iter().position(|b| b.contains(&x)) {
            hits[k] += 1;
        }
    }
    let mut covered = 0u128;
    let fractions = hits
        .iter()
        .map(|h| {
            covered += h;
            ratio_u128(covered, feasible)
        })
        .collect();
    Ok(Coverage {
        fractions,
        method: CountMethod::MonteCarlo {
            samples: MONTE_CARLO_SAMPLES,
            seed,
        },
    })
}

fn ratio_u128(n: u128, d: u128) -> Rational {
    if d == 0 {
        return Rational::zero();
    }
    Rational::new(n.into(), d.into())
}
