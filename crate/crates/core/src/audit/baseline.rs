use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{eval, point_has_recourse, AuditError, Dataset, PointVerdict};
use crate::lp::{maximize_integer, IntegerOutcome, LinearSystem};
use crate::model::{ActionModel, LinearClassifier, Scope};
use crate::rational::{self, Rational};
use crate::rep::{assemble_rep_layout, Restriction, RestrictionSet, RowRole};
use crate::verifier::{verify_region, VerdictState, VerifyOptions};

pub const DEFAULT_REGION_SAMPLES: usize = 100;
pub const SAMPLE_RETRY_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Data,
    Region,
    Score,
    Rever,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 4] = [
        BaselineMethod::Data,
        BaselineMethod::Region,
        BaselineMethod::Score,
        BaselineMethod::Rever,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMethod::Data => "data",
            BaselineMethod::Region => "region",
            BaselineMethod::Score => "score",
            BaselineMethod::Rever => "rever",
        }
    }
}

impl FromStr for BaselineMethod {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| AuditError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineVerdict {
    Responsive,
    Confined,
    Neither,
    /// No points to examine; not a verdict.
    EmptySample,
    /// Only for the verifier, when it cannot decide.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaselineOutput {
    pub method: BaselineMethod,
    pub output: BaselineVerdict,
    pub sample: Vec<PointVerdict>,
}

#[derive(Debug, Clone, Copy)]
pub struct BaselineOptions {
    pub samples: usize,
    pub seed: u64,
    pub verify: VerifyOptions,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions {
            samples: DEFAULT_REGION_SAMPLES,
            seed: 0,
            verify: VerifyOptions::default(),
        }
    }
}

fn summarize(sample: &[PointVerdict]) -> BaselineVerdict {
    if sample.is_empty() {
        BaselineVerdict::EmptySample
    } else if sample.iter().all(|p| p.has_recourse) {
        BaselineVerdict::Responsive
    } else if sample.iter().all(|p| !p.has_recourse) {
        BaselineVerdict::Confined
    } else {
        BaselineVerdict::Neither
    }
}

/// Uniform draws, with replacement, from the feasible region points.
///
/// Each draw samples the region box and rejects infeasible points.
pub fn sample_region_points(m: &ActionModel, n: usize, seed: u64) -> Result<Vec<Vec<i64>>, AuditError> {
    let region = m.full_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut x = vec![0i64; m.dim()];
    for _ in 0..n {
        let mut accepted = false;
        for _ in 0..SAMPLE_RETRY_CAP {
            for (j, v) in x.iter_mut().enumerate() {
                *v = rng.random_range(region.l[j]..=region.u[j]);
            }
            if eval::is_feasible_point(m, &x) {
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(AuditError::SamplingDensity {
                retries: SAMPLE_RETRY_CAP,
            });
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// The region as a system over `x` alone: box bounds and `x`-scoped constraints.
fn region_system(m: &ActionModel, f: &LinearClassifier) -> Result<LinearSystem, AuditError> {
    let layout = assemble_rep_layout(m, f, &m.full_box(), &Restriction::default())?;
    let mut s = LinearSystem::new(m.features.iter().map(|f| format!("x[{}]", f.name)).collect());
    for (row, role) in layout.system.rows.into_iter().zip(layout.roles) {
        let keep = match role {
            RowRole::BoxUpper { .. } | RowRole::BoxLower { .. } => true,
            RowRole::Constraint { index } => m.constraints[index].scope == Scope::X,
            _ => false,
        };
        if keep {
            s.push(row);
        }
    }
    Ok(s)
}

/// Integral maximizer and minimizer of the score over the region.
pub fn score_extremes(m: &ActionModel, f: &LinearClassifier, opts: &VerifyOptions) -> Result<Vec<Vec<i64>>, AuditError> {
    let s = region_system(m, f)?;
    let integer = vec![true; m.dim()];
    let mut out: Vec<Vec<i64>> = Vec::new();
    for sign in [1i64, -1] {
        let obj: Vec<Rational> = f.weights.iter().map(|w| w * rational::int(sign)).collect();
        match maximize_integer(&s, &obj, &integer, &opts.lp)? {
            IntegerOutcome::Optimal { point, .. } => {
                let x: Vec<i64> = point.iter().map(|v| rational::to_i64(v).unwrap_or(0)).collect();
                if !out.contains(&x) {
                    out.push(x);
                }
            }
            IntegerOutcome::Infeasible => return Ok(Vec::new()),
            IntegerOutcome::Unbounded => unreachable!("region is bounded"),
        }
    }
    Ok(out)
}

fn check_all(
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    points: &[Vec<i64>],
    opts: &VerifyOptions,
) -> Result<Vec<PointVerdict>, AuditError> {
    points.iter().map(|x| point_has_recourse(m, f, rs, x, opts)).collect()
}

/// Runs one auditing method on the model's region.
pub fn run_baseline(
    method: BaselineMethod,
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    data: Option<&Dataset>,
    opts: &BaselineOptions,
) -> Result<BaselineOutput, AuditError> {
    let sample = match method {
        BaselineMethod::Data => {
            let data = data.ok_or(AuditError::MissingDataset)?;
            let inside: Vec<Vec<i64>> = data
                .rows
                .iter()
                .filter(|x| eval::is_feasible_point(m, x))
                .cloned()
                .collect();
            check_all(m, f, rs, &inside, &opts.verify)?
        }
        BaselineMethod::Region => {
            let pts = sample_region_points(m, opts.samples, opts.seed)?;
            check_all(m, f, rs, &pts, &opts.verify)?
        }
        BaselineMethod::Score => {
            let pts = score_extremes(m, f, &opts.verify)?;
            check_all(m, f, rs, &pts, &opts.verify)?
        }
        BaselineMethod::Rever => {
            let v = verify_region(m, f, rs, &opts.verify)?;
            let output = match v.state {
                VerdictState::Responsive => BaselineVerdict::Responsive,
                VerdictState::Confined => BaselineVerdict::Confined,
                VerdictState::Neither => BaselineVerdict::Neither,
                VerdictState::Inconclusive => BaselineVerdict::Inconclusive,
            };
            return Ok(BaselineOutput {
                method,
                output,
                sample: Vec::new(),
            });
        }
    };
    Ok(BaselineOutput {
        method,
        output: summarize(&sample),
        sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;
    use crate::rep::{check_tu_assumptions, select_restrictions, Policy};

    fn one_d() -> (crate::model::Problem, RestrictionSet) {
        let p = parse_problem(
            r#"{"classifier": {"weights": [1], "intercept": -6},
                "features": [{"name": "x", "lower": 0, "upper": 10, "actionability": "immutable"}]}"#,
        )
        .unwrap();
        let rs = select_restrictions(&p.model, &check_tu_assumptions(&p.model), Policy::Exact, 1024).unwrap();
        (p, rs)
    }

    #[test]
    fn score_baseline_checks_both_extremes() {
        let (p, rs) = one_d();
        let out = run_baseline(BaselineMethod::Score, &p.model, &p.classifier, &rs, None, &BaselineOptions::default())
            .unwrap();
        let pts: Vec<_> = out.sample.iter().map(|v| v.point.clone()).collect();
        assert_eq!(pts, vec![vec![10], vec![0]]);
        assert_eq!(out.output, BaselineVerdict::Neither);
    }

    #[test]
    fn data_baseline_misses_the_confined_part() {
        let (p, rs) = one_d();
        let data = Dataset {
            rows: vec![vec![6], vec![7], vec![8], vec![11]],
        };
        let opts = BaselineOptions::default();
        let out = run_baseline(BaselineMethod::Data, &p.model, &p.classifier, &rs, Some(&data), &opts).unwrap();
        assert_eq!(out.output, BaselineVerdict::Responsive);
        assert_eq!(out.sample.len(), 3);
        let empty = Dataset { rows: vec![vec![42]] };
        let out = run_baseline(BaselineMethod::Data, &p.model, &p.classifier, &rs, Some(&empty), &opts).unwrap();
        assert_eq!(out.output, BaselineVerdict::EmptySample);
    }

    #[test]
    fn region_sampling_is_seeded() {
        let (p, _) = one_d();
        let a = sample_region_points(&p.model, 50, 7).unwrap();
        assert_eq!(a, sample_region_points(&p.model, 50, 7).unwrap());
        assert_ne!(a, sample_region_points(&p.model, 50, 8).unwrap());
        assert!(a.iter().all(|x| (0..=10).contains(&x[0])));
    }
}
