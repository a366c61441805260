use serde::Serialize;

use super::{eval, AuditError};
use crate::lp::{maximize_integer, solve_feasibility_with, Feasibility, IntegerOutcome};
use crate::model::{ActionModel, IntBox, LinearClassifier};
use crate::rational::{self, Rational};
use crate::rep::{assemble_rep, RestrictionSet};
use crate::verifier::VerifyOptions;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointVerdict {
    pub point: Vec<i64>,
    pub has_recourse: bool,
    pub action_witness: Option<Vec<i64>>,
}

fn integral(v: &[Rational]) -> Option<Vec<i64>> {
    v.iter()
        .map(|r| if rational::is_integer(r) { rational::to_i64(r) } else { None })
        .collect()
}

/// Recourse for one point, with an integral action when it exists.
///
/// The relaxed system answers first; a fractional solution is resolved by
/// integer branch and bound on the same restriction. Any witness is re-checked
/// against the model directly before it is returned.
pub fn point_has_recourse(
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    x: &[i64],
    opts: &VerifyOptions,
) -> Result<PointVerdict, AuditError> {
    if !eval::is_feasible_point(m, x) {
        return Err(AuditError::PointOutsideRegion(x.to_vec()));
    }
    let d = m.dim();
    let bx = IntBox::new(x.to_vec(), x.to_vec());
    for r in &rs.restrictions {
        let s = assemble_rep(m, f, &bx, r)?;
        let point = match solve_feasibility_with(&s, &opts.lp)? {
            Feasibility::Infeasible(_) => continue,
            Feasibility::Feasible(p) => p,
        };
        let a = match integral(&point[d..]) {
            Some(a) => a,
            None => {
                let zero = vec![Rational::from_integer(0.into()); s.num_vars()];
                match maximize_integer(&s, &zero, &vec![true; s.num_vars()], &opts.lp)? {
                    IntegerOutcome::Optimal { point, .. } => integral(&point[d..]).ok_or(AuditError::WitnessRejected)?,
                    _ => continue,
                }
            }
        };
        if !eval::is_recourse_action(m, f, x, &a) {
            return Err(AuditError::WitnessRejected);
        }
        return Ok(PointVerdict {
            point: x.to_vec(),
            has_recourse: true,
            action_witness: Some(a),
        });
    }
    Ok(PointVerdict {
        point: x.to_vec(),
        has_recourse: false,
        action_witness: None,
    })
}
