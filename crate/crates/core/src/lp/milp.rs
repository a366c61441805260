use num_traits::Zero;

use super::{optimize_with, LinearSystem, LpError, Optimization, Row, Sense, SolveOptions};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntegerOutcome {
    Optimal { point: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

const NODE_LIMIT: usize = 200_000;

/// Depth-first branch and bound maximizing `objective · x` with `integer[j]`
/// variables restricted to integers.
pub fn maximize_integer(
    s: &LinearSystem,
    objective: &[Rational],
    integer: &[bool],
    opts: &SolveOptions,
) -> Result<IntegerOutcome, LpError> {
    if integer.len() != s.num_vars() {
        return Err(LpError::LengthMismatch {
            expected: s.num_vars(),
            found: integer.len(),
        });
    }
    let trivial_objective = objective.iter().all(Zero::is_zero);
    let mut incumbent: Option<(Vec<Rational>, Rational)> = None;
    let mut stack: Vec<Vec<Row>> = vec![Vec::new()];
    let mut nodes = 0usize;
    while let Some(extra) = stack.pop() {
        nodes += 1;
        if nodes > NODE_LIMIT {
            return Err(LpError::NodeLimit(NODE_LIMIT));
        }
        let mut sys = s.clone();
        sys.rows.extend(extra.iter().cloned());
        let (point, value) = match optimize_with(&sys, objective, Sense::Maximize, opts)? {
            Optimization::Infeasible(_) => continue,
            Optimization::Unbounded { .. } => return Ok(IntegerOutcome::Unbounded),
            Optimization::Optimal { point, value, .. } => (point, value),
        };
        if let Some((_, best)) = &incumbent {
            if value <= *best {
                continue;
            }
        }
        let fractional = (0..point.len()).find(|&j| integer[j] && !rational::is_integer(&point[j]));
        match fractional {
            None => {
                incumbent = Some((point, value));
                if trivial_objective {
                    break;
                }
            }
            Some(j) => {
                let floor = point[j].floor();
                let ceil = point[j].ceil();
                let mut up = extra.clone();
                up.push(Row::new([(j, -Rational::from_integer(1.into()))], -ceil));
                let mut down = extra;
                down.push(Row::new([(j, Rational::from_integer(1.into()))], floor));
                stack.push(up);
                stack.push(down);
            }
        }
    }
    Ok(match incumbent {
        Some((point, value)) => IntegerOutcome::Optimal { point, value },
        None => IntegerOutcome::Infeasible,
    })
}
