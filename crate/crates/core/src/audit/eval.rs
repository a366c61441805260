//! Direct evaluation of the model on integer points, without building any
//! linear system. Encodings are read in their original form, so this also
//! serves as a cross-check on lowering.

use crate::model::{ActionModel, Constraint, ConstraintKind, Direction, LinearClassifier, Scope, Sense};

fn value(scope: Scope, j: usize, x: &[i64], a: &[i64]) -> i64 {
    match scope {
        Scope::X => x[j],
        Scope::A => a[j],
        Scope::XPlusA => x[j] + a[j],
    }
}

fn compare(lhs: i64, sense: Sense, rhs: i64) -> bool {
    match sense {
        Sense::Le => lhs <= rhs,
        Sense::Ge => lhs >= rhs,
        Sense::Eq => lhs == rhs,
    }
}

/// Whether `c` holds at `(x, a)`. Constraints scoped to `x` ignore `a`.
pub fn constraint_holds(c: &Constraint, x: &[i64], a: &[i64]) -> bool {
    let v = |j: usize| value(c.scope, j, x, a);
    match c.kind {
        ConstraintKind::IfThen => {
            let (ant, cons) = (c.operands[0], c.operands[1]);
            v(ant.feature) != 1 || compare(cons.coef * v(cons.feature), c.sense, c.rhs)
        }
        ConstraintKind::OneHot => {
            c.features().all(|j| (0..=1).contains(&v(j))) && c.features().map(v).sum::<i64>() == 1
        }
        ConstraintKind::Thermometer => {
            let ordered = c.operands.windows(2).all(|p| v(p[1].feature) <= v(p[0].feature));
            ordered && (c.scope == Scope::X || directed(c, a))
        }
        _ => compare(c.operands.iter().map(|o| o.coef * v(o.feature)).sum(), c.sense, c.rhs),
    }
}

/// Inside the region box and every `x`-scoped constraint.
pub fn is_feasible_point(m: &ActionModel, x: &[i64]) -> bool {
    x.len() == m.dim()
        && m.full_box().contains(x)
        && m.constraints_in(Scope::X).all(|c| constraint_holds(c, x, &[]))
}

/// Action limits, `a`-scoped constraints, and feature-space membership of `x + a`.
pub fn is_feasible_action(m: &ActionModel, x: &[i64], a: &[i64]) -> bool {
    if a.len() != m.dim() {
        return false;
    }
    let bounded = m.features.iter().enumerate().all(|(j, f)| {
        let (lo, hi) = f.action_bounds();
        let t = x[j] + a[j];
        lo.is_none_or(|l| a[j] >= l) && hi.is_none_or(|h| a[j] <= h) && f.lower <= t && t <= f.upper
    });
    bounded
        && m.constraints.iter().all(|c| match c.scope {
            Scope::X => c.kind != ConstraintKind::Thermometer || directed(c, a),
            _ => constraint_holds(c, x, a),
        })
}

/// Sign restriction a directed thermometer places on its actions, whatever its scope.
fn directed(c: &Constraint, a: &[i64]) -> bool {
    match c.direction {
        Some(Direction::Increase) => c.features().all(|j| a[j] >= 0),
        Some(Direction::Decrease) => c.features().all(|j| a[j] <= 0),
        None => true,
    }
}

/// `a` is a recourse action for `x`: feasible and reaching the desirable side.
pub fn is_recourse_action(m: &ActionModel, f: &LinearClassifier, x: &[i64], a: &[i64]) -> bool {
    if !is_feasible_action(m, x, a) {
        return false;
    }
    let t: Vec<i64> = x.iter().zip(a).map(|(u, v)| u + v).collect();
    f.is_desirable(&t)
}
