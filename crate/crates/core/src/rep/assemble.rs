use num_traits::Zero;

use super::{domain, RepError, Restriction, VarRef};
use crate::lp::{LinearSystem, Row};
use crate::model::{ActionModel, Constraint, ConstraintKind, IntBox, LinearClassifier, Scope, Sense};
use crate::rational::{int, Rational};

/// Why a row exists. Box rows carry the only `(u, l)`-dependent right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRole {
    Classifier,
    FeatureSpace { feature: usize },
    Constraint { index: usize },
    ActionBound { feature: usize },
    BoxUpper { feature: usize },
    BoxLower { feature: usize },
    Fixing { var: VarRef },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepLayout {
    pub system: LinearSystem,
    pub roles: Vec<RowRole>,
}

/// Index of variable `x_j` (`a_j` is offset by `d`).
fn col(d: usize, scope: Scope, j: usize) -> Vec<usize> {
    match scope {
        Scope::X => vec![j],
        Scope::A => vec![d + j],
        Scope::XPlusA => vec![j, d + j],
    }
}

struct Builder {
    d: usize,
    system: LinearSystem,
    roles: Vec<RowRole>,
}

impl Builder {
    fn push(&mut self, coeffs: Vec<(usize, Rational)>, rhs: Rational, role: RowRole, label: String) {
        self.system.push(Row::new(coeffs, rhs).labeled(label));
        self.roles.push(role);
    }

    /// `Σ terms (sense) rhs` as one or two `≤` rows.
    fn linear(&mut self, scope: Scope, terms: &[(usize, i64)], sense: Sense, rhs: i64, role: RowRole, label: &str) {
        let coeffs: Vec<(usize, Rational)> = terms
            .iter()
            .flat_map(|&(j, c)| col(self.d, scope, j).into_iter().map(move |v| (v, int(c))))
            .collect();
        if matches!(sense, Sense::Le | Sense::Eq) {
            self.push(coeffs.clone(), int(rhs), role, format!("{label} (<=)"));
        }
        if matches!(sense, Sense::Ge | Sense::Eq) {
            let neg = coeffs.into_iter().map(|(v, c)| (v, -c)).collect();
            self.push(neg, int(-rhs), role, format!("{label} (>=)"));
        }
    }
}

/// The recourse existence system for `box` under restriction `r`.
pub fn assemble_rep(
    m: &ActionModel,
    f: &LinearClassifier,
    b: &IntBox,
    r: &Restriction,
) -> Result<LinearSystem, RepError> {
    assemble_rep_layout(m, f, b, r).map(|l| l.system)
}

pub fn assemble_rep_layout(
    m: &ActionModel,
    f: &LinearClassifier,
    b: &IntBox,
    r: &Restriction,
) -> Result<RepLayout, RepError> {
    let d = m.dim();
    if b.dim() != d {
        return Err(RepError::BoxOutsideRegion);
    }
    if let Some((v, _)) = r.fixed.iter().find(|(v, _)| v.feature >= d) {
        return Err(RepError::UndeclaredVariable(*v));
    }
    let mut names: Vec<String> = m.features.iter().map(|f| format!("x[{}]", f.name)).collect();
    names.extend(m.features.iter().map(|f| format!("a[{}]", f.name)));
    let mut bld = Builder {
        d,
        system: LinearSystem::new(names),
        roles: Vec::new(),
    };

    // desirability: -w·x - w·a <= b
    let coeffs: Vec<(usize, Rational)> = f
        .weights
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .flat_map(|(j, w)| [(j, -w.clone()), (d + j, -w.clone())])
        .collect();
    bld.push(coeffs, f.intercept.clone(), RowRole::Classifier, "classifier".into());

    // feature space on x + a; implied when the action is pinned to zero
    for (j, feat) in m.features.iter().enumerate() {
        if feat.action_bounds() == (Some(0), Some(0)) {
            continue;
        }
        let role = RowRole::FeatureSpace { feature: j };
        bld.linear(Scope::XPlusA, &[(j, 1)], Sense::Le, feat.upper, role, &format!("{} upper", feat.name));
        bld.linear(Scope::XPlusA, &[(j, 1)], Sense::Ge, feat.lower, role, &format!("{} lower", feat.name));
    }

    for scope in [Scope::XPlusA, Scope::X] {
        for (ci, c) in m.constraints.iter().enumerate().filter(|(_, c)| c.scope == scope) {
            constraint_rows(&mut bld, m, ci, c);
        }
    }

    for (j, feat) in m.features.iter().enumerate() {
        let (lo, hi) = feat.action_bounds();
        let role = RowRole::ActionBound { feature: j };
        if let Some(hi) = hi {
            bld.linear(Scope::A, &[(j, 1)], Sense::Le, hi, role, &format!("{} action upper", feat.name));
        }
        if let Some(lo) = lo {
            bld.linear(Scope::A, &[(j, 1)], Sense::Ge, lo, role, &format!("{} action lower", feat.name));
        }
    }
    for (ci, c) in m.constraints.iter().enumerate().filter(|(_, c)| c.scope == Scope::A) {
        constraint_rows(&mut bld, m, ci, c);
    }

    for (j, feat) in m.features.iter().enumerate() {
        bld.push(vec![(j, int(1))], int(b.u[j]), RowRole::BoxUpper { feature: j }, format!("{} <= u", feat.name));
        bld.push(vec![(j, int(-1))], int(-b.l[j]), RowRole::BoxLower { feature: j }, format!("{} >= l", feat.name));
    }

    for (v, s) in &r.fixed {
        let role = RowRole::Fixing { var: *v };
        bld.linear(v.scope, &[(v.feature, 1)], Sense::Eq, *s, role, &format!("fix {}", v.describe(m)));
    }

    Ok(RepLayout {
        system: bld.system,
        roles: bld.roles,
    })
}

fn constraint_rows(bld: &mut Builder, m: &ActionModel, ci: usize, c: &Constraint) {
    let role = RowRole::Constraint { index: ci };
    let label = format!("constraint {ci} {:?}", c.kind);
    match c.kind {
        ConstraintKind::IfThen => {
            let ant = c.operands[0].feature;
            let cons = c.operands[1];
            let (lo, hi) = domain(m, VarRef::new(c.scope, cons.feature));
            let (elo, ehi) = if cons.coef >= 0 {
                (cons.coef * lo, cons.coef * hi)
            } else {
                (cons.coef * hi, cons.coef * lo)
            };
            // v(ant) = 1  =>  coef * v(cons) (sense) rhs
            if matches!(c.sense, Sense::Ge | Sense::Eq) {
                let big_m = c.rhs - elo;
                if big_m > 0 {
                    let terms = [(cons.feature, -cons.coef), (ant, big_m)];
                    bld.linear(c.scope, &terms, Sense::Le, big_m - c.rhs, role, &format!("{label} (>=)"));
                }
            }
            if matches!(c.sense, Sense::Le | Sense::Eq) {
                let big_m = ehi - c.rhs;
                if big_m > 0 {
                    let terms = [(cons.feature, cons.coef), (ant, big_m)];
                    bld.linear(c.scope, &terms, Sense::Le, c.rhs + big_m, role, &format!("{label} (<=)"));
                }
            }
        }
        _ => {
            let terms: Vec<(usize, i64)> = c.operands.iter().map(|o| (o.feature, o.coef)).collect();
            bld.linear(c.scope, &terms, c.sense, c.rhs, role, &label);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;
    use crate::rational::ratio;

    fn one_d() -> (ActionModel, LinearClassifier) {
        let p = parse_problem(
            r#"{"classifier": {"weights": [1], "intercept": -6},
                "features": [{"name": "x", "lower": 0, "upper": 10, "actionability": "immutable"}]}"#,
        )
        .unwrap();
        (p.model, p.classifier)
    }

    fn rows(s: &LinearSystem) -> Vec<(Vec<(usize, Rational)>, Rational)> {
        let mut v: Vec<_> = s.rows.iter().map(|r| (r.coeffs.clone(), r.rhs.clone())).collect();
        v.sort();
        v
    }

    #[test]
    fn one_dimensional_system_has_five_rows() {
        let (m, f) = one_d();
        let s = assemble_rep(&m, &f, &IntBox::new(vec![0], vec![5]), &Restriction::default()).unwrap();
        let mut expected = vec![
            (vec![(0, int(1))], int(5)),
            (vec![(0, int(-1))], int(0)),
            (vec![(1, int(1))], int(0)),
            (vec![(1, int(-1))], int(0)),
            (vec![(0, int(-1)), (1, int(-1))], int(-6)),
        ];
        expected.sort();
        assert_eq!(rows(&s), expected);
    }

    #[test]
    fn box_only_moves_rhs() {
        let (m, f) = one_d();
        let a = assemble_rep(&m, &f, &IntBox::new(vec![0], vec![5]), &Restriction::default()).unwrap();
        let b = assemble_rep(&m, &f, &IntBox::new(vec![2], vec![10]), &Restriction::default()).unwrap();
        assert_eq!(a.num_rows(), b.num_rows());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.coeffs, rb.coeffs);
        }
        assert!(b.rows.iter().any(|r| r.coeffs == vec![(0, int(1))] && r.rhs == int(10)));
    }

    #[test]
    fn fixing_rows_are_paired() {
        let p = parse_problem(
            r#"{"classifier": {"weights": [1, 0], "intercept": "-0.5"},
                "features": [
                  {"name": "x1", "lower": 0, "upper": 1, "actionability": "free"},
                  {"name": "x2", "lower": 0, "upper": 10, "actionability": "free"}],
                "constraints": [{"kind": "scaled_linkage", "scope": "a",
                  "operands": [{"feature": "x2", "scale": 1}, {"feature": "x1", "scale": 11}], "sense": "eq", "bound": 0}],
                "region": {"fixed": {"x1": 0}, "bounds": {"x2": [5, 10]}}}"#,
        )
        .unwrap();
        let r = Restriction::new(vec![(VarRef::new(Scope::A, 0), 1)]);
        let s = assemble_rep(&p.model, &p.classifier, &p.model.full_box(), &r).unwrap();
        assert!(s.rows.iter().any(|row| row.coeffs == vec![(2, int(1))] && row.rhs == int(1)));
        assert!(s.rows.iter().any(|row| row.coeffs == vec![(2, int(-1))] && row.rhs == int(-1)));
        assert!(s.rows[0].rhs == ratio(-1, 2));
    }

    #[test]
    fn undeclared_fixing_is_rejected() {
        let (m, f) = one_d();
        let r = Restriction::new(vec![(VarRef::new(Scope::A, 3), 0)]);
        assert!(matches!(
            assemble_rep(&m, &f, &m.full_box(), &r),
            Err(RepError::UndeclaredVariable(_))
        ));
    }
}
