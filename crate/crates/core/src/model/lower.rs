use std::collections::HashMap;

use super::{ActionModel, Constraint, ConstraintKind, Direction, ModelError, Operand, Scope, Sense};

/// Rejects features shared by two encodings of the same kind.
pub(crate) fn check_encodings(m: &ActionModel) -> Result<(), ModelError> {
    let mut seen: HashMap<(ConstraintKind, usize), usize> = HashMap::new();
    for (ci, c) in m.constraints.iter().enumerate() {
        if !c.kind.is_encoding() {
            continue;
        }
        if c.operands.len() < 2 {
            return Err(ModelError::SmallEncoding(group_name(c, ci)));
        }
        for f in c.features() {
            if seen.insert((c.kind, f), ci).is_some() {
                return Err(ModelError::OverlappingEncoding {
                    feature: m.features[f].name.clone(),
                    kind: format!("{:?}", c.kind),
                });
            }
        }
    }
    Ok(())
}

fn group_name(c: &Constraint, ci: usize) -> String {
    c.encoding_group.clone().unwrap_or_else(|| format!("#{ci}"))
}

/// Rewrites one-hot and thermometer encodings into canonical constraint kinds.
///
/// One-hot groups become a K-hot equality with `K = 1` plus binary bounds for
/// members whose feature bounds are wider than `{0, 1}`. Thermometers become
/// linkages `v(d[i+1]) ≤ v(d[i])` between consecutive dummies (lowest level
/// first), plus sign bounds on the actions when a direction is given.
pub fn lower_encodings(m: &ActionModel) -> Result<ActionModel, ModelError> {
    check_encodings(m)?;
    let mut out = Vec::with_capacity(m.constraints.len());
    for (ci, c) in m.constraints.iter().enumerate() {
        let group = Some(group_name(c, ci));
        match c.kind {
            ConstraintKind::OneHot => {
                let ops = c.operands.iter().map(|o| Operand { feature: o.feature, coef: 1 }).collect();
                let mut k = Constraint::new(ConstraintKind::KHot, c.scope, ops, Sense::Eq, 1);
                k.encoding_group = group.clone();
                out.push(k);
                for o in &c.operands {
                    let f = &m.features[o.feature];
                    if f.lower < 0 || f.upper > 1 {
                        for (coef, rhs) in [(1, 1), (-1, 0)] {
                            let mut b = Constraint::new(
                                ConstraintKind::IntegerBound,
                                c.scope,
                                vec![Operand { feature: o.feature, coef }],
                                Sense::Le,
                                rhs,
                            );
                            b.encoding_group = group.clone();
                            out.push(b);
                        }
                    }
                }
            }
            ConstraintKind::Thermometer => {
                for pair in c.operands.windows(2) {
                    let ops = vec![
                        Operand { feature: pair[1].feature, coef: 1 },
                        Operand { feature: pair[0].feature, coef: -1 },
                    ];
                    let mut l = Constraint::new(ConstraintKind::DirectionalLinkage, c.scope, ops, Sense::Le, 0);
                    l.encoding_group = group.clone();
                    out.push(l);
                }
                if let Some(dir) = c.direction {
                    for o in &c.operands {
                        let sense = match dir {
                            Direction::Increase => Sense::Ge,
                            Direction::Decrease => Sense::Le,
                        };
                        let mut b = Constraint::new(
                            ConstraintKind::IntegerBound,
                            Scope::A,
                            vec![Operand { feature: o.feature, coef: 1 }],
                            sense,
                            0,
                        );
                        b.encoding_group = group.clone();
                        out.push(b);
                    }
                }
            }
            _ => out.push(c.clone()),
        }
    }
    Ok(ActionModel {
        constraints: out,
        ..m.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;

    fn problem(constraints: &str) -> ActionModel {
        let text = format!(
            r#"{{"classifier": {{"weights": [1, 1, 1], "intercept": 0}},
            "features": [
              {{"name": "d3", "lower": 0, "upper": 1, "actionability": "monotone_increase"}},
              {{"name": "d5", "lower": 0, "upper": 1, "actionability": "monotone_increase"}},
              {{"name": "d7", "lower": 0, "upper": 1, "actionability": "monotone_increase"}}],
            "constraints": {constraints}}}"#
        );
        parse_problem(&text).unwrap().model
    }

    #[test]
    fn one_hot_becomes_k_hot_equality() {
        let m = problem(r#"[{"kind": "one_hot", "operands": [{"feature": "d3"}, {"feature": "d5"}]}]"#);
        let l = lower_encodings(&m).unwrap();
        assert_eq!(l.constraints.len(), 1);
        let c = &l.constraints[0];
        assert_eq!(c.kind, ConstraintKind::KHot);
        assert_eq!((c.sense, c.rhs, c.scope), (Sense::Eq, 1, Scope::XPlusA));
    }

    #[test]
    fn thermometer_becomes_linkages_and_action_signs() {
        let m = problem(
            r#"[{"kind": "thermometer", "direction": "increase",
                 "operands": [{"feature": "d3"}, {"feature": "d5"}, {"feature": "d7"}]}]"#,
        );
        let l = lower_encodings(&m).unwrap();
        let links: Vec<_> = l
            .constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::DirectionalLinkage)
            .map(|c| (c.operands[0].feature, c.operands[1].feature))
            .collect();
        assert_eq!(links, vec![(1, 0), (2, 1)]);
        let bounds = l
            .constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::IntegerBound && c.scope == Scope::A && c.sense == Sense::Ge)
            .count();
        assert_eq!(bounds, 3);
    }

    #[test]
    fn lowering_is_idempotent_and_identity_without_encodings() {
        let m = problem(r#"[{"kind": "thermometer", "operands": [{"feature": "d3"}, {"feature": "d5"}]}]"#);
        let once = lower_encodings(&m).unwrap();
        assert_eq!(lower_encodings(&once).unwrap(), once);
        let plain = problem("[]");
        assert_eq!(lower_encodings(&plain).unwrap(), plain);
    }

    #[test]
    fn rejects_overlapping_and_small_groups() {
        let text = r#"{"classifier": {"weights": [1, 1, 1], "intercept": 0},
            "features": [
              {"name": "a", "lower": 0, "upper": 1, "actionability": "free"},
              {"name": "b", "lower": 0, "upper": 1, "actionability": "free"},
              {"name": "c", "lower": 0, "upper": 1, "actionability": "free"}],
            "constraints": [
              {"kind": "one_hot", "operands": [{"feature": "a"}, {"feature": "b"}]},
              {"kind": "one_hot", "operands": [{"feature": "b"}, {"feature": "c"}]}]}"#;
        assert!(matches!(
            parse_problem(text),
            Err(ModelError::OverlappingEncoding { .. })
        ));
        let small = r#"{"classifier": {"weights": [1], "intercept": 0},
            "features": [{"name": "a", "lower": 0, "upper": 1, "actionability": "free"}],
            "constraints": [{"kind": "one_hot", "operands": [{"feature": "a"}]}]}"#;
        assert!(matches!(parse_problem(small), Err(ModelError::SmallEncoding(_))));
    }
}
