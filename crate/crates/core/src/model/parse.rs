use std::collections::{BTreeMap, HashSet};

use serde::Deserialize;
use serde_json::Value;

use super::{
    ActionModel, Actionability, Constraint, ConstraintKind, Direction, FeatureSpec, LinearClassifier, ModelError,
    Operand, Region, Scope, Sense,
};
use crate::rational::{self, Rational};

/// A parsed problem file: classifier, action model and optional extra regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub classifier: LinearClassifier,
    pub model: ActionModel,
    /// Additional regions to audit; empty means only `model.region`.
    pub regions: Vec<Region>,
}

impl Problem {
    pub fn lowered(&self) -> Result<Problem, ModelError> {
        Ok(Problem {
            model: super::lower_encodings(&self.model)?,
            ..self.clone()
        })
    }

    /// The audited region set: the extra regions if any, else the main region.
    pub fn region_set(&self) -> Vec<Region> {
        if self.regions.is_empty() {
            vec![self.model.region.clone()]
        } else {
            self.regions.clone()
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(default)]
    #[allow(dead_code)]
    name: Option<String>,
    classifier: RawClassifier,
    features: Vec<RawFeature>,
    #[serde(default)]
    constraints: Vec<RawConstraint>,
    #[serde(default)]
    region: RawRegion,
    #[serde(default)]
    regions: Vec<RawRegion>,
}

#[derive(Deserialize, Default, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Desired {
    #[default]
    Positive,
    Negative,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassifier {
    weights: Vec<Value>,
    intercept: Value,
    #[serde(default)]
    desired: Desired,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeature {
    name: String,
    lower: Value,
    upper: Value,
    actionability: Actionability,
    #[serde(default)]
    step: Option<RawStep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    #[serde(default)]
    lower: Option<Value>,
    #[serde(default)]
    upper: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    kind: ConstraintKind,
    #[serde(default)]
    scope: Option<Scope>,
    operands: Vec<RawOperand>,
    #[serde(default)]
    k: Option<Value>,
    #[serde(default)]
    sense: Option<Sense>,
    #[serde(default)]
    bound: Option<Value>,
    #[serde(default)]
    encoding_group: Option<String>,
    #[serde(default)]
    direction: Option<Direction>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperand {
    feature: String,
    #[serde(default)]
    sign: Option<Value>,
    #[serde(default)]
    scale: Option<Value>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    fixed: BTreeMap<String, Value>,
    #[serde(default)]
    bounds: BTreeMap<String, (Value, Value)>,
}

fn exact(v: &Value) -> Result<Rational, ModelError> {
    rational::from_json(v).map_err(|e| ModelError::Parse(e.to_string()))
}

fn integer(v: &Value) -> Result<i64, ModelError> {
    let r = exact(v)?;
    rational::to_i64(&r).ok_or_else(|| ModelError::NonInteger(v.to_string()))
}

fn opt_integer(v: &Option<Value>) -> Result<Option<i64>, ModelError> {
    v.as_ref().map(integer).transpose()
}

/// Parses and validates a JSON problem description. Encodings are kept as-is.
pub fn parse_problem(text: &str) -> Result<Problem, ModelError> {
    let raw: RawProblem = serde_json::from_str(text)
        .map_err(|e| ModelError::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    build(raw)
}

/// Builds the action model from an already-parsed JSON value.
pub fn build_action_model(spec: &Value) -> Result<Problem, ModelError> {
    let raw: RawProblem = serde_json::from_value(spec.clone()).map_err(|e| ModelError::Parse(e.to_string()))?;
    build(raw)
}

fn build(raw: RawProblem) -> Result<Problem, ModelError> {
    let mut names = HashSet::new();
    let mut features = Vec::with_capacity(raw.features.len());
    for f in &raw.features {
        if !names.insert(f.name.clone()) {
            return Err(ModelError::DuplicateFeature(f.name.clone()));
        }
        let lower = integer(&f.lower)?;
        let upper = integer(&f.upper)?;
        if lower > upper {
            return Err(ModelError::BoundViolation {
                name: f.name.clone(),
                lower,
                upper,
            });
        }
        let (step_lower, step_upper) = match &f.step {
            Some(s) => (opt_integer(&s.lower)?, opt_integer(&s.upper)?),
            None => (None, None),
        };
        let spec = FeatureSpec {
            name: f.name.clone(),
            lower,
            upper,
            actionability: f.actionability,
            step_lower,
            step_upper,
        };
        if spec.actionability == Actionability::Immutable
            && (step_lower.unwrap_or(0) != 0 || step_upper.unwrap_or(0) != 0)
        {
            return Err(ModelError::ImmutableWithActions(spec.name));
        }
        if let (Some(l), Some(u)) = spec.action_bounds() {
            if l > u {
                return Err(ModelError::EmptyActionBounds(spec.name));
            }
        }
        features.push(spec);
    }

    let index = |name: &str| -> Result<usize, ModelError> {
        features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| ModelError::UnknownFeature(name.to_string()))
    };

    let mut constraints = Vec::with_capacity(raw.constraints.len());
    for (ci, c) in raw.constraints.iter().enumerate() {
        let mut operands = Vec::with_capacity(c.operands.len());
        for op in &c.operands {
            let feature = index(&op.feature)?;
            let coef = match (&op.sign, &op.scale) {
                (Some(_), Some(_)) => {
                    return Err(ModelError::InvalidConstraint(format!(
                        "constraint {ci}: operand `{}` has both sign and scale",
                        op.feature
                    )))
                }
                (Some(s), None) | (None, Some(s)) => integer(s)?,
                (None, None) => 1,
            };
            operands.push(Operand { feature, coef });
        }
        let default_sense = match c.kind {
            ConstraintKind::KHot | ConstraintKind::OneHot => Sense::Eq,
            _ => Sense::Le,
        };
        let rhs = match c.kind {
            ConstraintKind::KHot => match (&c.k, &c.bound) {
                (Some(k), _) | (None, Some(k)) => integer(k)?,
                (None, None) => {
                    return Err(ModelError::InvalidConstraint(format!("constraint {ci}: k_hot needs `k`")))
                }
            },
            ConstraintKind::OneHot => 1,
            _ => opt_integer(&c.bound)?.unwrap_or(0),
        };
        let constraint = Constraint {
            kind: c.kind,
            scope: c.scope.unwrap_or(Scope::XPlusA),
            operands,
            sense: c.sense.unwrap_or(default_sense),
            rhs,
            encoding_group: c.encoding_group.clone(),
            direction: c.direction,
        };
        validate_constraint(ci, &constraint, &features)?;
        constraints.push(constraint);
    }

    let main_region = build_region(&raw.region, &features, &index)?;
    let regions = raw
        .regions
        .iter()
        .map(|r| build_region(r, &features, &index))
        .collect::<Result<Vec<_>, _>>()?;

    let d = features.len();
    if raw.classifier.weights.len() != d {
        return Err(ModelError::WeightCount {
            expected: d,
            found: raw.classifier.weights.len(),
        });
    }
    let mut weights = raw.classifier.weights.iter().map(exact).collect::<Result<Vec<_>, _>>()?;
    let mut intercept = exact(&raw.classifier.intercept)?;
    if raw.classifier.desired == Desired::Negative {
        weights.iter_mut().for_each(|w| *w = -w.clone());
        intercept = -intercept;
    }

    let model = ActionModel {
        features,
        constraints,
        region: main_region,
    };
    super::lower::check_encodings(&model)?;
    Ok(Problem {
        classifier: LinearClassifier { weights, intercept },
        model,
        regions,
    })
}

fn build_region(
    raw: &RawRegion,
    features: &[FeatureSpec],
    index: &impl Fn(&str) -> Result<usize, ModelError>,
) -> Result<Region, ModelError> {
    let mut lower: Vec<i64> = features.iter().map(|f| f.lower).collect();
    let mut upper: Vec<i64> = features.iter().map(|f| f.upper).collect();
    for (name, (lo, hi)) in &raw.bounds {
        let j = index(name)?;
        lower[j] = integer(lo)?;
        upper[j] = integer(hi)?;
    }
    for (name, v) in &raw.fixed {
        let j = index(name)?;
        let v = integer(v)?;
        lower[j] = v;
        upper[j] = v;
    }
    for (j, f) in features.iter().enumerate() {
        if lower[j] < f.lower || upper[j] > f.upper || lower[j] > upper[j] {
            return Err(ModelError::RegionOutsideFeatureSpace(f.name.clone()));
        }
    }
    Ok(Region {
        name: raw.name.clone(),
        lower,
        upper,
    })
}

fn validate_constraint(ci: usize, c: &Constraint, features: &[FeatureSpec]) -> Result<(), ModelError> {
    let fail = |msg: &str| Err(ModelError::InvalidConstraint(format!("constraint {ci} ({:?}): {msg}", c.kind)));
    let unit = c.operands.iter().all(|o| o.coef == 1 || o.coef == -1);
    match c.kind {
        ConstraintKind::IntegerBound => {
            if c.operands.len() != 1 || !unit {
                return fail("needs exactly one operand with sign +1 or -1");
            }
        }
        ConstraintKind::KHot => {
            if c.operands.is_empty() || !unit {
                return fail("operand signs must be +1 or -1");
            }
        }
        ConstraintKind::DirectionalLinkage => {
            if c.operands.len() != 2 || !unit || c.operands[0].feature == c.operands[1].feature {
                return fail("needs two distinct operands with unit signs");
            }
        }
        ConstraintKind::ScaledLinkage => {
            if c.operands.len() < 2 || c.operands.iter().any(|o| o.coef == 0) {
                return fail("needs at least two operands with nonzero integer scales");
            }
        }
        ConstraintKind::IfThen => {
            if c.operands.len() != 2 {
                return fail("needs an antecedent and a consequent operand");
            }
            let ant = &features[c.operands[0].feature];
            let binary = match c.scope {
                Scope::A => matches!(ant.action_bounds(), (Some(l), Some(u)) if l >= 0 && u <= 1),
                _ => ant.lower >= 0 && ant.upper <= 1,
            };
            if !binary {
                return fail("antecedent must be binary");
            }
        }
        ConstraintKind::OneHot | ConstraintKind::Thermometer => {
            if c.operands.len() < 2 {
                return Err(ModelError::SmallEncoding(format!("{ci}")));
            }
            if c.kind == ConstraintKind::OneHot && c.scope != Scope::XPlusA && c.scope != Scope::X {
                return fail("one_hot applies to x or x+a");
            }
        }
    }
    if c.kind != ConstraintKind::Thermometer && c.direction.is_some() {
        return fail("`direction` only applies to thermometer encodings");
    }
    Ok(())
}
