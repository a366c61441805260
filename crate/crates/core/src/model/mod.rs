//! Classifiers, features, actionability constraints, regions and boxes.

mod lower;
mod parse;

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

pub use lower::lower_encodings;
pub use parse::{build_action_model, parse_problem, Problem};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate feature `{0}`")]
    DuplicateFeature(String),
    #[error("bound violation on `{name}`: lower {lower} > upper {upper}")]
    BoundViolation { name: String, lower: i64, upper: i64 },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("immutable feature `{0}` has nonzero action bounds")]
    ImmutableWithActions(String),
    #[error("feature `{0}` has empty action bounds")]
    EmptyActionBounds(String),
    #[error("{0}")]
    InvalidConstraint(String),
    #[error("encoding group {0} has fewer than 2 members")]
    SmallEncoding(String),
    #[error("feature `{feature}` appears in two {kind} encodings")]
    OverlappingEncoding { feature: String, kind: String },
    #[error("region bound for `{0}` lies outside the feature bounds")]
    RegionOutsideFeatureSpace(String),
    #[error("classifier has {found} weights for {expected} features")]
    WeightCount { expected: usize, found: usize },
    #[error("non-integer value `{0}`; rescale continuous inputs to integers")]
    NonInteger(String),
    #[error("{0}")]
    Parse(String),
}

/// Desirable outcome is `w·x + b ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearClassifier {
    pub weights: Vec<Rational>,
    pub intercept: Rational,
}

impl LinearClassifier {
    pub fn score(&self, x: &[i64]) -> Rational {
        self.weights
            .iter()
            .zip(x)
            .fold(self.intercept.clone(), |acc, (w, v)| acc + w * rational::int(*v))
    }

    pub fn is_desirable(&self, x: &[i64]) -> bool {
        self.score(x) >= Rational::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actionability {
    Immutable,
    MonotoneIncrease,
    MonotoneDecrease,
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
    pub actionability: Actionability,
    pub step_lower: Option<i64>,
    pub step_upper: Option<i64>,
}

impl FeatureSpec {
    /// Bounds on `a_j` implied by actionability and step limits; `None` is unbounded.
    pub fn action_bounds(&self) -> (Option<i64>, Option<i64>) {
        match self.actionability {
            Actionability::Immutable => (Some(0), Some(0)),
            Actionability::MonotoneIncrease => (Some(self.step_lower.unwrap_or(0).max(0)), self.step_upper),
            Actionability::MonotoneDecrease => (self.step_lower, Some(self.step_upper.unwrap_or(0).min(0))),
            Actionability::Free => (self.step_lower, self.step_upper),
        }
    }

    pub fn is_immutable(&self) -> bool {
        self.action_bounds() == (Some(0), Some(0))
    }
}

/// Which variable family a constraint binds, and so which set it defines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scope {
    /// Region `R`, over `x`.
    #[serde(rename = "x")]
    X,
    /// Action set `A`, over `a`.
    #[serde(rename = "a")]
    A,
    /// Feature space `X`, over `x + a`.
    #[serde(rename = "x_plus_a")]
    XPlusA,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::X => "x",
            Scope::A => "a",
            Scope::XPlusA => "x+a",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    #[default]
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    IntegerBound,
    KHot,
    DirectionalLinkage,
    ScaledLinkage,
    IfThen,
    OneHot,
    Thermometer,
}

impl ConstraintKind {
    pub fn is_encoding(self) -> bool {
        matches!(self, ConstraintKind::OneHot | ConstraintKind::Thermometer)
    }

    /// Outside integer bounds, K-hot and unit linkages.
    pub fn is_non_lrc(self) -> bool {
        matches!(self, ConstraintKind::ScaledLinkage | ConstraintKind::IfThen)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Operand {
    pub feature: usize,
    /// `±1` sign, or the integer scale of a scaled linkage.
    pub coef: i64,
}

/// `Σ coef · v(feature) (sense) rhs` over the scope's variables, except
/// `if_then`, which reads `v(op0) = 1 ⇒ v(op1) (sense) rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub scope: Scope,
    pub operands: Vec<Operand>,
    pub sense: Sense,
    pub rhs: i64,
    pub encoding_group: Option<String>,
    pub direction: Option<Direction>,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, scope: Scope, operands: Vec<Operand>, sense: Sense, rhs: i64) -> Self {
        Constraint {
            kind,
            scope,
            operands,
            sense,
            rhs,
            encoding_group: None,
            direction: None,
        }
    }

    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.operands.iter().map(|o| o.feature)
    }
}

/// Per-feature integer bounds of the audited region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub name: Option<String>,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

/// Integer box `l ≤ x ≤ u`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntBox {
    pub l: Vec<i64>,
    pub u: Vec<i64>,
}

impl IntBox {
    pub fn new(l: Vec<i64>, u: Vec<i64>) -> Self {
        IntBox { l, u }
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.iter().zip(&self.u).any(|(l, u)| l > u)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter()
            .zip(self.l.iter().zip(&self.u))
            .all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn contains_box(&self, other: &IntBox) -> bool {
        (0..self.dim()).all(|j| self.l[j] <= other.l[j] && other.u[j] <= self.u[j])
    }

    /// Strictly outside along at least one axis.
    pub fn is_disjoint(&self, other: &IntBox) -> bool {
        (0..self.dim()).any(|j| self.u[j] < other.l[j] || other.u[j] < self.l[j])
    }

    pub fn intersect(&self, other: &IntBox) -> IntBox {
        IntBox {
            l: self.l.iter().zip(&other.l).map(|(a, b)| *a.max(b)).collect(),
            u: self.u.iter().zip(&other.u).map(|(a, b)| *a.min(b)).collect(),
        }
    }

    /// Number of integer points, saturating.
    pub fn volume(&self) -> u128 {
        self.l
            .iter()
            .zip(&self.u)
            .map(|(l, u)| if u < l { 0 } else { (u - l + 1) as u128 })
            .fold(1u128, |a, b| a.saturating_mul(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionModel {
    pub features: Vec<FeatureSpec>,
    pub constraints: Vec<Constraint>,
    pub region: Region,
}

impl ActionModel {
    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn full_box(&self) -> IntBox {
        IntBox::new(self.region.lower.clone(), self.region.upper.clone())
    }

    pub fn with_region(&self, region: Region) -> ActionModel {
        ActionModel {
            region,
            ..self.clone()
        }
    }

    pub fn constraints_in(&self, scope: Scope) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(move |c| c.scope == scope)
    }

    /// Whether `b` lies inside the region box.
    pub fn box_in_region(&self, b: &IntBox) -> bool {
        b.dim() == self.dim() && !b.is_empty() && self.full_box().contains_box(b)
    }
}

/// Sum over features of `(u - l) / (U - L)` using region bounds; fixed features count 0.
pub fn box_size(b: &IntBox, m: &ActionModel) -> Rational {
    let mut total = Rational::zero();
    for j in 0..m.dim() {
        let range = m.region.upper[j] - m.region.lower[j];
        if range > 0 {
            total += rational::ratio(b.u[j] - b.l[j], range);
        }
    }
    total
}

impl fmt::Display for IntBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .l
            .iter()
            .zip(&self.u)
            .map(|(l, u)| format!("[{l}, {u}]"))
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}
