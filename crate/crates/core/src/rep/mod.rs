//! Region recourse existence problems, the relaxation assumption checker and
//! continuous restrictions.
//!
//! Variables are laid out as `x_0..x_{d-1}` followed by `a_0..a_{d-1}`.

mod assemble;
mod restrict;
mod tu;

use std::fmt;

use crate::model::{ActionModel, Scope};

pub use assemble::{assemble_rep, assemble_rep_layout, RepLayout, RowRole};
pub use restrict::{select_restrictions, DEFAULT_RESTRICTION_CAP, Guarantee, Policy, Restriction, RestrictionMode, RestrictionSet};
pub use tu::{check_tu_assumptions, analyze_with_fixings, TuReport, Violation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepError {
    #[error("restriction fixes undeclared variable {0}")]
    UndeclaredVariable(VarRef),
    #[error("restriction blow-up: {size} continuous restrictions exceed the cap of {cap}")]
    RestrictionBlowUp { size: u128, cap: usize },
    #[error("box does not lie inside the region")]
    BoxOutsideRegion,
}

/// A discrete variable: `x_j`, `a_j` or the sum `x_j + a_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub scope: Scope,
    pub feature: usize,
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scope {
            Scope::X => write!(f, "x[{}]", self.feature),
            Scope::A => write!(f, "a[{}]", self.feature),
            Scope::XPlusA => write!(f, "(x+a)[{}]", self.feature),
        }
    }
}

impl VarRef {
    pub fn new(scope: Scope, feature: usize) -> Self {
        VarRef { scope, feature }
    }

    pub fn describe(&self, m: &ActionModel) -> String {
        let name = m.features.get(self.feature).map_or("?", |f| f.name.as_str());
        match self.scope {
            Scope::X => format!("x[{name}]"),
            Scope::A => format!("a[{name}]"),
            Scope::XPlusA => format!("(x+a)[{name}]"),
        }
    }
}

/// Integer range a variable can take inside the region.
///
/// Actions are clipped to what keeps some region point inside the feature space.
pub fn domain(m: &ActionModel, v: VarRef) -> (i64, i64) {
    let f = &m.features[v.feature];
    let (rl, ru) = (m.region.lower[v.feature], m.region.upper[v.feature]);
    match v.scope {
        Scope::X => (rl, ru),
        Scope::XPlusA => (f.lower, f.upper),
        Scope::A => {
            let (al, au) = f.action_bounds();
            let lo = al.unwrap_or(i64::MIN).max(f.lower - ru);
            let hi = au.unwrap_or(i64::MAX).min(f.upper - rl);
            (lo, hi)
        }
    }
}

pub fn domain_size(m: &ActionModel, v: VarRef) -> u128 {
    let (lo, hi) = domain(m, v);
    if hi < lo {
        0
    } else {
        (hi - lo) as u128 + 1
    }
}
