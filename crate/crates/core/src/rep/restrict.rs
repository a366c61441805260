use std::collections::BTreeSet;

use super::{analyze_with_fixings, domain, domain_size, RepError, TuReport, VarRef, Violation};
use crate::model::ActionModel;

/// Fixed values for a subset of discrete variables, sorted by variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Restriction {
    pub fixed: Vec<(VarRef, i64)>,
}

impl Restriction {
    pub fn new(mut fixed: Vec<(VarRef, i64)>) -> Self {
        fixed.sort();
        Restriction { fixed }
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn describe(&self, m: &ActionModel) -> String {
        if self.fixed.is_empty() {
            return "(none)".into();
        }
        self.fixed
            .iter()
            .map(|(v, s)| format!("{} = {s}", v.describe(m)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestrictionMode {
    ExactSingle,
    ExactEnumerated,
    RelaxedSound,
}

impl RestrictionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RestrictionMode::ExactSingle => "exact_single",
            RestrictionMode::ExactEnumerated => "exact_enumerated",
            RestrictionMode::RelaxedSound => "relaxed_sound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    #[default]
    Exact,
    Relaxed,
}

/// Strength of the conclusions drawn from the relaxed systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guarantee {
    /// Relaxation agrees with the discrete problem.
    Exact,
    /// Infeasibility still proves confinement; feasibility proves nothing.
    RelaxedSound,
}

impl Guarantee {
    pub fn as_str(self) -> &'static str {
        match self {
            Guarantee::Exact => "exact",
            Guarantee::RelaxedSound => "relaxed_sound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictionSet {
    pub restrictions: Vec<Restriction>,
    pub mode: RestrictionMode,
    /// Restricted variables, in the order their values vary (first slowest).
    pub variables: Vec<VarRef>,
    /// Violations left after fixing `variables`.
    pub residual: Vec<Violation>,
    pub report: TuReport,
}

impl RestrictionSet {
    pub fn guarantee(&self) -> Guarantee {
        if self.mode != RestrictionMode::RelaxedSound && self.residual.is_empty() {
            Guarantee::Exact
        } else {
            Guarantee::RelaxedSound
        }
    }

    pub fn len(&self) -> usize {
        self.restrictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.restrictions.is_empty()
    }
}

pub const DEFAULT_RESTRICTION_CAP: usize = 1024;

/// Chooses the continuous restrictions used to decide recourse for `m`.
pub fn select_restrictions(
    m: &ActionModel,
    report: &TuReport,
    policy: Policy,
    cap: usize,
) -> Result<RestrictionSet, RepError> {
    if report.passes {
        return Ok(RestrictionSet {
            restrictions: vec![Restriction::default()],
            mode: RestrictionMode::ExactSingle,
            variables: Vec::new(),
            residual: Vec::new(),
            report: report.clone(),
        });
    }
    let vars = report.suggested_restrictions.clone();
    let size = vars
        .iter()
        .map(|v| domain_size(m, *v))
        .fold(1u128, |a, b| a.saturating_mul(b));
    if policy == Policy::Relaxed {
        return Ok(RestrictionSet {
            restrictions: vec![Restriction::default()],
            mode: RestrictionMode::RelaxedSound,
            variables: Vec::new(),
            residual: report.violations.clone(),
            report: report.clone(),
        });
    }
    if size > cap as u128 {
        return Err(RepError::RestrictionBlowUp { size, cap });
    }
    let fixed: BTreeSet<VarRef> = vars.iter().copied().collect();
    let residual = analyze_with_fixings(m, &fixed);

    let mut restrictions = Vec::with_capacity(size as usize);
    let ranges: Vec<(i64, i64)> = vars.iter().map(|v| domain(m, *v)).collect();
    let mut current: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if size > 0 {
        loop {
            restrictions.push(Restriction::new(vars.iter().copied().zip(current.iter().copied()).collect()));
            // odometer, last variable fastest
            let mut done = true;
            for k in (0..vars.len()).rev() {
                if current[k] < ranges[k].1 {
                    current[k] += 1;
                    done = false;
                    break;
                }
                current[k] = ranges[k].0;
            }
            if done {
                break;
            }
        }
    }
    Ok(RestrictionSet {
        restrictions,
        mode: RestrictionMode::ExactEnumerated,
        variables: vars,
        residual,
        report: report.clone(),
    })
}
