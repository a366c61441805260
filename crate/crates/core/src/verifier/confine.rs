use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::Zero;

use super::{VerifyError, VerifyOptions};
use crate::lp::{solve_feasibility_with, validate_certificate, FarkasCertificate, Feasibility, LinearSystem};
use crate::model::{ActionModel, IntBox, LinearClassifier};
use crate::rational::{self, Rational};
use crate::rep::{assemble_rep, assemble_rep_layout, Guarantee, RepLayout, Restriction, RestrictionSet, RowRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfinementStatus {
    Confined,
    NotConfined,
    /// The relaxation has a fractional solution but the discrete problem may not.
    UnknownNotConfined,
}

impl ConfinementStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ConfinementStatus::Confined => "confined",
            ConfinementStatus::NotConfined => "not_confined",
            ConfinementStatus::UnknownNotConfined => "unknown_not_confined",
        }
    }
}

/// One certificate per restriction, all for the same box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateBundle {
    pub bx: IntBox,
    pub per_restriction: Vec<(Restriction, FarkasCertificate)>,
}

impl CertificateBundle {
    /// Re-checks every certificate against a freshly assembled system.
    pub fn validate(&self, m: &ActionModel, f: &LinearClassifier) -> Result<bool, VerifyError> {
        for (r, cert) in &self.per_restriction {
            let s = assemble_rep(m, f, &self.bx, r)?;
            if !validate_certificate(&s, &cert.y)?.is_accept() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// Index into the restriction set.
    pub restriction: usize,
    pub x: Vec<Rational>,
    pub a: Vec<Rational>,
}

impl Witness {
    pub fn is_integral(&self) -> bool {
        self.x.iter().chain(&self.a).all(rational::is_integer)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfinementResult {
    pub status: ConfinementStatus,
    pub certificates: Option<CertificateBundle>,
    pub witness: Option<Witness>,
    pub guarantee: Guarantee,
}

impl ConfinementResult {
    pub fn is_confined(&self) -> bool {
        self.status == ConfinementStatus::Confined
    }
}

/// Shared state for repeated confinement checks on one model and restriction set.
pub struct Checker<'a> {
    pub m: &'a ActionModel,
    pub f: &'a LinearClassifier,
    pub rs: &'a RestrictionSet,
    pub opts: VerifyOptions,
    templates: Vec<RepLayout>,
    cache: Mutex<HashMap<IntBox, Arc<ConfinementResult>>>,
}

impl<'a> Checker<'a> {
    pub fn new(
        m: &'a ActionModel,
        f: &'a LinearClassifier,
        rs: &'a RestrictionSet,
        opts: VerifyOptions,
    ) -> Result<Self, VerifyError> {
        let full = m.full_box();
        let templates = rs
            .restrictions
            .iter()
            .map(|r| assemble_rep_layout(m, f, &full, r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Checker {
            m,
            f,
            rs,
            opts,
            templates,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn system_for(&self, k: usize, b: &IntBox) -> LinearSystem {
        let t = &self.templates[k];
        let mut s = t.system.clone();
        for (row, role) in s.rows.iter_mut().zip(&t.roles) {
            match role {
                RowRole::BoxUpper { feature } => row.rhs = rational::int(b.u[*feature]),
                RowRole::BoxLower { feature } => row.rhs = rational::int(-b.l[*feature]),
                _ => {}
            }
        }
        s
    }

    pub fn check(&self, b: &IntBox) -> Result<Arc<ConfinementResult>, VerifyError> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(b) {
            return Ok(hit.clone());
        }
        let result = Arc::new(self.solve(b)?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(b.clone(), result.clone());
        Ok(result)
    }

    fn solve(&self, b: &IntBox) -> Result<ConfinementResult, VerifyError> {
        if !self.m.box_in_region(b) {
            return Err(VerifyError::Rep(crate::rep::RepError::BoxOutsideRegion));
        }
        let d = self.m.dim();
        let guarantee = self.rs.guarantee();
        let mut certs = Vec::with_capacity(self.rs.len());
        for (k, r) in self.rs.restrictions.iter().enumerate() {
            let s = self.system_for(k, b);
            match solve_feasibility_with(&s, &self.opts.lp)? {
                Feasibility::Infeasible(c) => certs.push((r.clone(), c)),
                Feasibility::Feasible(p) => {
                    let witness = Witness {
                        restriction: k,
                        x: p[..d].to_vec(),
                        a: p[d..].to_vec(),
                    };
                    let status = if guarantee == Guarantee::Exact || witness.is_integral() {
                        ConfinementStatus::NotConfined
                    } else {
                        ConfinementStatus::UnknownNotConfined
                    };
                    return Ok(ConfinementResult {
                        status,
                        certificates: None,
                        witness: Some(witness),
                        guarantee,
                    });
                }
            }
        }
        Ok(ConfinementResult {
            status: ConfinementStatus::Confined,
            certificates: Some(CertificateBundle {
                bx: b.clone(),
                per_restriction: certs,
            }),
            witness: None,
            guarantee,
        })
    }
}

/// Whether no point of `b` has recourse, decided restriction by restriction.
pub fn is_box_confined(
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    b: &IntBox,
    opts: &VerifyOptions,
) -> Result<ConfinementResult, VerifyError> {
    let checker = Checker::new(m, f, rs, *opts)?;
    Ok((*checker.check(b)?).clone())
}

/// `rhs · y` of a certificate; `-1` after normalization.
pub fn certificate_value(s: &LinearSystem, y: &[Rational]) -> Rational {
    s.rows
        .iter()
        .zip(y)
        .fold(Rational::zero(), |acc, (r, v)| acc + &r.rhs * v)
}

