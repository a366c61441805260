use num_traits::{Signed, Zero};

use super::{LinearSystem, LpError};
use crate::rational::Rational;

/// Nonnegative row multipliers proving a system infeasible, scaled so `rhs · y = -1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub y: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateCheck {
    Accept,
    Reject(RejectReason),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RejectReason {
    #[error("negative multiplier on row {0}")]
    NegativeMultiplier(usize),
    #[error("coefficient combination nonzero for variable {0}")]
    NonzeroCombination(usize),
    #[error("right-hand side combination is not negative")]
    NonNegativeRhs,
}

impl CertificateCheck {
    pub fn is_accept(&self) -> bool {
        matches!(self, CertificateCheck::Accept)
    }
}

/// Exact check of the Farkas conditions `y ≥ 0`, `Aᵀy = 0`, `bᵀy < 0`.
pub fn validate_certificate(s: &LinearSystem, y: &[Rational]) -> Result<CertificateCheck, LpError> {
    if y.len() != s.num_rows() {
        return Err(LpError::LengthMismatch {
            expected: s.num_rows(),
            found: y.len(),
        });
    }
    if let Some(i) = y.iter().position(|v| v.is_negative()) {
        return Ok(CertificateCheck::Reject(RejectReason::NegativeMultiplier(i)));
    }
    let mut combo = vec![Rational::zero(); s.num_vars()];
    let mut rhs = Rational::zero();
    for (row, yi) in s.rows.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (v, c) in &row.coeffs {
            if *v >= combo.len() {
                return Err(LpError::UndeclaredVariable { row: 0, var: *v });
            }
            combo[*v] += c * yi;
        }
        rhs += &row.rhs * yi;
    }
    if let Some(v) = combo.iter().position(|c| !c.is_zero()) {
        return Ok(CertificateCheck::Reject(RejectReason::NonzeroCombination(v)));
    }
    if !rhs.is_negative() {
        return Ok(CertificateCheck::Reject(RejectReason::NonNegativeRhs));
    }
    Ok(CertificateCheck::Accept)
}

impl FarkasCertificate {
    /// Validates `y` and rescales it to `rhs · y = -1`.
    pub fn new(s: &LinearSystem, y: Vec<Rational>) -> Result<Self, LpError> {
        match validate_certificate(s, &y)? {
            CertificateCheck::Accept => {}
            CertificateCheck::Reject(reason) => return Err(LpError::InvalidCertificate(reason)),
        }
        let rhs: Rational = s
            .rows
            .iter()
            .zip(&y)
            .fold(Rational::zero(), |acc, (r, yi)| acc + &r.rhs * yi);
        let scale = -rhs;
        Ok(FarkasCertificate {
            y: y.into_iter().map(|v| v / &scale).collect(),
        })
    }

    /// Rows with a positive multiplier.
    pub fn support(&self) -> Vec<usize> {
        self.y
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_positive())
            .map(|(i, _)| i)
            .collect()
    }
}
