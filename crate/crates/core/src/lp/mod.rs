//! Linear feasibility and optimization with exact certificates.
//!
//! Solves run a floating-point simplex first, snap its output to rationals and
//! re-verify exactly. Anything that fails verification is re-solved with exact
//! rational pivoting under Bland's rule.

mod farkas;
mod milp;
mod simplex;
mod system;

use num_traits::{One, Signed, Zero};

pub use farkas::{validate_certificate, CertificateCheck, FarkasCertificate, RejectReason};
pub use milp::{maximize_integer, IntegerOutcome};
pub use system::{LinearSystem, Row};

use crate::rational::Rational;
use simplex::{Failure, Outcome, Problem, Tolerances};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("numerical failure in the floating-point simplex")]
    NumericalFailure,
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("row {row} references undeclared variable {var}")]
    UndeclaredVariable { row: usize, var: usize },
    #[error("certificate rejected: {0}")]
    InvalidCertificate(RejectReason),
    #[error("exact solve produced a result that failed verification")]
    VerificationFailed,
    #[error("integer search exceeded {0} nodes")]
    NodeLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Floating simplex with exact re-verification and exact fallback.
    #[default]
    Float,
    /// Rational pivoting only.
    Exact,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub arithmetic: Arithmetic,
    /// Feasibility tolerance of the floating simplex.
    pub tolerance: f64,
    /// Retry in exact arithmetic when the floating result does not verify.
    pub fallback: bool,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            arithmetic: Arithmetic::Float,
            tolerance: 1e-7,
            fallback: true,
            max_iterations: 50_000,
        }
    }
}

impl SolveOptions {
    pub fn exact() -> Self {
        SolveOptions {
            arithmetic: Arithmetic::Exact,
            ..Self::default()
        }
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            feasibility: self.tolerance,
            optimality: 1e-9,
            pivot: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    Infeasible(FarkasCertificate),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Optimization {
    Optimal {
        point: Vec<Rational>,
        value: Rational,
        /// Multipliers with `Aᵀy = c` and `bᵀy = c·x` for the maximization form.
        dual: Vec<Rational>,
    },
    Infeasible(FarkasCertificate),
    Unbounded {
        point: Vec<Rational>,
        ray: Vec<Rational>,
    },
}

/// Single-variable rows turned into bounds, each remembering its source row.
struct Presolved {
    general: Vec<usize>,
    lo: Vec<Option<(Rational, usize)>>,
    hi: Vec<Option<(Rational, usize)>>,
}

enum Presolve {
    Ready(Presolved),
    Infeasible(Vec<Rational>),
}

fn presolve(s: &LinearSystem) -> Presolve {
    let n = s.num_vars();
    let m = s.num_rows();
    let mut lo: Vec<Option<(Rational, usize)>> = vec![None; n];
    let mut hi: Vec<Option<(Rational, usize)>> = vec![None; n];
    let mut general = Vec::new();
    for (i, row) in s.rows.iter().enumerate() {
        match row.coeffs.as_slice() {
            [] => {
                if row.rhs.is_negative() {
                    let mut y = vec![Rational::zero(); m];
                    y[i] = Rational::one();
                    return Presolve::Infeasible(y);
                }
            }
            [(v, c)] => {
                let bound = &row.rhs / c;
                if c.is_positive() {
                    if hi[*v].as_ref().is_none_or(|(h, _)| bound < *h) {
                        hi[*v] = Some((bound, i));
                    }
                } else if lo[*v].as_ref().is_none_or(|(l, _)| bound > *l) {
                    lo[*v] = Some((bound, i));
                }
            }
            _ => general.push(i),
        }
    }
    for v in 0..n {
        if let (Some((l, li)), Some((h, hi_row))) = (&lo[v], &hi[v]) {
            if l > h {
                let mut y = vec![Rational::zero(); m];
                y[*li] = Rational::one() / s.rows[*li].coeffs[0].1.abs();
                y[*hi_row] = Rational::one() / s.rows[*hi_row].coeffs[0].1.abs();
                return Presolve::Infeasible(y);
            }
        }
    }
    Presolve::Ready(Presolved { general, lo, hi })
}

impl Presolved {
    fn problem<'a>(&self, s: &'a LinearSystem) -> Problem<'a> {
        Problem {
            n: s.num_vars(),
            rows: self
                .general
                .iter()
                .map(|&i| (s.rows[i].coeffs.as_slice(), &s.rows[i].rhs))
                .collect(),
            lo: self.lo.iter().map(|b| b.as_ref().map(|(v, _)| v.clone())).collect(),
            hi: self.hi.iter().map(|b| b.as_ref().map(|(v, _)| v.clone())).collect(),
        }
    }

    /// Maps engine multipliers back to original row indices.
    fn lift(&self, s: &LinearSystem, y_rows: &[Rational], y_lo: &[Rational], y_hi: &[Rational]) -> Vec<Rational> {
        let mut y = vec![Rational::zero(); s.num_rows()];
        for (k, &i) in self.general.iter().enumerate() {
            y[i] += &y_rows[k];
        }
        for (bounds, mult) in [(&self.lo, y_lo), (&self.hi, y_hi)] {
            for (v, b) in bounds.iter().enumerate() {
                if let Some((_, i)) = b {
                    if !mult[v].is_zero() {
                        y[*i] += &mult[v] / s.rows[*i].coeffs[0].1.abs();
                    }
                }
            }
        }
        y
    }
}

fn run_engine(
    s: &LinearSystem,
    pre: &Presolved,
    objective: Option<&[Rational]>,
    opts: &SolveOptions,
    exact: bool,
) -> Result<Outcome, Failure> {
    let p = pre.problem(s);
    if exact {
        simplex::solve::<Rational>(&p, objective, opts.tolerances(), usize::MAX)
    } else {
        simplex::solve::<f64>(&p, objective, opts.tolerances(), opts.max_iterations)
    }
}

/// Feasible point or Farkas certificate, both verified exactly.
pub fn solve_feasibility(s: &LinearSystem) -> Result<Feasibility, LpError> {
    solve_feasibility_with(s, &SolveOptions::default())
}

pub fn solve_feasibility_with(s: &LinearSystem, opts: &SolveOptions) -> Result<Feasibility, LpError> {
    s.check_well_formed()?;
    let pre = match presolve(s) {
        Presolve::Ready(p) => p,
        Presolve::Infeasible(y) => return Ok(Feasibility::Infeasible(FarkasCertificate::new(s, y)?)),
    };
    let attempt = |exact: bool| -> Result<Option<Feasibility>, LpError> {
        let outcome = match run_engine(s, &pre, None, opts, exact) {
            Ok(o) => o,
            Err(_) if !exact => return Ok(None),
            Err(_) => return Err(LpError::NumericalFailure),
        };
        Ok(match outcome {
            Outcome::Feasible { x } => s.is_satisfied_by(&x).then_some(Feasibility::Feasible(x)),
            Outcome::Infeasible { y_rows, y_lo, y_hi } => {
                let y = pre.lift(s, &y_rows, &y_lo, &y_hi);
                FarkasCertificate::new(s, y).ok().map(Feasibility::Infeasible)
            }
            _ => None,
        })
    };
    finish(opts, attempt)
}

fn finish<T>(opts: &SolveOptions, attempt: impl Fn(bool) -> Result<Option<T>, LpError>) -> Result<T, LpError> {
    if opts.arithmetic == Arithmetic::Float {
        if let Some(r) = attempt(false)? {
            return Ok(r);
        }
        if !opts.fallback {
            return Err(LpError::NumericalFailure);
        }
    }
    attempt(true)?.ok_or(LpError::VerificationFailed)
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Optimizes `objective · x` over the system.
pub fn optimize(s: &LinearSystem, objective: &[Rational], sense: Sense) -> Result<Optimization, LpError> {
    optimize_with(s, objective, sense, &SolveOptions::default())
}

pub fn optimize_with(
    s: &LinearSystem,
    objective: &[Rational],
    sense: Sense,
    opts: &SolveOptions,
) -> Result<Optimization, LpError> {
    s.check_well_formed()?;
    if objective.len() != s.num_vars() {
        return Err(LpError::LengthMismatch {
            expected: s.num_vars(),
            found: objective.len(),
        });
    }
    let pre = match presolve(s) {
        Presolve::Ready(p) => p,
        Presolve::Infeasible(y) => return Ok(Optimization::Infeasible(FarkasCertificate::new(s, y)?)),
    };
    // maximization form
    let obj: Vec<Rational> = match sense {
        Sense::Maximize => objective.to_vec(),
        Sense::Minimize => objective.iter().map(|c| -c).collect(),
    };
    let engine_cost: Vec<Rational> = obj.iter().map(|c| -c).collect();
    let attempt = |exact: bool| -> Result<Option<Optimization>, LpError> {
        let outcome = match run_engine(s, &pre, Some(&engine_cost), opts, exact) {
            Ok(o) => o,
            Err(_) if !exact => return Ok(None),
            Err(_) => return Err(LpError::NumericalFailure),
        };
        Ok(match outcome {
            Outcome::Infeasible { y_rows, y_lo, y_hi } => {
                let y = pre.lift(s, &y_rows, &y_lo, &y_hi);
                FarkasCertificate::new(s, y).ok().map(Optimization::Infeasible)
            }
            Outcome::Optimal { x, y_rows, y_lo, y_hi } => {
                let dual = pre.lift(s, &y_rows, &y_lo, &y_hi);
                verify_optimal(s, &obj, &x, &dual).then(|| {
                    let value = dot(objective, &x);
                    Optimization::Optimal { point: x, value, dual }
                })
            }
            Outcome::Unbounded { x, ray } => {
                verify_ray(s, &obj, &x, &ray).then_some(Optimization::Unbounded { point: x, ray })
            }
            Outcome::Feasible { .. } => None,
        })
    };
    finish(opts, attempt)
}

fn verify_optimal(s: &LinearSystem, obj: &[Rational], x: &[Rational], y: &[Rational]) -> bool {
    if !s.is_satisfied_by(x) || y.iter().any(|v| v.is_negative()) {
        return false;
    }
    let mut combo = vec![Rational::zero(); s.num_vars()];
    let mut rhs = Rational::zero();
    for (row, yi) in s.rows.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (v, c) in &row.coeffs {
            combo[*v] += c * yi;
        }
        rhs += &row.rhs * yi;
    }
    combo.as_slice() == obj && rhs == dot(obj, x)
}

fn verify_ray(s: &LinearSystem, obj: &[Rational], x: &[Rational], ray: &[Rational]) -> bool {
    s.is_satisfied_by(x)
        && dot(obj, ray).is_positive()
        && s.rows.iter().all(|r| !r.activity(ray).is_positive())
}
