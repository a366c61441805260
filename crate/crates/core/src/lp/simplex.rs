//! Dense bounded-variable primal simplex, generic over the arithmetic.
//!
//! Rows are `a·x + s = b` with slack `s ≥ 0`; rows whose starting residual is
//! negative are negated and given an artificial. Phase I minimizes the sum of
//! artificials. Row multipliers are read from slack reduced costs and bound
//! multipliers from structural reduced costs, which yields both the Farkas ray
//! after an infeasible phase I and the optimality dual after phase II.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_traits::{One, Signed, Zero};

use crate::rational::{self, Rational};

pub(crate) trait Field: Clone + Debug + Send + Sync {
    const EXACT: bool;
    fn fzero() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_rational(&self) -> Rational;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Sign after applying tolerance `eps`.
    fn sign(&self, eps: f64) -> Ordering;
    fn cmp_abs(&self, o: &Self) -> Ordering;
    fn cmp_val(&self, o: &Self) -> Ordering;
    fn is_exact_zero(&self) -> bool;
}

impl Field for f64 {
    const EXACT: bool = false;
    fn fzero() -> Self {
        0.0
    }
    fn from_rational(r: &Rational) -> Self {
        rational::to_f64(r)
    }
    fn to_rational(&self) -> Rational {
        rational::rationalize(*self, 1_000_000, 1e-9)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self, eps: f64) -> Ordering {
        if *self > eps {
            Ordering::Greater
        } else if *self < -eps {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn cmp_abs(&self, o: &Self) -> Ordering {
        self.abs().total_cmp(&o.abs())
    }
    fn cmp_val(&self, o: &Self) -> Ordering {
        self.total_cmp(o)
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Field for Rational {
    const EXACT: bool = true;
    fn fzero() -> Self {
        Zero::zero()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self, _eps: f64) -> Ordering {
        self.cmp(&Zero::zero())
    }
    fn cmp_abs(&self, o: &Self) -> Ordering {
        self.abs().cmp(&o.abs())
    }
    fn cmp_val(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub feasibility: f64,
    pub optimality: f64,
    pub pivot: f64,
}

/// Input in the engine's own terms: general rows plus per-variable bounds.
pub(crate) struct Problem<'a> {
    pub n: usize,
    pub rows: Vec<(&'a [(usize, Rational)], &'a Rational)>,
    pub lo: Vec<Option<Rational>>,
    pub hi: Vec<Option<Rational>>,
}

#[derive(Debug)]
pub(crate) enum Outcome {
    Feasible {
        x: Vec<Rational>,
    },
    Infeasible {
        y_rows: Vec<Rational>,
        y_lo: Vec<Rational>,
        y_hi: Vec<Rational>,
    },
    Optimal {
        x: Vec<Rational>,
        y_rows: Vec<Rational>,
        y_lo: Vec<Rational>,
        y_hi: Vec<Rational>,
    },
    Unbounded {
        x: Vec<Rational>,
        ray: Vec<Rational>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Failure {
    IterationLimit,
    Breakdown,
}

enum Step {
    Optimal,
    Unbounded { entering: usize, dir: i8 },
}

struct Tableau<F: Field> {
    n: usize,
    m: usize,
    t: Vec<Vec<F>>,
    beta: Vec<F>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    value: Vec<F>,
    lo: Vec<Option<F>>,
    hi: Vec<Option<F>>,
    cost: Vec<F>,
    d: Vec<F>,
    tol: Tolerances,
    bland: bool,
    degenerate_run: usize,
    iterations: usize,
    max_iterations: usize,
}

const DEGENERATE_SWITCH: usize = 50;

impl<F: Field> Tableau<F> {
    fn build(p: &Problem<'_>, tol: Tolerances, max_iterations: usize) -> Self {
        let n = p.n;
        let m = p.rows.len();
        let lo: Vec<Option<F>> = p.lo.iter().map(|b| b.as_ref().map(F::from_rational)).collect();
        let hi: Vec<Option<F>> = p.hi.iter().map(|b| b.as_ref().map(F::from_rational)).collect();
        let mut value: Vec<F> = (0..n)
            .map(|j| match (&lo[j], &hi[j]) {
                (Some(l), _) => l.clone(),
                (None, Some(h)) => h.clone(),
                (None, None) => F::fzero(),
            })
            .collect();

        let mut needs_art = Vec::with_capacity(m);
        let mut residuals = Vec::with_capacity(m);
        for (coeffs, rhs) in &p.rows {
            let mut r = F::from_rational(rhs);
            for (v, c) in coeffs.iter() {
                r = r.sub(&F::from_rational(c).mul(&value[*v]));
            }
            needs_art.push(r.sign(0.0) == Ordering::Less);
            residuals.push(r);
        }
        let k = needs_art.iter().filter(|b| **b).count();
        let total = n + m + k;

        let mut t = vec![vec![F::fzero(); total]; m];
        let mut beta = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut is_basic = vec![false; total];
        let mut lo_all = lo;
        let mut hi_all = hi;
        lo_all.extend((0..m + k).map(|_| Some(F::fzero())));
        hi_all.extend((0..m + k).map(|_| None));
        value.extend((0..m + k).map(|_| F::fzero()));
        let mut cost = vec![F::fzero(); total];

        let mut art = n + m;
        for (i, (coeffs, _)) in p.rows.iter().enumerate() {
            let negate = needs_art[i];
            for (v, c) in coeffs.iter() {
                let c = F::from_rational(c);
                t[i][*v] = if negate { c.neg() } else { c };
            }
            let one = F::from_rational(&Rational::one());
            if negate {
                t[i][n + i] = one.neg();
                t[i][art] = one;
                beta.push(residuals[i].neg());
                basis.push(art);
                is_basic[art] = true;
                cost[art] = F::from_rational(&Rational::one());
                art += 1;
            } else {
                t[i][n + i] = one;
                beta.push(residuals[i].clone());
                basis.push(n + i);
                is_basic[n + i] = true;
            }
        }

        let mut tab = Tableau {
            n,
            m,
            t,
            beta,
            basis,
            is_basic,
            value,
            lo: lo_all,
            hi: hi_all,
            cost,
            d: Vec::new(),
            tol,
            bland: F::EXACT,
            degenerate_run: 0,
            iterations: 0,
            max_iterations,
        };
        tab.recompute_reduced_costs();
        tab
    }

    fn total(&self) -> usize {
        self.value.len()
    }

    fn recompute_reduced_costs(&mut self) {
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = &self.cost[self.basis[i]];
            if cb.is_exact_zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                let tij = &self.t[i][j];
                if !tij.is_exact_zero() {
                    *dj = dj.sub(&cb.mul(tij));
                }
            }
        }
        self.d = d;
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lo[j], &self.hi[j]), (Some(l), Some(h)) if l.cmp_val(h) != Ordering::Less)
    }

    fn at_lower(&self, j: usize) -> bool {
        matches!(&self.lo[j], Some(l) if l.cmp_val(&self.value[j]) == Ordering::Equal)
    }

    fn at_upper(&self, j: usize) -> bool {
        matches!(&self.hi[j], Some(h) if h.cmp_val(&self.value[j]) == Ordering::Equal)
    }

    /// Entering variable and direction (+1 increase, -1 decrease).
    fn price(&self) -> Option<(usize, i8)> {
        let eps = self.tol.optimality;
        let mut best: Option<(usize, i8, F)> = None;
        for j in 0..self.total() {
            if self.is_basic[j] || self.is_fixed(j) {
                continue;
            }
            let dj = &self.d[j];
            let dir = match dj.sign(eps) {
                Ordering::Less if !self.at_upper(j) => 1,
                Ordering::Greater if !self.at_lower(j) => -1,
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            match &best {
                Some((_, _, b)) if dj.cmp_abs(b) != Ordering::Greater => {}
                _ => best = Some((j, dir, dj.clone())),
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn step(&mut self) -> Result<Option<Step>, Failure> {
        let Some((j, dir)) = self.price() else {
            return Ok(Some(Step::Optimal));
        };
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(Failure::IterationLimit);
        }
        let piv = self.tol.pivot;
        let feas = self.tol.feasibility;

        // Candidate: (step length, leaving row or None for a bound flip, |alpha|).
        let mut best_t: Option<F> = None;
        let mut best_row: Option<usize> = None;
        if let (Some(l), Some(h)) = (&self.lo[j], &self.hi[j]) {
            best_t = Some(h.sub(l));
        }
        for i in 0..self.m {
            let alpha = &self.t[i][j];
            if alpha.sign(piv) == Ordering::Equal {
                continue;
            }
            let b = self.basis[i];
            // rate of change of x_b per unit step
            let rate = if dir > 0 { alpha.neg() } else { alpha.clone() };
            let limit = match rate.sign(0.0) {
                Ordering::Less => self.lo[b]
                    .as_ref()
                    .map(|l| self.beta[i].sub(l).div(&rate.neg())),
                _ => self.hi[b].as_ref().map(|h| h.sub(&self.beta[i]).div(&rate)),
            };
            let Some(mut ti) = limit else { continue };
            if ti.sign(0.0) == Ordering::Less {
                ti = F::fzero();
            }
            let better = match &best_t {
                None => true,
                Some(bt) => {
                    let diff = ti.sub(bt);
                    match diff.sign(if F::EXACT { 0.0 } else { feas * 1e-2 }) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => match best_row {
                            // bound flips win ties
                            None => false,
                            Some(r) => {
                                if F::EXACT || self.bland {
                                    b < self.basis[r]
                                } else {
                                    match alpha.cmp_abs(&self.t[r][j]) {
                                        Ordering::Greater => true,
                                        Ordering::Less => false,
                                        Ordering::Equal => b < self.basis[r],
                                    }
                                }
                            }
                        },
                    }
                }
            };
            if better {
                best_t = Some(ti);
                best_row = Some(i);
            }
        }

        let Some(theta) = best_t else {
            return Ok(Some(Step::Unbounded { entering: j, dir }));
        };
        if !F::EXACT {
            if theta.sign(feas) == Ordering::Equal {
                self.degenerate_run += 1;
                if self.degenerate_run >= DEGENERATE_SWITCH {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
        }
        let delta = if dir > 0 { theta.clone() } else { theta.neg() };
        for i in 0..self.m {
            let alpha = &self.t[i][j];
            if !alpha.is_exact_zero() {
                self.beta[i] = self.beta[i].sub(&alpha.mul(&delta));
            }
        }
        let entering_value = self.value[j].add(&delta);

        match best_row {
            None => {
                // bound flip
                self.value[j] = if dir > 0 {
                    self.hi[j].clone().unwrap()
                } else {
                    self.lo[j].clone().unwrap()
                };
            }
            Some(r) => {
                let leaving = self.basis[r];
                let alpha_r = self.t[r][j].clone();
                let rate_r = if dir > 0 { alpha_r.neg() } else { alpha_r.clone() };
                self.value[leaving] = if rate_r.sign(0.0) == Ordering::Less {
                    self.lo[leaving].clone().ok_or(Failure::Breakdown)?
                } else {
                    self.hi[leaving].clone().ok_or(Failure::Breakdown)?
                };
                if leaving >= self.n + self.m {
                    // artificials never come back
                    self.lo[leaving] = Some(F::fzero());
                    self.hi[leaving] = Some(F::fzero());
                    self.value[leaving] = F::fzero();
                }
                self.pivot(r, j);
                self.beta[r] = entering_value;
            }
        }
        Ok(None)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let alpha = self.t[r][j].clone();
        let row_r: Vec<F> = self.t[r].iter().map(|v| v.div(&alpha)).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i][j].clone();
            if f.is_exact_zero() {
                continue;
            }
            let row_i = &mut self.t[i];
            for (k, rk) in row_r.iter().enumerate() {
                if !rk.is_exact_zero() {
                    row_i[k] = row_i[k].sub(&f.mul(rk));
                }
            }
            if !F::EXACT {
                row_i[j] = F::fzero();
            }
        }
        let dj = self.d[j].clone();
        if !dj.is_exact_zero() {
            for (k, rk) in row_r.iter().enumerate() {
                if !rk.is_exact_zero() {
                    self.d[k] = self.d[k].sub(&dj.mul(rk));
                }
            }
            if !F::EXACT {
                self.d[j] = F::fzero();
            }
        }
        self.t[r] = row_r;
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    fn run(&mut self) -> Result<Step, Failure> {
        loop {
            if let Some(s) = self.step()? {
                return Ok(s);
            }
        }
    }

    fn structural_values(&self) -> Vec<F> {
        let mut x: Vec<F> = self.value[..self.n].to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.beta[i].clone();
            }
        }
        x
    }

    fn phase_one_objective(&self) -> F {
        let mut s = F::fzero();
        for (i, &b) in self.basis.iter().enumerate() {
            if b >= self.n + self.m {
                s = s.add(&self.beta[i]);
            }
        }
        s
    }

    /// Row and bound multipliers from current reduced costs.
    fn multipliers(&self) -> (Vec<Rational>, Vec<Rational>, Vec<Rational>) {
        let eps = self.tol.optimality;
        let clamp = |v: &F| -> Rational {
            if v.sign(eps) == Ordering::Greater {
                v.to_rational()
            } else {
                Rational::zero()
            }
        };
        let y_rows: Vec<Rational> = (0..self.m)
            .map(|i| {
                let s = self.n + i;
                if self.is_basic[s] {
                    Rational::zero()
                } else {
                    clamp(&self.d[s])
                }
            })
            .collect();
        let mut y_lo = vec![Rational::zero(); self.n];
        let mut y_hi = vec![Rational::zero(); self.n];
        for j in 0..self.n {
            if self.is_basic[j] {
                continue;
            }
            let dj = &self.d[j];
            match dj.sign(eps) {
                Ordering::Greater if self.lo[j].is_some() => y_lo[j] = clamp(dj),
                Ordering::Less if self.hi[j].is_some() => y_hi[j] = clamp(&dj.neg()),
                _ => {}
            }
        }
        (y_rows, y_lo, y_hi)
    }

    fn ray(&self, entering: usize, dir: i8) -> Vec<Rational> {
        let mut r = vec![Rational::zero(); self.n];
        let sign = if dir > 0 { Rational::one() } else { -Rational::one() };
        if entering < self.n {
            r[entering] = sign.clone();
        }
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                r[b] = -(self.t[i][entering].to_rational() * &sign);
            }
        }
        r
    }
}

/// Phase I, then phase II when `objective` (to be minimized) is given.
pub(crate) fn solve<F: Field>(
    p: &Problem<'_>,
    objective: Option<&[Rational]>,
    tol: Tolerances,
    max_iterations: usize,
) -> Result<Outcome, Failure> {
    let mut tab: Tableau<F> = Tableau::build(p, tol, max_iterations);
    match tab.run()? {
        Step::Optimal => {}
        Step::Unbounded { .. } => return Err(Failure::Breakdown),
    }
    let infeasibility = tab.phase_one_objective();
    if infeasibility.sign(tol.feasibility) == Ordering::Greater {
        let (y_rows, y_lo, y_hi) = tab.multipliers();
        return Ok(Outcome::Infeasible { y_rows, y_lo, y_hi });
    }
    let Some(c) = objective else {
        let x = tab.structural_values().iter().map(Field::to_rational).collect();
        return Ok(Outcome::Feasible { x });
    };

    for j in tab.n + tab.m..tab.total() {
        tab.lo[j] = Some(F::fzero());
        tab.hi[j] = Some(F::fzero());
        if !tab.is_basic[j] {
            tab.value[j] = F::fzero();
        }
    }
    let mut cost = vec![F::fzero(); tab.total()];
    for (j, cj) in c.iter().enumerate() {
        cost[j] = F::from_rational(cj);
    }
    tab.cost = cost;
    tab.recompute_reduced_costs();
    tab.bland = F::EXACT;
    tab.degenerate_run = 0;
    let step = tab.run()?;
    let x = tab.structural_values().iter().map(Field::to_rational).collect();
    match step {
        Step::Optimal => {
            let (y_rows, y_lo, y_hi) = tab.multipliers();
            Ok(Outcome::Optimal { x, y_rows, y_lo, y_hi })
        }
        Step::Unbounded { entering, dir } => Ok(Outcome::Unbounded {
            x,
            ray: tab.ray(entering, dir),
        }),
    }
}
