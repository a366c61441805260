use std::fmt;

use num_traits::{Signed, Zero};

use crate::rational::{self, Rational};

/// One `coeffs · v ≤ rhs` row. Coefficients are sorted by variable and nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<(usize, Rational)>,
    pub rhs: Rational,
    pub label: String,
}

impl Row {
    pub fn new(coeffs: impl IntoIterator<Item = (usize, Rational)>, rhs: Rational) -> Self {
        let mut merged: Vec<(usize, Rational)> = Vec::new();
        let mut raw: Vec<(usize, Rational)> = coeffs.into_iter().collect();
        raw.sort_by_key(|(v, _)| *v);
        for (v, c) in raw {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        Row {
            coeffs: merged,
            rhs,
            label: String::new(),
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn activity(&self, point: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .fold(Rational::zero(), |acc, (v, c)| acc + c * &point[*v])
    }

    pub fn is_satisfied(&self, point: &[Rational]) -> bool {
        self.activity(point) <= self.rhs
    }
}

/// A system of `≤` rows over declared variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearSystem {
    pub var_names: Vec<String>,
    pub rows: Vec<Row>,
}

impl LinearSystem {
    pub fn new(var_names: Vec<String>) -> Self {
        LinearSystem {
            var_names,
            rows: Vec::new(),
        }
    }

    /// Anonymous variables `v0..v{n-1}`.
    pub fn with_vars(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("v{i}")).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn push(&mut self, row: Row) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn add_row(&mut self, coeffs: impl IntoIterator<Item = (usize, Rational)>, rhs: Rational) -> usize {
        self.push(Row::new(coeffs, rhs))
    }

    /// Rows referencing undeclared variables.
    pub fn check_well_formed(&self) -> Result<(), super::LpError> {
        for (i, row) in self.rows.iter().enumerate() {
            if let Some((v, _)) = row.coeffs.iter().find(|(v, _)| *v >= self.num_vars()) {
                return Err(super::LpError::UndeclaredVariable { row: i, var: *v });
            }
        }
        Ok(())
    }

    /// Index of the first row violated by `point`.
    pub fn first_violation(&self, point: &[Rational]) -> Option<usize> {
        self.rows.iter().position(|r| !r.is_satisfied(point))
    }

    pub fn is_satisfied_by(&self, point: &[Rational]) -> bool {
        point.len() == self.num_vars() && self.first_violation(point).is_none()
    }
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            write!(f, "r{i}:")?;
            if row.coeffs.is_empty() {
                write!(f, " 0")?;
            }
            for (v, c) in &row.coeffs {
                let sign = if c.is_negative() { '-' } else { '+' };
                write!(f, " {sign} {} {}", rational::Display(&c.abs()), self.var_names[*v])?;
            }
            write!(f, " <= {}", rational::Display(&row.rhs))?;
            if !row.label.is_empty() {
                write!(f, "  ; {}", row.label)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn rows_merge_duplicates_and_drop_zeros() {
        let row = Row::new([(1, int(2)), (0, int(1)), (1, int(-2))], int(3));
        assert_eq!(row.coeffs, vec![(0, int(1))]);
    }

    #[test]
    fn dump_lists_rows() {
        let mut s = LinearSystem::new(vec!["x".into()]);
        s.add_row([(0, int(1))], int(-1));
        s.add_row([(0, int(-1))], int(0));
        assert_eq!(s.to_string(), "r0: + 1 x <= -1\nr1: - 1 x <= 0\n");
    }
}
