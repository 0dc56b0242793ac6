//! Generic maximization LPs with exact rational data, a dense simplex solver
//! and exact re-verification of its answers.

mod certify;
mod export;
mod simplex;

use num_rational::BigRational;

use crate::error::{AvaError, Result};
use crate::rational::{self, Rational};

pub use certify::{certify, Certificate};
pub use export::to_lp_format;
pub use simplex::{Basis, DenseSimplex};

/// Default primal/dual tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    /// Sparse coefficients `(variable, value)`; a variable appears at most once.
    pub coeffs: Vec<(usize, Rational)>,
    pub rel: Relation,
    pub rhs: Rational,
}

/// `max c.x` subject to rows, `0 <= x <= upper`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub names: Vec<String>,
    pub objective: Vec<Rational>,
    pub upper: Vec<Option<Rational>>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, obj: Rational, upper: Option<Rational>) -> usize {
        self.names.push(name.into());
        self.objective.push(obj);
        self.upper.push(upper);
        self.names.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, Rational)>, rel: Relation, rhs: Rational) {
        self.rows.push(Row { name: name.into(), coeffs, rel, rhs });
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.objective.len() != n || self.upper.len() != n {
            return Err(AvaError::Validation("inconsistent LP dimensions".into()));
        }
        for r in &self.rows {
            let mut seen = vec![false; n];
            for &(k, _) in &r.coeffs {
                if k >= n {
                    return Err(AvaError::Validation(format!("row {} references variable {k}", r.name)));
                }
                if std::mem::replace(&mut seen[k], true) {
                    return Err(AvaError::Validation(format!("row {} repeats variable {k}", r.name)));
                }
            }
        }
        Ok(())
    }

    /// Objective value of a float point.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| rational::to_f64(c) * v).sum()
    }

    /// Largest scaled violation `viol / (1 + |b|)` over rows and bounds.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &v) in x.iter().enumerate() {
            worst = worst.max(-v);
            if let Some(u) = &self.upper[k] {
                let u = rational::to_f64(u);
                worst = worst.max((v - u) / (1.0 + u.abs()));
            }
        }
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|(k, a)| rational::to_f64(a) * x[*k]).sum();
            let b = rational::to_f64(&r.rhs);
            let viol = match r.rel {
                Relation::Le => lhs - b,
                Relation::Ge => b - lhs,
                Relation::Eq => (lhs - b).abs(),
            };
            worst = worst.max(viol / (1.0 + b.abs()));
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Row duals (empty unless optimal).
    pub duals: Vec<f64>,
    /// Duals of the upper-bound constraints, zero for unbounded variables.
    pub bound_duals: Vec<f64>,
    pub basis: Option<Basis>,
    /// Exactly verified objective, when the vertex re-verifies in rationals.
    pub exact_objective: Option<BigRational>,
    pub exact_values: Option<Vec<BigRational>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn certified(&self) -> bool {
        self.exact_objective.is_some()
    }

    /// The exact objective if certified, else the float one.
    pub fn best_objective(&self) -> f64 {
        self.exact_objective.as_ref().map(rational::big_to_f64).unwrap_or(self.objective)
    }

    pub fn ensure_optimal(self) -> Result<LpSolution> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible => Err(AvaError::LpStatus("infeasible".into())),
            LpStatus::Unbounded => Err(AvaError::LpStatus("unbounded".into())),
        }
    }
}

/// Substitution seam for other LP back ends.
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution>;
}

/// Solves with the built-in dense simplex and certifies the result.
pub fn solve_lp(lp: &LinearProgram, tolerance: f64) -> Result<LpSolution> {
    DenseSimplex::new(tolerance).solve(lp)
}
