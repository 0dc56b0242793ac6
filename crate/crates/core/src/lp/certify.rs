//! Exact re-verification of a floating-point optimum.
//!
//! The primal point and the dual multipliers are snapped to nearby rationals
//! with bounded denominators; the pair is accepted only if it is exactly
//! primal feasible, exactly dual feasible and has zero duality gap.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{LinearProgram, Relation};
use crate::rational::{limit_denominator, to_big};

const DENOMINATORS: [i64; 3] = [1_000, 1_000_000, 1_000_000_000];

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub x: Vec<BigRational>,
    pub y: Vec<BigRational>,
    pub bound_y: Vec<BigRational>,
    pub objective: BigRational,
}

struct ExactLp {
    c: Vec<BigRational>,
    upper: Vec<Option<BigRational>>,
    rows: Vec<(Vec<(usize, BigRational)>, Relation, BigRational)>,
}

impl ExactLp {
    fn new(lp: &LinearProgram) -> Self {
        ExactLp {
            c: lp.objective.iter().map(to_big).collect(),
            upper: lp.upper.iter().map(|u| u.as_ref().map(to_big)).collect(),
            rows: lp
                .rows
                .iter()
                .map(|r| (r.coeffs.iter().map(|(k, a)| (*k, to_big(a))).collect(), r.rel, to_big(&r.rhs)))
                .collect(),
        }
    }

    fn primal_ok(&self, x: &[BigRational]) -> bool {
        for (k, v) in x.iter().enumerate() {
            if v.is_negative() {
                return false;
            }
            if let Some(u) = &self.upper[k] {
                if v > u {
                    return false;
                }
            }
        }
        self.rows.iter().all(|(coeffs, rel, b)| {
            let lhs: BigRational = coeffs.iter().map(|(k, a)| a * &x[*k]).sum();
            match rel {
                Relation::Le => &lhs <= b,
                Relation::Ge => &lhs >= b,
                Relation::Eq => &lhs == b,
            }
        })
    }

    /// `A^T y + yb >= c` with sign rules; returns the dual objective.
    fn dual_objective(&self, y: &[BigRational], yb: &[BigRational]) -> Option<BigRational> {
        let n = self.c.len();
        let mut reduced: Vec<BigRational> = yb.to_vec();
        for ((coeffs, rel, _), yr) in self.rows.iter().zip(y) {
            let ok = match rel {
                Relation::Le => !yr.is_negative(),
                Relation::Ge => !yr.is_positive(),
                Relation::Eq => true,
            };
            if !ok {
                return None;
            }
            if yr.is_zero() {
                continue;
            }
            for (k, a) in coeffs {
                reduced[*k] += a * yr;
            }
        }
        for k in 0..n {
            if yb[k].is_negative() || (self.upper[k].is_none() && !yb[k].is_zero()) {
                return None;
            }
            if reduced[k] < self.c[k] {
                return None;
            }
        }
        let mut obj: BigRational = self.rows.iter().zip(y).map(|((_, _, b), yr)| b * yr).sum();
        for k in 0..n {
            if let Some(u) = &self.upper[k] {
                obj += u * &yb[k];
            }
        }
        Some(obj)
    }
}

fn snap(v: &[f64], den: i64) -> Option<Vec<BigRational>> {
    v.iter().map(|x| limit_denominator(*x, den)).collect()
}

/// Returns an exact optimality certificate near the float solution, if any.
pub fn certify(lp: &LinearProgram, x: &[f64], y: &[f64], bound_y: &[f64]) -> Option<Certificate> {
    let exact = ExactLp::new(lp);
    let mut primal = Vec::new();
    for den in DENOMINATORS {
        if let Some(xs) = snap(x, den) {
            if exact.primal_ok(&xs) {
                let obj: BigRational = exact.c.iter().zip(&xs).map(|(c, v)| c * v).sum();
                primal.push((xs, obj));
            }
        }
    }
    if primal.is_empty() {
        return None;
    }
    for den in DENOMINATORS {
        let (Some(ys), Some(ybs)) = (snap(y, den), snap(bound_y, den)) else { continue };
        let Some(dual_obj) = exact.dual_objective(&ys, &ybs) else { continue };
        if let Some((xs, obj)) = primal.iter().find(|(_, obj)| *obj == dual_obj) {
            return Some(Certificate { x: xs.clone(), y: ys, bound_y: ybs, objective: obj.clone() });
        }
    }
    None
}
