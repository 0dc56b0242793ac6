//! Dense two-phase tableau simplex.
//!
//! Upper bounds become ordinary rows. Rows with a negative right-hand side
//! are negated first. `<=` rows get a slack, `>=` rows a surplus plus an
//! artificial, `=` rows an artificial. Artificials stay in the tableau after
//! phase one (but may not re-enter) so their reduced costs give the duals.

use super::{certify, LinearProgram, LpSolution, LpSolver, LpStatus, Relation};
use crate::error::{AvaError, Result};
use crate::rational;

/// Basic column of every tableau row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis(pub Vec<usize>);

#[derive(Clone, Debug)]
pub struct DenseSimplex {
    pub tolerance: f64,
    pub pivot_tol: f64,
}

impl DenseSimplex {
    pub fn new(tolerance: f64) -> Self {
        DenseSimplex { tolerance, pivot_tol: 1e-11 }
    }

    /// Re-solves starting from a previously returned basis. Falls back to a
    /// cold start when the basis is singular or primal infeasible.
    pub fn solve_from_basis(&self, lp: &LinearProgram, basis: &Basis) -> Result<LpSolution> {
        lp.validate()?;
        let mut tab = Tableau::build(lp);
        if basis.0.len() == tab.m && tab.install(&basis.0, self.pivot_tol, self.tolerance) {
            let out = self.finish_phase_two(lp, &mut tab, self.pivot_tol, false)?;
            if let Some(sol) = out {
                return Ok(sol);
            }
        }
        self.solve(lp)
    }

    fn attempt(&self, lp: &LinearProgram, pivot_tol: f64, bland: bool) -> Result<Option<LpSolution>> {
        let mut tab = Tableau::build(lp);
        let opt_tol = self.opt_tol();

        // Phase one: maximize minus the sum of artificials.
        let costs: Vec<f64> = (0..tab.ncols).map(|k| if k >= tab.art_start { -1.0 } else { 0.0 }).collect();
        tab.set_objective(&costs);
        let allow_all = tab.ncols;
        match tab.iterate(allow_all, pivot_tol, opt_tol, bland)? {
            Step::Optimal => {}
            Step::Unbounded => return Err(AvaError::NumericalFailure("phase one unbounded".into())),
        }
        let scale = 1.0 + tab.max_rhs;
        if tab.obj_value() < -self.tolerance * scale {
            return Ok(Some(LpSolution {
                status: LpStatus::Infeasible,
                values: vec![],
                objective: f64::NAN,
                duals: vec![],
                bound_duals: vec![],
                basis: None,
                exact_objective: None,
                exact_values: None,
                iterations: tab.iterations,
            }));
        }
        tab.drive_out_artificials(pivot_tol);
        self.finish_phase_two(lp, &mut tab, pivot_tol, bland)
    }

    fn opt_tol(&self) -> f64 {
        (self.tolerance * 0.1).min(1e-10)
    }

    fn finish_phase_two(
        &self,
        lp: &LinearProgram,
        tab: &mut Tableau,
        pivot_tol: f64,
        bland: bool,
    ) -> Result<Option<LpSolution>> {
        let mut costs = vec![0.0; tab.ncols];
        for (k, c) in lp.objective.iter().enumerate() {
            costs[k] = rational::to_f64(c);
        }
        tab.set_objective(&costs);
        let start = tab.iterations;
        let step = tab.iterate(tab.art_start, pivot_tol, self.opt_tol(), bland)?;
        if step == Step::Unbounded {
            return Ok(Some(LpSolution {
                status: LpStatus::Unbounded,
                values: vec![],
                objective: f64::INFINITY,
                duals: vec![],
                bound_duals: vec![],
                basis: None,
                exact_objective: None,
                exact_values: None,
                iterations: tab.iterations,
            }));
        }
        let n = lp.n_vars();
        let mut values = vec![0.0; n];
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < n {
                values[b] = tab.rhs(r).max(0.0);
            }
        }
        if lp.max_violation(&values) > self.tolerance {
            return Ok(None);
        }
        let mut y = vec![0.0; tab.m];
        for r in 0..tab.m {
            let v = tab.at(tab.m, tab.ident[r]);
            y[r] = if tab.flipped[r] { -v } else { v };
        }
        let duals = y[..lp.n_rows()].to_vec();
        let mut bound_duals = vec![0.0; n];
        for (r, &k) in tab.bound_var.iter().enumerate() {
            bound_duals[k] = y[lp.n_rows() + r];
        }
        let objective = lp.objective_at(&values);
        let cert = certify(lp, &values, &duals, &bound_duals);
        Ok(Some(LpSolution {
            status: LpStatus::Optimal,
            values,
            objective,
            duals,
            bound_duals,
            basis: Some(Basis(tab.basis.clone())),
            exact_objective: cert.as_ref().map(|c| c.objective.clone()),
            exact_values: cert.map(|c| c.x),
            iterations: tab.iterations - start,
        }))
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        lp.validate()?;
        if let Some(sol) = self.attempt(lp, self.pivot_tol, false)? {
            return Ok(sol);
        }
        // Re-solve refusing small pivots, with Bland's rule from the start.
        if let Some(sol) = self.attempt(lp, 1e-7, true)? {
            return Ok(sol);
        }
        Err(AvaError::NumericalFailure(format!("residual above {} after re-solve", self.tolerance)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `(m + 1) x (ncols + 1)`; last row is the objective, last column the rhs.
    t: Vec<f64>,
    basis: Vec<usize>,
    art_start: usize,
    ident: Vec<usize>,
    flipped: Vec<bool>,
    bound_var: Vec<usize>,
    max_rhs: f64,
    iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.n_vars();
        let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|r| {
                let c = r.coeffs.iter().map(|(k, a)| (*k, rational::to_f64(a))).collect();
                (c, r.rel, rational::to_f64(&r.rhs))
            })
            .collect();
        let mut bound_var = Vec::new();
        for (k, u) in lp.upper.iter().enumerate() {
            if let Some(u) = u {
                rows.push((vec![(k, 1.0)], Relation::Le, rational::to_f64(u)));
                bound_var.push(k);
            }
        }
        let m = rows.len();
        let mut flipped = vec![false; m];
        for (r, row) in rows.iter_mut().enumerate() {
            if row.2 < 0.0 {
                flipped[r] = true;
                for c in &mut row.0 {
                    c.1 = -c.1;
                }
                row.2 = -row.2;
                row.1 = match row.1 {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let art_start = n + n_slack;
        let ncols = art_start + n_art;
        let width = ncols + 1;
        let mut t = vec![0.0; (m + 1) * width];
        let mut basis = vec![0; m];
        let mut ident = vec![0; m];
        let (mut s, mut a) = (n, art_start);
        let mut max_rhs: f64 = 0.0;
        for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            for &(k, v) in coeffs {
                t[r * width + k] = v;
            }
            t[r * width + ncols] = *rhs;
            max_rhs = max_rhs.max(rhs.abs());
            match rel {
                Relation::Le => {
                    t[r * width + s] = 1.0;
                    basis[r] = s;
                    ident[r] = s;
                    s += 1;
                }
                Relation::Ge => {
                    t[r * width + s] = -1.0;
                    s += 1;
                    t[r * width + a] = 1.0;
                    basis[r] = a;
                    ident[r] = a;
                    a += 1;
                }
                Relation::Eq => {
                    t[r * width + a] = 1.0;
                    basis[r] = a;
                    ident[r] = a;
                    a += 1;
                }
            }
        }
        Tableau { m, ncols, t, basis, art_start, ident, flipped, bound_var, max_rhs, iterations: 0 }
    }

    #[inline]
    fn at(&self, r: usize, k: usize) -> f64 {
        self.t[r * (self.ncols + 1) + k]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.ncols)
    }

    fn obj_value(&self) -> f64 {
        self.rhs(self.m)
    }

    /// Objective row `z_k = c_B B^-1 A_k - c_k` for the current basis.
    fn set_objective(&mut self, costs: &[f64]) {
        let width = self.ncols + 1;
        let zr = self.m * width;
        for k in 0..width {
            let ck = if k < self.ncols { costs[k] } else { 0.0 };
            let mut z = -ck;
            for r in 0..self.m {
                let cb = costs[self.basis[r]];
                if cb != 0.0 {
                    z += cb * self.t[r * width + k];
                }
            }
            self.t[zr + k] = z;
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.ncols + 1;
        let p = self.t[pr * width + pc];
        let (before, rest) = self.t.split_at_mut(pr * width);
        let (prow, after) = rest.split_at_mut(width);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[pc] = 1.0;
        for row in before.chunks_mut(width).chain(after.chunks_mut(width)) {
            let f = row[pc];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations with entering columns restricted to `< allow`.
    fn iterate(&mut self, allow: usize, pivot_tol: f64, opt_tol: f64, bland: bool) -> Result<Step> {
        let bland_after = 10 * (self.m + self.ncols);
        let cap = 50 * (self.m + self.ncols) + 1000;
        let mut local = 0usize;
        loop {
            let use_bland = bland || local >= bland_after;
            let mut enter = None;
            let mut best = -opt_tol;
            for k in 0..allow {
                let z = self.at(self.m, k);
                if z < best {
                    enter = Some(k);
                    if use_bland {
                        break;
                    }
                    best = z;
                }
            }
            let Some(k) = enter else { return Ok(Step::Optimal) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, k);
                if a > pivot_tol {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Ok(Step::Unbounded) };
            self.pivot(r, k);
            self.iterations += 1;
            local += 1;
            if local > cap {
                return Err(AvaError::NumericalFailure("iteration limit reached".into()));
            }
        }
    }

    /// Pivots basic artificials out on any usable non-artificial column.
    fn drive_out_artificials(&mut self, pivot_tol: f64) {
        for r in 0..self.m {
            if self.basis[r] < self.art_start {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for k in 0..self.art_start {
                let a = self.at(r, k).abs();
                if a > pivot_tol && best.is_none_or(|(_, b)| a > b) {
                    best = Some((k, a));
                }
            }
            if let Some((k, _)) = best {
                self.pivot(r, k);
            }
        }
    }

    /// Installs a prescribed basis; false if singular or infeasible.
    fn install(&mut self, cols: &[usize], pivot_tol: f64, tol: f64) -> bool {
        let mut used = vec![false; self.m];
        for &c in cols {
            if c >= self.ncols {
                return false;
            }
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.m {
                if used[r] {
                    continue;
                }
                let a = self.at(r, c).abs();
                if a > pivot_tol && best.is_none_or(|(_, b)| a > b) {
                    best = Some((r, a));
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, c);
            used[r] = true;
        }
        let scale = 1.0 + self.max_rhs;
        (0..self.m).all(|r| {
            let v = self.rhs(r);
            v >= -tol * scale && (self.basis[r] < self.art_start || v <= tol * scale)
        })
    }
}
