//! Dense bounded-variable primal simplex for small linear programs.
//!
//! Solves `maximize cᵀz` subject to `lo ≤ z ≤ hi` and `row_lo ≤ a·z ≤ row_hi`
//! for each row, starting from a caller-supplied feasible point. Each row
//! gets a bounded slack `s = a·z`, so the working constraint is
//! `[A −I]·(z, s) = 0` and the slacks form the initial basis.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const PRIMAL_TOL: f64 = 1e-10;
const DUAL_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;
/// Basis changes between refactorizations of the basis inverse.
const REFACTOR_EVERY: usize = 100;

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    lo: f64,
    hi: f64,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    /// Bounds may be infinite.
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = objective.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Solver("bound vectors do not match the objective".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u || l.is_nan() || u.is_nan()) {
            return Err(Error::Solver("variable bounds are inconsistent".into()));
        }
        Ok(Self {
            objective,
            lower,
            upper,
            rows: Vec::new(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `lo ≤ Σ coeff·z[idx] ≤ hi`.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, lo: f64, hi: f64) -> Result<()> {
        if coeffs.iter().any(|(j, v)| *j >= self.num_vars() || !v.is_finite()) {
            return Err(Error::Solver("row references an unknown variable".into()));
        }
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(Error::Solver("row bounds are inconsistent".into()));
        }
        self.rows.push(Row { coeffs, lo, hi });
        Ok(())
    }

    /// Each row as `(coefficients, lo, hi)`.
    pub fn rows(&self) -> impl Iterator<Item = (&[(usize, f64)], f64, f64)> {
        self.rows.iter().map(|r| (r.coeffs.as_slice(), r.lo, r.hi))
    }

    fn row_value(&self, r: usize, z: &[f64]) -> f64 {
        self.rows[r].coeffs.iter().map(|&(j, v)| v * z[j]).sum()
    }

    /// Largest bound or row violation at `z`.
    pub fn violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - z[j]).max(z[j] - self.upper[j]);
        }
        for (r, row) in self.rows.iter().enumerate() {
            let v = self.row_value(r, z);
            worst = worst.max(row.lo - v).max(v - row.hi);
        }
        worst
    }

    /// Runs the simplex from the feasible point `start`.
    pub fn solve(&self, start: &[f64]) -> Result<LpSolution> {
        if start.len() != self.num_vars() {
            return Err(Error::Solver("start point has the wrong length".into()));
        }
        if self.violation(start) > 1e-9 {
            return Err(Error::Solver(format!(
                "start point is infeasible by {:.3e}",
                self.violation(start)
            )));
        }
        Tableau::new(self, start).run()
    }
}

struct Tableau<'a> {
    lp: &'a LinearProgram,
    n: usize,
    m: usize,
    /// Sparse columns of `[A −I]`.
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    val: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: DMatrix<f64>,
}

impl<'a> Tableau<'a> {
    fn new(lp: &'a LinearProgram, start: &[f64]) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + m];
        for (r, row) in lp.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                match cols[j].last_mut() {
                    Some((last, acc)) if *last == r => *acc += v,
                    _ => cols[j].push((r, v)),
                }
            }
            cols[n + r].push((r, -1.0));
        }
        let mut cost = lp.objective.clone();
        cost.resize(n + m, 0.0);
        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        let mut val = start.to_vec();
        for (r, row) in lp.rows.iter().enumerate() {
            lo.push(row.lo);
            hi.push(row.hi);
            // Clip the start's rounding so every basic value is in bounds.
            val.push(lp.row_value(r, start).clamp(row.lo, row.hi));
        }
        let basis: Vec<usize> = (n..n + m).collect();
        let mut in_basis = vec![false; n + m];
        basis.iter().for_each(|&j| in_basis[j] = true);
        Self {
            lp,
            n,
            m,
            cols,
            cost,
            lo,
            hi,
            val,
            basis,
            in_basis,
            binv: -DMatrix::identity(m, m),
        }
    }

    fn column_dot(&self, j: usize, y: &DVector<f64>) -> f64 {
        self.cols[j].iter().map(|&(r, v)| v * y[r]).sum()
    }

    /// `B⁻¹·a_j`.
    fn ftran(&self, j: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for &(r, v) in &self.cols[j] {
            out.axpy(v, &self.binv.column(r), 1.0);
        }
        out
    }

    fn refactor(&mut self) -> Result<()> {
        let mut b = DMatrix::zeros(self.m, self.m);
        for (r, &j) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                b[(i, r)] = v;
            }
        }
        self.binv = b
            .try_inverse()
            .ok_or_else(|| Error::Solver("basis became singular".into()))?;
        self.recompute_basics();
        Ok(())
    }

    /// Basic values from `[A −I]·v = 0` and the nonbasic values.
    fn recompute_basics(&mut self) {
        let mut rhs = DVector::zeros(self.m);
        for j in 0..self.n + self.m {
            if !self.in_basis[j] && self.val[j] != 0.0 {
                for &(r, v) in &self.cols[j] {
                    rhs[r] -= v * self.val[j];
                }
            }
        }
        let vb = &self.binv * rhs;
        for (r, &j) in self.basis.iter().enumerate() {
            self.val[j] = vb[r];
        }
    }

    fn run(mut self) -> Result<LpSolution> {
        let max_pivots = 50 * (self.n + self.m) + 1000;
        let mut degenerate = 0usize;
        let mut since_refactor = 0usize;
        for pivots in 0..max_pivots {
            // y = B⁻ᵀ·c_B, summed over the few basics with a nonzero cost.
            let mut y = DVector::zeros(self.m);
            for (r, &j) in self.basis.iter().enumerate() {
                if self.cost[j] != 0.0 {
                    y.axpy(self.cost[j], &self.binv.row(r).transpose(), 1.0);
                }
            }
            let bland = degenerate >= DEGENERATE_LIMIT;

            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.n + self.m {
                if self.in_basis[j] {
                    continue;
                }
                let d = self.cost[j] - self.column_dot(j, &y);
                let dir = if d > DUAL_TOL && self.val[j] < self.hi[j] - PRIMAL_TOL {
                    1.0
                } else if d < -DUAL_TOL && self.val[j] > self.lo[j] + PRIMAL_TOL {
                    -1.0
                } else {
                    continue;
                };
                let better = match entering {
                    None => true,
                    Some((_, _, best)) => !bland && d.abs() > best,
                };
                if better {
                    entering = Some((j, dir, d.abs()));
                }
                if bland {
                    break;
                }
            }
            let Some((j, dir, _)) = entering else {
                return Ok(self.finish(pivots));
            };

            let alpha = self.ftran(j);
            let own = if dir > 0.0 {
                self.hi[j] - self.val[j]
            } else {
                self.val[j] - self.lo[j]
            };
            let mut theta = own;
            let mut leave: Option<usize> = None;
            for r in 0..self.m {
                // Basic values move by −θ·dir·α.
                let rate = dir * alpha[r];
                let b = self.basis[r];
                let room = if rate > PIVOT_TOL {
                    (self.val[b] - self.lo[b]).max(0.0) / rate
                } else if rate < -PIVOT_TOL {
                    (self.hi[b] - self.val[b]).max(0.0) / -rate
                } else {
                    continue;
                };
                let tie_break = bland
                    && leave.is_some_and(|l| room == theta && self.basis[r] < self.basis[l]);
                if room < theta || tie_break {
                    theta = room;
                    leave = Some(r);
                }
            }
            if !theta.is_finite() {
                return Err(Error::Solver("linear program is unbounded".into()));
            }
            degenerate = if theta < PRIMAL_TOL { degenerate + 1 } else { 0 };

            self.val[j] += dir * theta;
            for r in 0..self.m {
                let b = self.basis[r];
                self.val[b] -= dir * theta * alpha[r];
            }
            let Some(r) = leave else {
                // Bound flip; the basis is unchanged.
                self.val[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                continue;
            };
            let out = self.basis[r];
            let rate = dir * alpha[r];
            self.val[out] = if rate > 0.0 { self.lo[out] } else { self.hi[out] };
            self.in_basis[out] = false;
            self.in_basis[j] = true;
            self.basis[r] = j;

            // Product-form update: row r ← row r / α_r, other rows i lose
            // α_i times the new row r.
            let prow = self.binv.row(r).transpose() / alpha[r];
            let mut elim = alpha;
            elim[r] = 0.0;
            self.binv.ger(-1.0, &elim, &prow, 1.0);
            self.binv.set_row(r, &prow.transpose());

            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                since_refactor = 0;
            }
        }
        Err(Error::Solver(format!("no convergence after {max_pivots} pivots")))
    }

    fn finish(mut self, pivots: usize) -> LpSolution {
        self.recompute_basics();
        let mut x: Vec<f64> = self.val[..self.n].to_vec();
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[j], self.hi[j]);
        }
        let objective = x.iter().zip(&self.lp.objective).map(|(a, b)| a * b).sum();
        LpSolution { x, objective, pivots }
    }
}
