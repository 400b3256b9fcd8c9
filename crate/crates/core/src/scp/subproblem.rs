//! The linearized max-min trust-region step.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus};

use super::Mode;
use crate::lp::LinearProgram;
use crate::signal::{ControlSet, MAX_AMPLITUDE};
use crate::{Error, Result};

/// Constraint slack accepted on a returned step.
const STEP_TOL: f64 = 1e-9;

/// Maximizes `min_i(Fᵢ + gᵢ·x)` (or the mean in average mode) over steps `x`
/// with `|xₖ| ≤ λ` that keep `c + x` inside the amplitude and slew limits.
/// A positive `tikhonov` subtracts `μ‖x‖²` from the objective.
pub fn solve_subproblem(
    fidelities: &[f64],
    gradients: &[Vec<f64>],
    trust_region: f64,
    controls: &ControlSet,
    mode: Mode,
    tikhonov: f64,
) -> Result<Vec<f64>> {
    let n = 2 * controls.len();
    if fidelities.is_empty() || fidelities.len() != gradients.len() {
        return Err(Error::Solver("need one gradient per fidelity sample".into()));
    }
    if gradients.iter().any(|g| g.len() != n) {
        return Err(Error::Solver(format!("gradients must have {n} entries")));
    }
    if !(trust_region > 0.0) {
        return Err(Error::Solver(format!("trust region must be positive, got {trust_region}")));
    }
    if !(tikhonov >= 0.0) {
        return Err(Error::Solver("Tikhonov weight must be non-negative".into()));
    }
    let (fs, gs) = match mode {
        Mode::WorstCase => (fidelities.to_vec(), gradients.to_vec()),
        Mode::AverageCase => {
            let k = fidelities.len() as f64;
            let f = fidelities.iter().sum::<f64>() / k;
            let g = (0..n).map(|j| gradients.iter().map(|g| g[j]).sum::<f64>() / k).collect();
            (vec![f], vec![g])
        }
    };
    let lp = build(&fs, &gs, trust_region, controls)?;
    let mut start = vec![0.0; n];
    start.push(fs.iter().cloned().fold(f64::INFINITY, f64::min));

    let mut x = if tikhonov > 0.0 {
        solve_qp(&lp, tikhonov)?
    } else {
        lp.solve(&start)?.x
    };
    x.truncate(n);
    shrink_into(&lp, &mut x, &fs, &gs)?;
    Ok(x)
}

fn build(fs: &[f64], gs: &[Vec<f64>], lambda: f64, c: &ControlSet) -> Result<LinearProgram> {
    let n = 2 * c.len();
    let inf = f64::INFINITY;
    let cv = c.to_vector();
    // Bounds always contain 0 so the current point stays feasible even when
    // it sits a rounding error outside the box.
    let mut lower: Vec<f64> = cv.iter().map(|ck| (-lambda).max(-MAX_AMPLITUDE - ck).min(0.0)).collect();
    let mut upper: Vec<f64> = cv.iter().map(|ck| lambda.min(MAX_AMPLITUDE - ck).max(0.0)).collect();
    lower.push(-inf);
    upper.push(inf);
    let mut objective = vec![0.0; n];
    objective.push(1.0);
    let mut lp = LinearProgram::new(objective, lower, upper)?;
    for (f, g) in fs.iter().zip(gs) {
        let mut row: Vec<(usize, f64)> = g.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, -v)).collect();
        row.push((n, 1.0));
        lp.add_row(row, -inf, *f)?;
    }
    let s = c.slew_limit;
    let half = c.len();
    for off in [0, half] {
        for k in 0..half - 1 {
            let d = cv[off + k] - cv[off + k + 1];
            lp.add_row(
                vec![(off + k, 1.0), (off + k + 1, -1.0)],
                (-s - d).min(0.0),
                (s - d).max(0.0),
            )?;
        }
    }
    Ok(lp)
}

/// Scales `x` towards 0 until every constraint holds to [`STEP_TOL`]; the
/// feasible set is convex and contains 0.
fn shrink_into(lp: &LinearProgram, x: &mut Vec<f64>, fs: &[f64], gs: &[Vec<f64>]) -> Result<()> {
    let with_t = |x: &[f64]| -> Vec<f64> {
        let t = fs
            .iter()
            .zip(gs)
            .map(|(f, g)| f + g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let mut z = x.to_vec();
        z.push(t);
        z
    };
    if lp.violation(&with_t(x)) <= STEP_TOL {
        return Ok(());
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let trial: Vec<f64> = x.iter().map(|v| v * mid).collect();
        if lp.violation(&with_t(&trial)) <= STEP_TOL {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x.iter_mut().for_each(|v| *v *= lo);
    if lp.violation(&with_t(x)) > STEP_TOL {
        return Err(Error::Solver("step violates the subproblem constraints".into()));
    }
    Ok(())
}

fn solve_qp(lp: &LinearProgram, mu: f64) -> Result<Vec<f64>> {
    let nz = lp.num_vars();
    let n = nz - 1;
    // Minimize μ‖x‖² − t, i.e. ½zᵀPz + qᵀz with P = 2μ on the x block.
    let p = CscMatrix::new_from_triplets(nz, nz, (0..n).collect(), (0..n).collect(), vec![2.0 * mu; n]);
    let mut q = vec![0.0; nz];
    q[n] = -1.0;
    let (mut ri, mut ci, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut push_row = |coeffs: &[(usize, f64)], sign: f64, rhs: f64| {
        let r = b.len();
        for &(j, v) in coeffs {
            ri.push(r);
            ci.push(j);
            vals.push(sign * v);
        }
        b.push(sign * rhs);
    };
    for j in 0..nz {
        if lp.upper[j].is_finite() {
            push_row(&[(j, 1.0)], 1.0, lp.upper[j]);
        }
        if lp.lower[j].is_finite() {
            push_row(&[(j, 1.0)], -1.0, lp.lower[j]);
        }
    }
    for (coeffs, lo, hi) in lp.rows() {
        if hi.is_finite() {
            push_row(coeffs, 1.0, hi);
        }
        if lo.is_finite() {
            push_row(coeffs, -1.0, lo);
        }
    }
    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, nz, ri, ci, vals);
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .build()
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &[NonnegativeConeT(m)], settings)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(solver.solution.x.clone()),
        s => Err(Error::Solver(format!("quadratic subproblem ended with {s:?}"))),
    }
}
