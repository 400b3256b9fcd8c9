//! Master-equation propagation with relaxation and pure dephasing.
//!
//! Density matrices are vectorized by stacking columns, which is also
//! nalgebra's storage order, so `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use serde::{Deserialize, Serialize};

use super::{fidelity::cardinal_states, ErrorSample, TransmonModel};
use crate::signal::Signal;
use crate::{CMatrix, Error, Result, C64};

/// Relaxation time shared by every `|j⟩ → |j−1⟩` decay and a pure dephasing
/// time. Either may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladConfig {
    pub t1: f64,
    pub t_phi: f64,
}

impl LindbladConfig {
    pub fn new(t1: f64, t_phi: f64) -> Result<Self> {
        let ok = |t: f64| t > 0.0 && !t.is_nan();
        if !ok(t1) || !ok(t_phi) {
            return Err(Error::Input(format!(
                "T1 and Tφ must be positive (or infinite), got {t1}, {t_phi}"
            )));
        }
        Ok(Self { t1, t_phi })
    }

    /// Relaxation only (Tφ = ∞).
    pub fn relaxation(t1: f64) -> Result<Self> {
        Self::new(t1, f64::INFINITY)
    }

    pub fn closed() -> Self {
        Self {
            t1: f64::INFINITY,
            t_phi: f64::INFINITY,
        }
    }

    fn jump_operators(&self, n: usize) -> Vec<(f64, CMatrix)> {
        let mut ops = Vec::new();
        if self.t1.is_finite() {
            for j in 1..n {
                let mut s = CMatrix::zeros(n, n);
                s[(j - 1, j)] = C64::new(1.0, 0.0);
                ops.push((1.0 / self.t1, s));
            }
        }
        if self.t_phi.is_finite() {
            for j in 1..n {
                let mut p = CMatrix::zeros(n, n);
                p[(j, j)] = C64::new(1.0, 0.0);
                ops.push((1.0 / self.t_phi, p));
            }
        }
        ops
    }
}

/// Liouvillian superoperator for `ρ̇ = −i[H,ρ] + Σ γ D[L]ρ`.
pub fn liouvillian(h: &CMatrix, lind: &LindbladConfig) -> CMatrix {
    let n = h.nrows();
    let id = CMatrix::identity(n, n);
    let i = C64::new(0.0, 1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i);
    for (rate, op) in lind.jump_operators(n) {
        let ldl = op.adjoint() * &op;
        let d = op.conjugate().kronecker(&op)
            - id.kronecker(&ldl) * C64::new(0.5, 0.0)
            - ldl.transpose().kronecker(&id) * C64::new(0.5, 0.0);
        l += d * C64::new(rate, 0.0);
    }
    l
}

fn vectorize(rho: &CMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(rho.as_slice())
}

fn unvectorize(v: &nalgebra::DVector<C64>, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Density matrices at every piece boundary, `states[0] = ρ₀`.
#[derive(Clone, Debug)]
pub struct LindbladTrajectory {
    pub states: Vec<CMatrix>,
    pub dt: f64,
}

impl LindbladTrajectory {
    pub fn last(&self) -> &CMatrix {
        self.states.last().expect("trajectory holds ρ₀")
    }
}

/// Integrates the master equation with one Liouvillian exponential per piece.
pub fn propagate_lindblad(
    model: &TransmonModel,
    signal: &Signal,
    error: ErrorSample,
    lind: &LindbladConfig,
    rho0: &CMatrix,
) -> Result<LindbladTrajectory> {
    signal.validate()?;
    let n = model.num_levels();
    if rho0.shape() != (n, n) {
        return Err(Error::Input(format!(
            "ρ₀ must be {n}×{n}, got {:?}",
            rho0.shape()
        )));
    }
    let tr = rho0.trace();
    if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
        return Err(Error::Input(format!("ρ₀ must have unit trace, got {tr}")));
    }
    let herm = (rho0 - rho0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-12 {
        return Err(Error::Input("ρ₀ must be Hermitian".into()));
    }
    let ops = model.operators(error);
    let dt = C64::new(signal.dt(), 0.0);
    let mut v = vectorize(rho0);
    let mut states = Vec::with_capacity(signal.len() + 1);
    states.push(rho0.clone());
    for (&ex, &ey) in signal.ex().iter().zip(signal.ey()) {
        let step = (liouvillian(&ops.hamiltonian(ex, ey), lind) * dt).exp();
        v = step * v;
        states.push(unvectorize(&v, n));
    }
    Ok(LindbladTrajectory {
        states,
        dt: signal.dt(),
    })
}

/// The full-pulse superoperator (product of the per-piece exponentials).
pub fn lindblad_superoperator(
    model: &TransmonModel,
    signal: &Signal,
    error: ErrorSample,
    lind: &LindbladConfig,
) -> Result<CMatrix> {
    signal.validate()?;
    let n = model.num_levels();
    let ops = model.operators(error);
    let dt = C64::new(signal.dt(), 0.0);
    let mut total = CMatrix::identity(n * n, n * n);
    for (&ex, &ey) in signal.ex().iter().zip(signal.ey()) {
        let step = (liouvillian(&ops.hamiltonian(ex, ey), lind) * dt).exp();
        total = step * total;
    }
    Ok(total)
}

/// `|ψ⟩⟨ψ|` for each of the six cardinal states.
pub fn pole_density_matrices(n: usize) -> Vec<CMatrix> {
    cardinal_states(n).iter().map(|p| p * p.adjoint()).collect()
}

/// Average fidelity of an open evolution from the six evolved poles.
pub fn average_fidelity_open(
    model: &TransmonModel,
    signal: &Signal,
    error: ErrorSample,
    lind: &LindbladConfig,
    target: &CMatrix,
) -> Result<f64> {
    let sup = lindblad_superoperator(model, signal, error, lind)?;
    let finals: Vec<CMatrix> = pole_density_matrices(model.num_levels())
        .iter()
        .map(|rho| apply_superoperator(&sup, rho))
        .collect();
    super::fidelity_average(&finals, target)
}

/// Applies a superoperator to a density matrix.
pub fn apply_superoperator(sup: &CMatrix, rho: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    unvectorize(&(sup * vectorize(rho)), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodel::{fidelity_average_unitary, propagate_unitary, x_half_pi_target};

    fn basis_rho(n: usize, k: usize) -> CMatrix {
        let mut r = CMatrix::zeros(n, n);
        r[(k, k)] = C64::new(1.0, 0.0);
        r
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn first_level_decays_exponentially() {
        let m = TransmonModel::reference();
        let t1 = 20e-6;
        let steps = 100;
        let sig = Signal::new(t1 / steps as f64, vec![0.0; steps], vec![0.0; steps]).unwrap();
        let lind = LindbladConfig::relaxation(t1).unwrap();
        let traj = propagate_lindblad(&m, &sig, ErrorSample::ZERO, &lind, &basis_rho(3, 1)).unwrap();
        let p1 = traj.last()[(1, 1)].re;
        assert!((p1 - (-1.0f64).exp()).abs() < 1e-6, "{p1}");
    }

    #[test]
    fn cascade_matches_rate_equations() {
        // p2 = e^{−γt}, p1 = γt·e^{−γt}, p0 = 1 − p1 − p2 for equal rates
        let m = TransmonModel::reference();
        let t1 = 10e-6;
        let steps = 60;
        let dt = 3.0 * t1 / steps as f64;
        let sig = Signal::new(dt, vec![0.0; steps], vec![0.0; steps]).unwrap();
        let lind = LindbladConfig::relaxation(t1).unwrap();
        let traj = propagate_lindblad(&m, &sig, ErrorSample::ZERO, &lind, &basis_rho(3, 2)).unwrap();
        for (k, rho) in traj.states.iter().enumerate() {
            let x = k as f64 * dt / t1;
            let p2 = (-x).exp();
            let p1 = x * (-x).exp();
            assert!((rho[(2, 2)].re - p2).abs() < 1e-9);
            assert!((rho[(1, 1)].re - p1).abs() < 1e-9);
            assert!((rho[(0, 0)].re - (1.0 - p1 - p2)).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_system_matches_unitary() {
        let m = TransmonModel::reference();
        let n = 80;
        let ex: Vec<f64> = (0..n).map(|k| 0.5 * (k as f64 * 0.13).sin()).collect();
        let ey: Vec<f64> = (0..n).map(|k| 0.3 * (k as f64 * 0.07).cos()).collect();
        let sig = Signal::new(1e-9, ex, ey).unwrap();
        let err = ErrorSample::amplitude(0.04);
        let u = propagate_unitary(&m, &sig, err).unwrap().final_unitary;
        for rho0 in pole_density_matrices(3) {
            let traj = propagate_lindblad(&m, &sig, err, &LindbladConfig::closed(), &rho0).unwrap();
            let expected = &u * &rho0 * u.adjoint();
            assert!(max_abs(&(traj.last() - expected)) < 1e-9);
        }
    }

    #[test]
    fn trace_and_hermiticity_preserved() {
        let m = TransmonModel::reference();
        let n = 60;
        let ex: Vec<f64> = (0..n).map(|k| 0.6 * (k as f64 * 0.2).sin()).collect();
        let sig = Signal::new(1e-9, ex, vec![0.1; n]).unwrap();
        let lind = LindbladConfig::new(5e-6, 8e-6).unwrap();
        let rho0 = &pole_density_matrices(3)[4];
        let traj = propagate_lindblad(&m, &sig, ErrorSample::ZERO, &lind, rho0).unwrap();
        for rho in &traj.states {
            assert!((rho.trace().re - 1.0).abs() < 1e-9);
            assert!(max_abs(&(rho - rho.adjoint())) < 1e-10);
        }
        let sup = lindblad_superoperator(&m, &sig, ErrorSample::ZERO, &lind).unwrap();
        assert!(max_abs(&(apply_superoperator(&sup, rho0) - traj.last())) < 1e-12);
    }

    #[test]
    fn open_average_fidelity_reduces_to_unitary() {
        let m = TransmonModel::reference();
        let n = 50;
        let ex: Vec<f64> = (0..n).map(|k| 0.4 * (k as f64 * 0.11).sin()).collect();
        let sig = Signal::new(1e-9, ex, vec![0.05; n]).unwrap();
        let t = x_half_pi_target(3);
        let u = propagate_unitary(&m, &sig, ErrorSample::ZERO).unwrap().final_unitary;
        let closed = average_fidelity_open(&m, &sig, ErrorSample::ZERO, &LindbladConfig::closed(), &t).unwrap();
        assert!((closed - fidelity_average_unitary(&u, &t).unwrap()).abs() < 1e-10);
        let open = average_fidelity_open(&m, &sig, ErrorSample::ZERO, &LindbladConfig::relaxation(10e-6).unwrap(), &t).unwrap();
        assert!(open < closed);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = TransmonModel::reference();
        let sig = Signal::new(1e-9, vec![0.0; 3], vec![0.0; 3]).unwrap();
        let bad = basis_rho(3, 0) * C64::new(1.1, 0.0);
        assert!(propagate_lindblad(&m, &sig, ErrorSample::ZERO, &LindbladConfig::closed(), &bad).is_err());
        assert!(LindbladConfig::new(0.0, 1.0).is_err());
        assert!(LindbladConfig::new(1.0, f64::INFINITY).is_ok());
    }
}
