use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{fidelity::cardinal_states, ErrorSample, TransmonModel};
use crate::signal::Signal;
use crate::{CMatrix, Error, Result, C64};

/// Eigendecomposition of one piece-wise constant generator `H·dt` and the
/// resulting propagator `exp(−iH dt)`.
#[derive(Clone, Debug)]
pub struct HermitianPiece {
    /// Eigenvalues of `H·dt` (dimensionless phases).
    pub phases: DVector<f64>,
    pub vectors: CMatrix,
    pub propagator: CMatrix,
}

impl HermitianPiece {
    pub fn new(h: &CMatrix, dt: f64) -> Self {
        let eig = SymmetricEigen::new(h * C64::new(dt, 0.0));
        let vectors = eig.eigenvectors;
        let phases = eig.eigenvalues;
        let n = phases.len();
        let mut scaled = vectors.clone();
        for k in 0..n {
            let p = C64::from_polar(1.0, -phases[k]);
            for r in 0..n {
                scaled[(r, k)] *= p;
            }
        }
        let propagator = &scaled * vectors.adjoint();
        Self {
            phases,
            vectors,
            propagator,
        }
    }

    /// Divided differences of `f(e) = exp(−i e)` over the eigen-phases,
    /// scaled by `dt` so that the directional derivative of the propagator
    /// along a generator perturbation `A` is `V (Φ ∘ V†AV) V†`.
    pub fn loewner(&self, dt: f64) -> CMatrix {
        let n = self.phases.len();
        DMatrix::from_fn(n, n, |a, b| {
            let (ea, eb) = (self.phases[a], self.phases[b]);
            let mid = 0.5 * (ea + eb);
            let half = 0.5 * (ea - eb);
            C64::new(0.0, -dt) * C64::from_polar(1.0, -mid) * sinc(half)
        })
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `exp(−iH dt)` for a single piece.
pub fn piece_propagator(h: &CMatrix, dt: f64) -> CMatrix {
    HermitianPiece::new(h, dt).propagator
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    pub final_unitary: CMatrix,
    pub step_unitaries: Option<Vec<CMatrix>>,
    /// Largest population outside the qubit subspace over all steps and the
    /// six cardinal initial states.
    pub max_leakage: f64,
    pub dt: f64,
    pub num_steps: usize,
}

/// Time-ordered product of the per-piece propagators.
pub fn propagate_unitary(
    model: &TransmonModel,
    signal: &Signal,
    error: ErrorSample,
) -> Result<PropagationResult> {
    propagate_inner(model, signal, error, false)
}

/// As [`propagate_unitary`], also keeping every per-piece propagator.
pub fn propagate_unitary_traced(
    model: &TransmonModel,
    signal: &Signal,
    error: ErrorSample,
) -> Result<PropagationResult> {
    propagate_inner(model, signal, error, true)
}

fn propagate_inner(
    model: &TransmonModel,
    signal: &Signal,
    error: ErrorSample,
    keep_steps: bool,
) -> Result<PropagationResult> {
    signal.validate()?;
    let n = model.num_levels();
    let ops = model.operators(error);
    let dt = signal.dt();
    let mut u = CMatrix::identity(n, n);
    let mut states = CMatrix::from_columns(&cardinal_states(n));
    let mut max_leakage: f64 = 0.0;
    let mut steps = keep_steps.then(|| Vec::with_capacity(signal.len()));
    for (&ex, &ey) in signal.ex().iter().zip(signal.ey()) {
        let step = piece_propagator(&ops.hamiltonian(ex, ey), dt);
        u = &step * &u;
        states = &step * &states;
        if n > 2 {
            for col in states.column_iter() {
                let leak: f64 = col.iter().skip(2).map(|z| z.norm_sqr()).sum();
                max_leakage = max_leakage.max(leak);
            }
        }
        if let Some(s) = steps.as_mut() {
            s.push(step);
        }
    }
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("propagator is not finite".into()));
    }
    Ok(PropagationResult {
        final_unitary: u,
        step_unitaries: steps,
        max_leakage: max_leakage.min(1.0),
        dt,
        num_steps: signal.len(),
    })
}
