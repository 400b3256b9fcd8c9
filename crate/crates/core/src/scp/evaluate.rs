//! Fidelity over error grids for finished pulses.

use serde::{Deserialize, Serialize};

use crate::qmodel::{fidelity_average_unitary, propagate_unitary, ErrorSample, TransmonModel};
use crate::signal::{ControlSet, Signal, TransferMatrix};
use crate::{CMatrix, Error, Result};

/// Average fidelity of `signal` for one error sample.
pub fn average_fidelity_signal(
    model: &TransmonModel,
    signal: &Signal,
    error: ErrorSample,
    target: &CMatrix,
) -> Result<f64> {
    let u = propagate_unitary(model, signal, error)?.final_unitary;
    fidelity_average_unitary(&u, target)
}

/// Average fidelity of `signal` at every sample.
pub fn evaluate_samples(
    model: &TransmonModel,
    signal: &Signal,
    samples: &[ErrorSample],
    target: &CMatrix,
) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|&e| average_fidelity_signal(model, signal, e, target))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEvaluation {
    pub etas: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub worst: f64,
}

impl GridEvaluation {
    /// Largest `|F(η) − F(−η)|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.fidelities.len();
        (0..n / 2)
            .map(|k| (self.fidelities[k] - self.fidelities[n - 1 - k]).abs())
            .fold(0.0, f64::max)
    }
}

/// Average fidelity on `n_grid` evenly spaced amplitude errors over
/// `[−η_max, η_max]`.
pub fn evaluate_worst_case(
    model: &TransmonModel,
    tm: &TransferMatrix,
    controls: &ControlSet,
    eta_max: f64,
    n_grid: usize,
    target: &CMatrix,
) -> Result<GridEvaluation> {
    if n_grid < 3 || n_grid % 2 == 0 {
        return Err(Error::Input(format!("grid size must be odd and at least 3, got {n_grid}")));
    }
    let signal = tm.apply(controls)?;
    evaluate_signal_worst_case(model, &signal, eta_max, n_grid, target)
}

/// As [`evaluate_worst_case`] for an already sampled signal.
pub fn evaluate_signal_worst_case(
    model: &TransmonModel,
    signal: &Signal,
    eta_max: f64,
    n_grid: usize,
    target: &CMatrix,
) -> Result<GridEvaluation> {
    if n_grid < 3 || n_grid % 2 == 0 {
        return Err(Error::Input(format!("grid size must be odd and at least 3, got {n_grid}")));
    }
    let half = (n_grid / 2) as f64;
    // Built symmetrically so the middle point is exactly zero.
    let etas: Vec<f64> = (0..n_grid)
        .map(|k| eta_max * (k as f64 - half) / half)
        .collect();
    let samples: Vec<ErrorSample> = etas.iter().map(|&e| ErrorSample::amplitude(e)).collect();
    let fidelities = evaluate_samples(model, signal, &samples, target)?;
    let worst = fidelities.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(GridEvaluation { etas, fidelities, worst })
}
