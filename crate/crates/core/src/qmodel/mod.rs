//! Rotating-frame transmon model, propagation and fidelities.

mod fidelity;
mod lindblad;
mod propagate;

pub use fidelity::{
    cardinal_states, fidelity_average, fidelity_average_unitary, fidelity_f1, fidelity_f2,
    qubit_average_fidelity, x_half_pi_target,
};
pub use lindblad::{
    apply_superoperator, average_fidelity_open, lindblad_superoperator, liouvillian,
    pole_density_matrices, propagate_lindblad, LindbladConfig, LindbladTrajectory,
};
pub use propagate::{
    piece_propagator, propagate_unitary, propagate_unitary_traced, HermitianPiece,
    PropagationResult,
};

use serde::{Deserialize, Serialize};

use crate::units::mhz_to_rad;
use crate::{CMatrix, Error, Result, C64};

/// Physical parameters of an N-level driven transmon.
///
/// Level `j` sits at `j·δ₁ + Δ·j(j−1)/2` in the frame rotating at the drive
/// frequency, which reduces to `δ₂ = Δ + 2δ₁` for the second excited level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonModel {
    num_levels: usize,
    /// 0–1 transition, rad/s.
    omega01: f64,
    /// Drive carrier, rad/s.
    drive_freq: f64,
    /// Signed anharmonicity Δ, rad/s.
    anharmonicity: f64,
    /// Maximum Rabi rate of each adjacent transition, rad/s.
    rabi_rates: Vec<f64>,
}

impl TransmonModel {
    pub fn new(
        num_levels: usize,
        omega01: f64,
        drive_freq: f64,
        anharmonicity: f64,
        rabi_rates: Vec<f64>,
    ) -> Result<Self> {
        if num_levels < 2 {
            return Err(Error::Model(format!(
                "need at least two levels, got {num_levels}"
            )));
        }
        if rabi_rates.len() != num_levels - 1 {
            return Err(Error::Model(format!(
                "{} levels need {} Rabi rates, got {}",
                num_levels,
                num_levels - 1,
                rabi_rates.len()
            )));
        }
        if rabi_rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Model("Rabi rates must be finite and positive".into()));
        }
        if ![omega01, drive_freq, anharmonicity].iter().all(|v| v.is_finite()) {
            return Err(Error::Model("frequencies must be finite".into()));
        }
        Ok(Self {
            num_levels,
            omega01,
            drive_freq,
            anharmonicity,
            rabi_rates,
        })
    }

    /// Three-level device with the reference parameters, driven on resonance.
    ///
    /// ω₀₁/2π = 4.974 GHz, Δ/2π = 345 MHz, λ₁/2π = λ₂/2π = 15 MHz.
    pub fn reference() -> Self {
        let omega01 = mhz_to_rad(4974.0);
        Self::new(
            3,
            omega01,
            omega01,
            mhz_to_rad(345.0),
            vec![mhz_to_rad(15.0), mhz_to_rad(15.0)],
        )
        .expect("reference parameters are valid")
    }

    /// Two-level truncation of `self` (drops every level above the qubit).
    pub fn qubit_only(&self) -> Self {
        Self {
            num_levels: 2,
            rabi_rates: vec![self.rabi_rates[0]],
            ..self.clone()
        }
    }

    pub fn with_anharmonicity(mut self, anharmonicity: f64) -> Self {
        self.anharmonicity = anharmonicity;
        self
    }

    pub fn with_drive_freq(mut self, drive_freq: f64) -> Self {
        self.drive_freq = drive_freq;
        self
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn omega01(&self) -> f64 {
        self.omega01
    }

    pub fn drive_freq(&self) -> f64 {
        self.drive_freq
    }

    pub fn anharmonicity(&self) -> f64 {
        self.anharmonicity
    }

    pub fn rabi_rates(&self) -> &[f64] {
        &self.rabi_rates
    }

    /// δ₁ = ω₁ − ω_d.
    pub fn qubit_detuning(&self) -> f64 {
        self.omega01 - self.drive_freq
    }

    /// Level energies `δ_j` for `j = 1..N−1` with δ₁ shifted by `shift`.
    pub fn detunings(&self, shift: f64) -> Vec<f64> {
        let d1 = self.qubit_detuning() + shift;
        (1..self.num_levels)
            .map(|j| {
                let j = j as f64;
                j * d1 + self.anharmonicity * j * (j - 1.0) / 2.0
            })
            .collect()
    }

    /// Drift and the two control operators for one error sample, so that
    /// `H = drift + ex·hx + ey·hy`.
    pub fn operators(&self, error: ErrorSample) -> ControlOperators {
        let n = self.num_levels;
        let mut drift = CMatrix::zeros(n, n);
        for (j, d) in self.detunings(error.detuning).into_iter().enumerate() {
            drift[(j + 1, j + 1)] = C64::new(d, 0.0);
        }
        let scale = 1.0 + error.amplitude;
        let mut hx = CMatrix::zeros(n, n);
        let mut hy = CMatrix::zeros(n, n);
        for (j, &lambda) in self.rabi_rates.iter().enumerate() {
            let half = 0.5 * scale * lambda;
            hx[(j, j + 1)] = C64::new(half, 0.0);
            hx[(j + 1, j)] = C64::new(half, 0.0);
            // σʸ_{j−1,j} = i(|j−1⟩⟨j| − |j⟩⟨j−1|)
            hy[(j, j + 1)] = C64::new(0.0, half);
            hy[(j + 1, j)] = C64::new(0.0, -half);
        }
        ControlOperators { drift, hx, hy }
    }
}

/// One systematic error: amplitude factor η (drive scaled by 1+η) and a
/// detuning shift added to δ₁ (rad/s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub amplitude: f64,
    pub detuning: f64,
}

impl ErrorSample {
    pub const ZERO: ErrorSample = ErrorSample {
        amplitude: 0.0,
        detuning: 0.0,
    };

    pub fn amplitude(eta: f64) -> Self {
        Self {
            amplitude: eta,
            detuning: 0.0,
        }
    }

    pub fn detuning(shift: f64) -> Self {
        Self {
            amplitude: 0.0,
            detuning: shift,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0 && self.detuning == 0.0
    }
}

/// The Hamiltonian samples optimized simultaneously.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnsemble {
    samples: Vec<ErrorSample>,
}

impl ErrorEnsemble {
    /// Validates samples; the zero-error sample is required unless
    /// `allow_missing_zero` is set.
    pub fn new(samples: Vec<ErrorSample>, allow_missing_zero: bool) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("error ensemble is empty".into()));
        }
        for s in &samples {
            if !(s.amplitude.is_finite() && s.detuning.is_finite()) {
                return Err(Error::Input("non-finite error sample".into()));
            }
            if 1.0 + s.amplitude <= 0.0 {
                return Err(Error::Input(format!(
                    "amplitude factor 1+η must be positive, got η = {}",
                    s.amplitude
                )));
            }
        }
        if !allow_missing_zero && !samples.iter().any(ErrorSample::is_zero) {
            return Err(Error::Input(
                "the zero-error sample must be part of the ensemble".into(),
            ));
        }
        Ok(Self { samples })
    }

    /// Only the error-free Hamiltonian.
    pub fn nominal() -> Self {
        Self {
            samples: vec![ErrorSample::ZERO],
        }
    }

    /// `{−η, 0, +η}` on the amplitude axis.
    pub fn amplitude_triple(eta: f64) -> Result<Self> {
        Self::from_axes(&[eta], &[], true, false)
    }

    /// `{−δ, 0, +δ}` on the detuning axis.
    pub fn detuning_triple(shift: f64) -> Result<Self> {
        Self::from_axes(&[], &[shift], true, false)
    }

    /// Zero plus the four corners `(±η, ±δ)`.
    pub fn doubly_robust(eta: f64, shift: f64) -> Result<Self> {
        let mut samples = vec![ErrorSample::ZERO];
        for a in [-eta, eta] {
            for d in [-shift, shift] {
                samples.push(ErrorSample {
                    amplitude: a,
                    detuning: d,
                });
            }
        }
        Self::new(samples, false)
    }

    /// Samples `±value` for every entry of each axis. With `cartesian` the
    /// two axes are crossed (corners only), otherwise they are listed
    /// separately. The zero sample is prepended when `include_zero`.
    pub fn from_axes(
        amplitudes: &[f64],
        detunings: &[f64],
        include_zero: bool,
        cartesian: bool,
    ) -> Result<Self> {
        let mut samples = Vec::new();
        if include_zero {
            samples.push(ErrorSample::ZERO);
        }
        let sym = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .filter(|x| **x != 0.0)
                .flat_map(|x| [-x.abs(), x.abs()])
                .collect()
        };
        let amps = sym(amplitudes);
        let dets = sym(detunings);
        if cartesian && !amps.is_empty() && !dets.is_empty() {
            for &a in &amps {
                for &d in &dets {
                    samples.push(ErrorSample {
                        amplitude: a,
                        detuning: d,
                    });
                }
            }
        } else {
            samples.extend(amps.iter().map(|&a| ErrorSample::amplitude(a)));
            samples.extend(dets.iter().map(|&d| ErrorSample::detuning(d)));
        }
        Self::new(samples, !include_zero)
    }

    pub fn samples(&self) -> &[ErrorSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `H = drift + ex·hx + ey·hy` for one error sample.
#[derive(Clone, Debug)]
pub struct ControlOperators {
    pub drift: CMatrix,
    pub hx: CMatrix,
    pub hy: CMatrix,
}

impl ControlOperators {
    pub fn hamiltonian(&self, ex: f64, ey: f64) -> CMatrix {
        let mut h = self.drift.clone();
        h.zip_zip_apply(&self.hx, &self.hy, |hij, x, y| {
            *hij += x * ex + y * ey;
        });
        h
    }
}

/// `H = Σⱼ δⱼ′Πⱼ + ((1+η)ex/2)λⱼσˣ_{j−1,j} + ((1+η)ey/2)λⱼσʸ_{j−1,j}`.
pub fn assemble_hamiltonian(
    model: &TransmonModel,
    ex: f64,
    ey: f64,
    error: ErrorSample,
) -> Result<CMatrix> {
    if !(ex.is_finite() && ey.is_finite()) {
        return Err(Error::Input("control amplitudes must be finite".into()));
    }
    Ok(model.operators(error).hamiltonian(ex, ey))
}
