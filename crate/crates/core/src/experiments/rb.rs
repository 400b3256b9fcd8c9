//! Simulated randomized benchmarking and amplified-phase-error sequences.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::clifford::{CliffordDecomposition, Gate};
use crate::qmodel::{lindblad_superoperator, propagate_unitary, ErrorSample, LindbladConfig, TransmonModel};
use crate::signal::Signal;
use crate::{CMatrix, Error, Result, C64};

/// Systematic errors injected into the simulated hardware.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInjection {
    /// Pulse amplitude multiplier `d`.
    pub global_scale: f64,
    /// Quadrature multiplier `a` in `E^x + i·a·E^y`.
    pub channel_imbalance: f64,
    /// Phase error ε per gate, applied as `Z(ε)·X_{π/2}·Z(ε)`.
    pub phase_error: f64,
}

impl Default for ErrorInjection {
    fn default() -> Self {
        Self {
            global_scale: 1.0,
            channel_imbalance: 1.0,
            phase_error: 0.0,
        }
    }
}

impl ErrorInjection {
    pub fn scale(d: f64) -> Self {
        Self { global_scale: d, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.global_scale > 0.0 && self.channel_imbalance > 0.0 && self.phase_error.is_finite()) {
            return Err(Error::Input(format!("invalid error injection {self:?}")));
        }
        Ok(())
    }

    /// The pulse as the hardware would play it.
    pub fn distort(&self, signal: &Signal) -> Signal {
        signal.scaled(self.global_scale).with_imbalance(self.channel_imbalance)
    }
}

/// `exp(iθn̂)`: a virtual Z by θ on every level, equal to advancing the drive
/// phase of all later pulses by θ.
pub fn virtual_z(n: usize, theta: f64) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_fn(n, |k, _| C64::from_polar(1.0, theta * k as f64)))
}

/// `vec(UρU†) = (Ū ⊗ U) vec(ρ)` in column-stacking order.
pub fn unitary_superoperator(u: &CMatrix) -> CMatrix {
    u.conjugate().kronecker(u)
}

/// The simulated physical `X_{π/2}` as a superoperator on `n` levels.
#[derive(Clone, Debug)]
pub struct GateSet {
    pub levels: usize,
    pub x90: CMatrix,
}

impl GateSet {
    /// Perfect gates on `n` levels.
    pub fn ideal(n: usize) -> Self {
        Self::from_unitary(&crate::qmodel::x_half_pi_target(n))
    }

    pub fn from_unitary(u: &CMatrix) -> Self {
        Self {
            levels: u.nrows(),
            x90: unitary_superoperator(u),
        }
    }

    /// Plays `pulse` with the injected errors. Without `lindblad` the
    /// evolution is unitary.
    pub fn from_pulse(
        model: &TransmonModel,
        pulse: &Signal,
        injection: &ErrorInjection,
        lindblad: Option<&LindbladConfig>,
    ) -> Result<Self> {
        injection.validate()?;
        let played = injection.distort(pulse);
        let n = model.num_levels();
        let core = match lindblad {
            Some(l) => lindblad_superoperator(model, &played, ErrorSample::ZERO, l)?,
            None => unitary_superoperator(&propagate_unitary(model, &played, ErrorSample::ZERO)?.final_unitary),
        };
        let z = unitary_superoperator(&virtual_z(n, injection.phase_error));
        Ok(Self { levels: n, x90: &z * core * &z })
    }

    fn z_super(&self, theta: f64) -> CMatrix {
        unitary_superoperator(&virtual_z(self.levels, theta))
    }

    fn gate_super(&self, g: Gate) -> Option<CMatrix> {
        match g {
            Gate::X90 => Some(self.x90.clone()),
            Gate::Z(a) => Some(self.z_super(a.radians())),
            Gate::Idle => None,
        }
    }

    /// Superoperator of every Clifford, in table order.
    pub fn clifford_superoperators(&self, table: &CliffordDecomposition) -> Vec<CMatrix> {
        let d = self.levels * self.levels;
        table
            .elements
            .iter()
            .map(|e| {
                e.word
                    .iter()
                    .filter_map(|&g| self.gate_super(g))
                    .fold(CMatrix::identity(d, d), |acc, s| s * acc)
            })
            .collect()
    }
}

fn ground_state(n: usize) -> DVector<C64> {
    let mut rho = CMatrix::zeros(n, n);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    DVector::from_column_slice(rho.as_slice())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub sequences_per_length: usize,
    pub shots: u64,
    pub seed: u64,
}

impl Default for RbConfig {
    fn default() -> Self {
        Self {
            // Powers of two up to 16384 cover decays with EPG from ~1e-6 to ~1e-2.
            lengths: (0..15).map(|k| 1 << k).collect(),
            sequences_per_length: 6,
            shots: 1024,
            seed: 0,
        }
    }
}

/// `A·p^L + B` fitted to the mean survival.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
}

impl DecayFit {
    /// `(1 − p)/2`.
    pub fn epg(&self) -> f64 {
        (1.0 - self.p) / 2.0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RbResult {
    pub lengths: Vec<usize>,
    /// Measured survival per length and sequence.
    pub survival: Vec<Vec<f64>>,
    /// Exact survival probabilities before shot sampling.
    pub exact_survival: Vec<Vec<f64>>,
    pub fit: DecayFit,
    pub epg: f64,
}

impl RbResult {
    pub fn mean_survival(&self) -> Vec<f64> {
        self.survival.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect()
    }
}

/// Random Clifford strings closed by their inverse, run on `gates`, read out
/// with binomial shot noise, and fitted.
pub fn simulate_rb(gates: &GateSet, table: &CliffordDecomposition, config: &RbConfig) -> Result<RbResult> {
    if config.lengths.len() < 3 || config.sequences_per_length == 0 || config.shots == 0 {
        return Err(Error::Config("RB needs at least three lengths, one sequence and one shot".into()));
    }
    let supers = gates.clifford_superoperators(table);
    let rho0 = ground_state(gates.levels);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut survival = Vec::with_capacity(config.lengths.len());
    let mut exact_survival = Vec::with_capacity(config.lengths.len());
    for &len in &config.lengths {
        let mut measured = Vec::with_capacity(config.sequences_per_length);
        let mut exact = Vec::with_capacity(config.sequences_per_length);
        for _ in 0..config.sequences_per_length {
            let mut seq: Vec<usize> = (0..len).map(|_| rng.random_range(0..table.len())).collect();
            let inv = table
                .inverse_of_sequence(&seq)
                .ok_or_else(|| Error::Numerical("Clifford table is not closed under inversion".into()))?;
            seq.push(inv);
            let mut v = rho0.clone();
            for &i in &seq {
                v = &supers[i] * v;
            }
            let p0 = v[0].re.clamp(0.0, 1.0);
            let counts = Binomial::new(config.shots, p0)
                .map_err(|e| Error::Numerical(e.to_string()))?
                .sample(&mut rng);
            exact.push(p0);
            measured.push(counts as f64 / config.shots as f64);
        }
        survival.push(measured);
        exact_survival.push(exact);
    }
    let means: Vec<f64> = survival.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
    let fit = fit_decay(&config.lengths, &means, config.shots as f64 * config.sequences_per_length as f64)?;
    Ok(RbResult {
        lengths: config.lengths.clone(),
        survival,
        exact_survival,
        epg: fit.epg(),
        fit,
    })
}

/// Weighted least squares for `A·p^L + B`. For fixed `p` the problem is
/// linear in `A, B`; `p` is found by golden-section search on the residual.
/// Weights are binomial inverse variances with `shots` samples per point.
pub fn fit_decay(lengths: &[usize], survival: &[f64], shots: f64) -> Result<DecayFit> {
    if lengths.len() != survival.len() || lengths.len() < 3 {
        return Err(Error::Input("decay fit needs at least three matched points".into()));
    }
    let w: Vec<f64> = survival
        .iter()
        .map(|&s| shots / (s * (1.0 - s)).max(1.0 / shots))
        .collect();
    let solve_ab = |p: f64| -> (f64, f64, f64) {
        let (mut sxx, mut sx, mut s1, mut sxy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&l, &y), &wi) in lengths.iter().zip(survival).zip(&w) {
            let x = p.powi(l as i32);
            sxx += wi * x * x;
            sx += wi * x;
            s1 += wi;
            sxy += wi * x * y;
            sy += wi * y;
        }
        let det = sxx * s1 - sx * sx;
        let (a, b) = if det.abs() > 1e-300 {
            ((sxy * s1 - sx * sy) / det, (sxx * sy - sx * sxy) / det)
        } else {
            (0.0, sy / s1)
        };
        let res = lengths
            .iter()
            .zip(survival)
            .zip(&w)
            .map(|((&l, &y), &wi)| wi * (y - a * p.powi(l as i32) - b).powi(2))
            .sum();
        (a, b, res)
    };
    // log-spaced scan over 1 − p, then golden-section refinement
    let cost = |p: f64| solve_ab(p).2;
    let mut best = (1.0, cost(1.0));
    for k in 0..=240 {
        let p = 1.0 - 10f64.powf(-(k as f64) / 20.0);
        let c = cost(p);
        if c < best.1 {
            best = (p, c);
        }
    }
    let (mut lo, mut hi) = ((1.0 - (1.0 - best.0) * 1.2).max(0.0), (1.0 - (1.0 - best.0) / 1.2).min(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if cost(m1) < cost(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let p_ref = 0.5 * (lo + hi);
    let p = if cost(p_ref) <= best.1 { p_ref } else { best.0 };
    let (a, b, _) = solve_ab(p);
    Ok(DecayFit { a, p, b })
}

/// Ground-state population after `X(X·X†)^N X` with each gate corrected by
/// a virtual `Z(c)` on both sides, for every correction `c`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApeResult {
    pub repetitions: Vec<usize>,
    pub corrections: Vec<f64>,
    /// `populations[i][j]`: repetition count `i`, correction `j`.
    pub populations: Vec<Vec<f64>>,
    /// Minimizer of the summed curves.
    pub best_correction: f64,
}

pub fn simulate_ape(gates: &GateSet, repetitions: &[usize], corrections: &[f64]) -> Result<ApeResult> {
    if corrections.is_empty() || repetitions.is_empty() {
        return Err(Error::Config("APE needs repetition counts and corrections".into()));
    }
    let n = gates.levels;
    let rho0 = ground_state(n);
    // X† is the same pulse played with a π phase shift: Z(π)† X Z(π).
    let flip = unitary_superoperator(&virtual_z(n, std::f64::consts::PI));
    let x_dag = flip.adjoint() * &gates.x90 * &flip;
    let mut populations = vec![vec![0.0; corrections.len()]; repetitions.len()];
    for (j, &c) in corrections.iter().enumerate() {
        let z = unitary_superoperator(&virtual_z(n, c));
        let xc = &z * &gates.x90 * &z;
        let xdc = &z * &x_dag * &z;
        let pair = &xdc * &xc;
        for (i, &reps) in repetitions.iter().enumerate() {
            let mut v = &xc * &rho0;
            for _ in 0..reps {
                v = &pair * v;
            }
            v = &xc * v;
            populations[i][j] = v[0].re;
        }
    }
    let summed: Vec<f64> = (0..corrections.len())
        .map(|j| populations.iter().map(|row| row[j]).sum())
        .collect();
    let best = summed
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| corrections[j])
        .unwrap_or(0.0);
    Ok(ApeResult {
        repetitions: repetitions.to_vec(),
        corrections: corrections.to_vec(),
        populations,
        best_correction: best,
    })
}
