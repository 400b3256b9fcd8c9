//! Closed-form fidelity of a constant X_{π/2} drive on a bare qubit.
//!
//! With `H = δσz + (α/2)σx`, `α = (1+ε)π/(2T)`, the propagator is
//! `cos(θt) − i sin(θt)(δσz + (α/2)σx)/θ` with `θ = sqrt(δ² + α²/4)`.

use std::f64::consts::PI;

/// `¼|tr(U(T)·X_{π/2}†)|²` for the constant drive above.
pub fn analytic_qubit_fidelity(gate_time: f64, amplitude_error: f64, detuning: f64) -> f64 {
    let a = 0.5 * (1.0 + amplitude_error) * PI / (2.0 * gate_time);
    let theta = detuning.hypot(a);
    let (s, c) = (theta * gate_time).sin_cos();
    // tr(U·X†)/2 = cos(π/4)cos(θT) + sin(π/4)(a/θ)sin(θT)
    let overlap = std::f64::consts::FRAC_1_SQRT_2 * (c + a / theta * s);
    overlap * overlap
}

/// Second-order amplitude-error expansion `1 − π²ε²/16`.
pub fn amplitude_expansion(amplitude_error: f64) -> f64 {
    1.0 - PI * PI * amplitude_error * amplitude_error / 16.0
}

/// Second-order detuning expansion `1 − 8T²δ²/π²`.
pub fn detuning_expansion(gate_time: f64, detuning: f64) -> f64 {
    1.0 - 8.0 * gate_time * gate_time * detuning * detuning / (PI * PI)
}

/// Detuning whose second-order loss equals that of `amplitude_error`:
/// `8T²δ²/π² = π²ε²/16`.
pub fn crossover_detuning(gate_time: f64, amplitude_error: f64) -> f64 {
    PI * PI * amplitude_error.abs() / (8.0 * 2f64.sqrt() * gate_time)
}

/// The model's detuning shift `s` (added to δ₁) that realizes the
/// closed-form `δ`: `s|1⟩⟨1| = (s/2)(I − σz)`, so `δ = −s/2`.
pub fn model_shift_for(detuning: f64) -> f64 {
    -2.0 * detuning
}
