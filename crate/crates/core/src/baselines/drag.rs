//! First-order DRAG pulses and their non-robust polishing.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::qmodel::{ErrorEnsemble, TransmonModel};
use crate::scp::{run_scp, ControlProblem, OptimizationRecord, ScpConfig};
use crate::signal::{ControlSet, Signal, TransferMatrix, MAX_AMPLITUDE};
use crate::{Error, Result};

/// Gaussian in-phase envelope with a derivative quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DragSpec {
    /// Seconds.
    pub duration: f64,
    /// Rotation angle at zero error, radians.
    pub angle: f64,
    /// Envelope standard deviation as a fraction of the duration.
    pub sigma_fraction: f64,
    /// `E^y = beta·dE^x/dt`, seconds. `None` uses [`drag_beta`].
    pub beta: Option<f64>,
    /// Extra factor on the quadrature (1 for DRAG, 0.5 for half-DRAG).
    pub quadrature_scale: f64,
    /// Extra factor on the in-phase amplitude after calibration.
    pub amplitude_scale: f64,
}

impl DragSpec {
    pub fn new(duration: f64, angle: f64) -> Self {
        Self {
            duration,
            angle,
            sigma_fraction: 1.0 / 6.0,
            beta: None,
            quadrature_scale: 1.0,
            amplitude_scale: 1.0,
        }
    }

    /// DRAG with the quadrature halved.
    pub fn half(duration: f64, angle: f64) -> Self {
        Self {
            quadrature_scale: 0.5,
            ..Self::new(duration, angle)
        }
    }
}

/// First-order DRAG coefficient `1/Δ` for this model's sign conventions
/// (σʸ_{j−1,j} = +i on the upper diagonal).
pub fn drag_beta(model: &TransmonModel) -> f64 {
    1.0 / model.anharmonicity()
}

/// Envelope `g(t)` (lifted so it vanishes at both ends) and its derivative.
fn envelope(spec: &DragSpec, t: f64) -> (f64, f64) {
    let sigma = spec.sigma_fraction * spec.duration;
    let mid = 0.5 * spec.duration;
    if !(0.0..=spec.duration).contains(&t) {
        return (0.0, 0.0);
    }
    let u = (t - mid) / sigma;
    let g = (-0.5 * u * u).exp();
    let edge = (-0.5 * (mid / sigma).powi(2)).exp();
    (g - edge, -u / sigma * g)
}

/// `(E^x, E^y)` of a DRAG pulse at time `t` (seconds from the pulse start).
/// Zero outside `[0, duration]`.
pub fn drag_value(model: &TransmonModel, spec: &DragSpec, t: f64) -> Result<(f64, f64)> {
    let amp = drag_amplitude(model, spec)?;
    let (g, dg) = envelope(spec, t);
    let beta = spec.beta.unwrap_or_else(|| drag_beta(model));
    Ok((amp * g, spec.quadrature_scale * beta * amp * dg))
}

/// In-phase peak so that `λ₁∫E^x dt` equals the angle (integrated with a
/// fine midpoint rule).
fn drag_amplitude(model: &TransmonModel, spec: &DragSpec) -> Result<f64> {
    if !(spec.duration > 0.0) || !(spec.sigma_fraction > 0.0) {
        return Err(Error::Config("DRAG duration and width must be positive".into()));
    }
    let n = 4096;
    let h = spec.duration / n as f64;
    let area: f64 = (0..n).map(|k| envelope(spec, (k as f64 + 0.5) * h).0).sum::<f64>() * h;
    Ok(spec.amplitude_scale * spec.angle / (model.rabi_rates()[0] * area))
}

/// Samples the pulse at the midpoints of `n` equal pieces.
pub fn make_drag_with(model: &TransmonModel, spec: &DragSpec, n: usize) -> Result<Signal> {
    if n == 0 {
        return Err(Error::Config("a pulse needs at least one sample".into()));
    }
    let dt = spec.duration / n as f64;
    let mut ex = Vec::with_capacity(n);
    let mut ey = Vec::with_capacity(n);
    for k in 0..n {
        let (x, y) = drag_value(model, spec, (k as f64 + 0.5) * dt)?;
        ex.push(x);
        ey.push(y);
    }
    let sig = Signal::new(dt, ex, ey)?;
    if sig.peak_channel() > MAX_AMPLITUDE {
        return Err(Error::Config(format!(
            "DRAG pulse of {:.1} ns exceeds the amplitude limit (peak {:.3})",
            spec.duration * 1e9,
            sig.peak_channel()
        )));
    }
    Ok(sig)
}

/// DRAG with the default shape, sampled every `dt` (rounded to fit).
pub fn make_drag(model: &TransmonModel, duration: f64, angle: f64, dt: f64) -> Result<Signal> {
    let n = (duration / dt).round().max(1.0) as usize;
    make_drag_with(model, &DragSpec::new(duration, angle), n)
}

const RIDGE: f64 = 1e-4;

/// Least-squares control variables whose filtered signal best matches the
/// pulse, then made feasible. The pulse starts at the first unpadded
/// control variable.
pub fn project_to_controls(
    model: &TransmonModel,
    spec: &DragSpec,
    tm: &TransferMatrix,
) -> Result<ControlSet> {
    let rows = tm.num_samples();
    let offset = tm.pad_count as f64 * tm.control_width();
    let mut tx = DVector::zeros(rows);
    let mut ty = DVector::zeros(rows);
    for s in 0..rows {
        let t = (s as f64 + 0.5) * tm.dt_signal - offset;
        let (x, y) = drag_value(model, spec, t)?;
        tx[s] = x;
        ty[s] = y;
    }
    // The filter is strongly smoothing, so plain least squares oscillates.
    // A small ridge keeps the fit close to the pulse and the controls tame.
    let a = tm.inner();
    let mut normal = a.tr_mul(a);
    let ridge = RIDGE * normal.diagonal().max();
    for k in 0..normal.nrows() {
        normal[(k, k)] += ridge;
    }
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::Numerical("projection normal equations are singular".into()))?;
    let solve = |b: &DVector<f64>| -> Result<Vec<f64>> { Ok(chol.solve(&a.tr_mul(b)).data.into()) };
    let mut c = ControlSet::new(solve(&tx)?, solve(&ty)?)?;
    c.project_slew();
    Ok(c)
}

/// Non-robust SCP from the projected DRAG pulse, sampled only at zero error.
pub fn polish_nonrobust(
    model: &TransmonModel,
    tm: &TransferMatrix,
    spec: &DragSpec,
    config: &ScpConfig,
) -> Result<OptimizationRecord> {
    let start = project_to_controls(model, spec, tm)?;
    let problem = ControlProblem::new(model.clone(), tm.clone(), ErrorEnsemble::nominal());
    run_scp(&problem, config, &start)
}

/// Sum of `E^x² + E^y²` over the samples times `dt`.
pub fn signal_energy(signal: &Signal) -> f64 {
    signal
        .ex()
        .iter()
        .zip(signal.ey())
        .map(|(x, y)| x * x + y * y)
        .sum::<f64>()
        * signal.dt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodel::{propagate_unitary, x_half_pi_target, ErrorSample};
    use crate::scp::average_fidelity_signal;
    use crate::units::ns;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quadrature_is_the_scaled_derivative() {
        let m = TransmonModel::reference();
        let spec = DragSpec::new(ns(72.0), FRAC_PI_2);
        let beta = drag_beta(&m);
        let h = 1e-13;
        for k in 1..20 {
            let t = ns(72.0) * k as f64 / 20.0;
            let (_, y) = drag_value(&m, &spec, t).unwrap();
            let fd = (drag_value(&m, &spec, t + h).unwrap().0 - drag_value(&m, &spec, t - h).unwrap().0) / (2.0 * h);
            assert!((y - beta * fd).abs() < 1e-6 * beta.abs() * fd.abs().max(1e6), "{t}");
        }
    }

    #[test]
    fn edges_vanish_and_area_is_calibrated() {
        let m = TransmonModel::reference();
        let sig = make_drag(&m, ns(72.0), FRAC_PI_2, ns(0.1)).unwrap();
        let peak = sig.ex().iter().cloned().fold(0.0, f64::max);
        assert!(sig.ex()[0] <= 1e-3 * peak);
        assert!(sig.ex()[sig.len() - 1] <= 1e-3 * peak);
        let area: f64 = sig.ex().iter().sum::<f64>() * sig.dt() * m.rabi_rates()[0];
        assert!((area - FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn raw_drag_is_accurate() {
        let m = TransmonModel::reference();
        let sig = make_drag(&m, ns(72.0), FRAC_PI_2, ns(0.25)).unwrap();
        let f = average_fidelity_signal(&m, &sig, ErrorSample::ZERO, &x_half_pi_target(3)).unwrap();
        assert!(f >= 0.9999, "{f}");
    }

    #[test]
    fn derivative_quadrature_reduces_leakage() {
        let m = TransmonModel::reference();
        let leak = |beta: f64| {
            let spec = DragSpec { beta: Some(beta), ..DragSpec::new(ns(60.0), FRAC_PI_2) };
            let sig = make_drag_with(&m, &spec, 240).unwrap();
            let r = propagate_unitary(&m, &sig, ErrorSample::ZERO).unwrap();
            let u = &r.final_unitary;
            (r.max_leakage, u[(2, 0)].norm_sqr().max(u[(2, 1)].norm_sqr()))
        };
        let b = drag_beta(&m);
        let (max_b, end_b) = leak(b);
        for other in [0.0, -b] {
            let (max_o, end_o) = leak(other);
            assert!(max_o > max_b);
            assert!(end_o > 100.0 * end_b, "{end_o} {end_b}");
        }
    }

    /// R² of `I(η) − I(0) ≈ A·η²` over η ∈ [−0.1, 0.1].
    fn quadratic_fit_r2(m: &TransmonModel, sig: &Signal) -> f64 {
        let etas: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.01).collect();
        let infid = |e: f64| 1.0 - average_fidelity_signal(m, sig, ErrorSample::amplitude(e), &x_half_pi_target(3)).unwrap();
        let base = infid(0.0);
        let inf: Vec<f64> = etas.iter().map(|&e| infid(e) - base).collect();
        let a = etas.iter().zip(&inf).map(|(e, i)| e * e * i).sum::<f64>() / etas.iter().map(|e| e.powi(4)).sum::<f64>();
        let mean = inf.iter().sum::<f64>() / inf.len() as f64;
        let res: f64 = etas.iter().zip(&inf).map(|(e, i)| (i - a * e * e).powi(2)).sum();
        let tot: f64 = inf.iter().map(|i| (i - mean).powi(2)).sum();
        1.0 - res / tot
    }

    #[test]
    fn polishing_reaches_unit_fidelity_and_keeps_shape() {
        use crate::signal::build_transfer_matrix;
        use crate::units::mhz_to_rad;
        let m = TransmonModel::reference();
        let tm = build_transfer_matrix(25, ns(72.0), mhz_to_rad(24.0), 4).unwrap();
        let spec = DragSpec::new(ns(72.0), FRAC_PI_2);
        let start = project_to_controls(&m, &spec, &tm).unwrap();
        let r = polish_nonrobust(&m, &tm, &spec, &ScpConfig::default()).unwrap();
        assert!(r.worst_case_fidelity >= 1.0 - 1e-8, "{}", r.worst_case_fidelity);
        let e0 = signal_energy(&tm.apply(&start).unwrap());
        let e1 = signal_energy(&tm.apply(&r.final_controls).unwrap());
        assert!((e1 / e0 - 1.0).abs() <= 0.2);
        let sig = tm.apply(&r.final_controls).unwrap();
        assert!(quadratic_fit_r2(&m, &sig) >= 0.999);
    }

    #[test]
    fn infidelity_grows_quadratically_and_evenly() {
        let m = TransmonModel::reference();
        let sig = make_drag(&m, ns(72.0), FRAC_PI_2, ns(0.25)).unwrap();
        let r2 = quadratic_fit_r2(&m, &sig);
        assert!(r2 >= 0.999, "{r2}");
        for e in [0.01, 0.03, 0.05] {
            let i = |x: f64| 1.0 - average_fidelity_signal(&m, &sig, ErrorSample::amplitude(x), &x_half_pi_target(3)).unwrap();
            assert!((i(e) - i(-e)).abs() <= 0.1 * i(e));
        }
    }

    #[test]
    fn too_short_is_a_config_error() {
        let m = TransmonModel::reference();
        assert!(matches!(make_drag(&m, ns(5.0), FRAC_PI_2, ns(0.1)), Err(Error::Config(_))));
    }
}
