//! BB1 composite sequences built from square segments.
//!
//! Segments run `θ₀, 180_{φ₁}, 360_{φ₂}, 180_{φ₁}` in time order. They are
//! placed directly on the signal grid without filtering.

use serde::{Deserialize, Serialize};

use crate::qmodel::TransmonModel;
use crate::signal::Signal;
use crate::{Error, Result};

/// Total drive modulus available to a square segment, `sqrt(E^x² + E^y²)`.
pub const BB1_MAX_DRIVE: f64 = 1.0;

/// `(φ₁, φ₂)` in degrees with `φ₁ = arccos(−θ/720°)` and `φ₂ = 3φ₁`.
pub fn bb1_phases(theta_deg: f64) -> (f64, f64) {
    let phi1 = (-theta_deg / 720.0).acos().to_degrees();
    (phi1, 3.0 * phi1)
}

/// Shortest sequence at full drive: `2π(180 + 360 + 180 + θ)/(360·λ₁)`.
pub fn bb1_min_duration(model: &TransmonModel, theta_deg: f64) -> f64 {
    std::f64::consts::TAU * (720.0 + theta_deg) / (360.0 * model.rabi_rates()[0] * BB1_MAX_DRIVE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bb1Sequence {
    pub theta_deg: f64,
    pub phi1_deg: f64,
    pub phi2_deg: f64,
    /// Drive modulus of each segment, in time order.
    pub segment_amplitudes: [f64; 4],
    /// Seconds, in time order.
    pub segment_durations: [f64; 4],
}

impl Bb1Sequence {
    /// Four segments sharing one amplitude that fills `total_duration`.
    pub fn new(model: &TransmonModel, theta_deg: f64, total_duration: f64) -> Result<Self> {
        if !(theta_deg > 0.0 && theta_deg <= 720.0) {
            return Err(Error::Config(format!("BB1 angle must be in (0, 720], got {theta_deg}")));
        }
        let t_min = bb1_min_duration(model, theta_deg);
        if !(total_duration >= t_min * (1.0 - 1e-12)) {
            return Err(Error::Config(format!(
                "BB1 needs at least {:.2} ns; {:.2} ns would require a control amplitude above the maximum available",
                t_min * 1e9,
                total_duration * 1e9
            )));
        }
        let (phi1_deg, phi2_deg) = bb1_phases(theta_deg);
        let total = 720.0 + theta_deg;
        let angles = [theta_deg, 180.0, 360.0, 180.0];
        let amp = (BB1_MAX_DRIVE * t_min / total_duration).min(BB1_MAX_DRIVE);
        Ok(Self {
            theta_deg,
            phi1_deg,
            phi2_deg,
            segment_amplitudes: [amp; 4],
            segment_durations: angles.map(|a| total_duration * a / total),
        })
    }

    pub fn rotation_angles_deg(&self) -> [f64; 4] {
        [self.theta_deg, 180.0, 360.0, 180.0]
    }

    pub fn phases_deg(&self) -> [f64; 4] {
        [0.0, self.phi1_deg, self.phi2_deg, self.phi1_deg]
    }

    pub fn total_duration(&self) -> f64 {
        self.segment_durations.iter().sum()
    }

    /// Samples the segments on a grid close to `dt`. Each segment gets a
    /// whole number of samples and its amplitude is adjusted so the
    /// rotation angle stays exact.
    pub fn to_signal(&self, model: &TransmonModel, dt: f64) -> Result<Signal> {
        if !(dt > 0.0) {
            return Err(Error::Config("sample spacing must be positive".into()));
        }
        let total = self.total_duration();
        let total_angle = 720.0 + self.theta_deg;
        let start = (total / dt).round().max(4.0) as usize;
        // prefer a grid on which every segment boundary is exact
        let aligned = (start..2 * start).find(|&n| {
            self.rotation_angles_deg()
                .iter()
                .all(|a| (a * n as f64 / total_angle).fract().min(1.0 - (a * n as f64 / total_angle).fract()) < 1e-9)
        });
        let n_total = aligned.unwrap_or(start);
        let dt = total / n_total as f64;
        let lambda = model.rabi_rates()[0];
        let mut ex = Vec::with_capacity(n_total);
        let mut ey = Vec::with_capacity(n_total);
        let mut boundary = 0.0;
        let mut used = 0;
        for (k, (angle, phase)) in self.rotation_angles_deg().into_iter().zip(self.phases_deg()).enumerate() {
            boundary += self.segment_durations[k];
            let end = if k == 3 { n_total } else { (boundary / dt).round() as usize };
            let count = end.saturating_sub(used).max(1);
            used += count;
            let amp = angle.to_radians() / (lambda * count as f64 * dt);
            if amp > BB1_MAX_DRIVE * (1.0 + 1e-9) {
                return Err(Error::Config(format!(
                    "BB1 segment {k} needs amplitude {amp:.4} on this grid; use a finer dt"
                )));
            }
            let (s, c) = phase.to_radians().sin_cos();
            ex.extend(std::iter::repeat_n(amp * c, count));
            ey.extend(std::iter::repeat_n(amp * s, count));
        }
        Signal::new(dt, ex, ey)
    }
}

/// BB1 for rotation `theta_deg` lasting `total_duration`, sampled near `dt`.
pub fn make_bb1(model: &TransmonModel, theta_deg: f64, total_duration: f64, dt: f64) -> Result<Signal> {
    Bb1Sequence::new(model, theta_deg, total_duration)?.to_signal(model, dt)
}
