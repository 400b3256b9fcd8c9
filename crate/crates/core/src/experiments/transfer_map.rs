//! Amplitude transfer function of the drive chain and its inverse.
//!
//! The forward map (requested amplitude → realized Rabi rate) is a monotone
//! piecewise-cubic Hermite interpolant through measured knots. Pulses are
//! pre-distorted by inverting it on the drive magnitude while keeping the
//! drive phase.

use serde::{Deserialize, Serialize};

use crate::signal::Signal;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTransferMap {
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    slopes: Vec<f64>,
}

impl AmplitudeTransferMap {
    /// Knots are `(input, output)` pairs sorted by input; both coordinates
    /// must be strictly increasing.
    pub fn new(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Input("transfer map needs at least two knots".into()));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Input("transfer map knots must be finite".into()));
        }
        for (k, w) in knots.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
                return Err(Error::Input(format!(
                    "transfer map is not invertible: knots {k} and {} are not strictly increasing",
                    k + 1
                )));
            }
        }
        let inputs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let outputs: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let slopes = pchip_slopes(&inputs, &outputs);
        Ok(Self { inputs, outputs, slopes })
    }

    /// Maps `[0, x_max]` linearly onto itself.
    pub fn identity(x_max: f64) -> Result<Self> {
        Self::new(&[(0.0, 0.0), (x_max, x_max)])
    }

    pub fn input_range(&self) -> (f64, f64) {
        (self.inputs[0], *self.inputs.last().unwrap())
    }

    pub fn output_range(&self) -> (f64, f64) {
        (self.outputs[0], *self.outputs.last().unwrap())
    }

    /// Realized output for input `x` (clamped to the knot range).
    pub fn forward(&self, x: f64) -> f64 {
        let (lo, hi) = self.input_range();
        let x = x.clamp(lo, hi);
        let k = match self.inputs.partition_point(|&v| v <= x) {
            0 => 0,
            i => (i - 1).min(self.inputs.len() - 2),
        };
        let (x0, x1) = (self.inputs[k], self.inputs[k + 1]);
        let (y0, y1) = (self.outputs[k], self.outputs[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * self.slopes[k + 1]
    }

    /// Input that realizes output `y`, by bisection on the monotone forward
    /// map.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let (ylo, yhi) = self.output_range();
        let slack = 1e-12 * yhi.abs().max(ylo.abs()).max(1.0);
        if !(y >= ylo - slack && y <= yhi + slack) {
            return Err(Error::Input(format!(
                "requested amplitude {y} is outside the calibrated range [{ylo}, {yhi}]"
            )));
        }
        let (mut lo, mut hi) = self.input_range();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.forward(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `c = T⁻¹(|E|)·E/|E|`: the drive to program so the hardware realizes
    /// `signal`.
    pub fn predistort(&self, signal: &Signal) -> Result<Signal> {
        let mut ex = Vec::with_capacity(signal.len());
        let mut ey = Vec::with_capacity(signal.len());
        for (&x, &y) in signal.ex().iter().zip(signal.ey()) {
            let r = x.hypot(y);
            if r == 0.0 {
                ex.push(0.0);
                ey.push(0.0);
                continue;
            }
            let scale = self.inverse(r)? / r;
            ex.push(scale * x);
            ey.push(scale * y);
        }
        Signal::new(signal.dt(), ex, ey)
    }

    /// What the hardware plays for programmed `signal`.
    pub fn apply(&self, signal: &Signal) -> Result<Signal> {
        let mut ex = Vec::with_capacity(signal.len());
        let mut ey = Vec::with_capacity(signal.len());
        for (&x, &y) in signal.ex().iter().zip(signal.ey()) {
            let r = x.hypot(y);
            let scale = if r == 0.0 { 0.0 } else { self.forward(r) / r };
            ex.push(scale * x);
            ey.push(scale * y);
        }
        Signal::new(signal.dt(), ex, ey)
    }
}

/// Fritsch–Carlson slopes: harmonic mean of neighbouring secants in the
/// interior, one-sided three-point estimates at the ends, zero at extrema.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}
