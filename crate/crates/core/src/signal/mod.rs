//! Control variables, the Gaussian transfer matrix, and sampled drive signals.

mod controls;
mod filter;
mod pulse_file;

pub use controls::{check_feasible, Channel, ControlSet, FeasibilityReport, Violation, MAX_AMPLITUDE};
pub use filter::{
    build_transfer_matrix, build_transfer_matrix_with, DurationConvention, FilterSpec,
    PaddingRule, TransferMatrix,
};
pub use pulse_file::{read_pulse_csv, write_pulse_csv};

use crate::{Error, Result};

/// A two-quadrature drive sampled on a uniform grid, held constant over each
/// sample of width `dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    dt: f64,
    ex: Vec<f64>,
    ey: Vec<f64>,
}

impl Signal {
    /// Checks the grid; sample values are checked by [`Signal::validate`].
    pub fn new(dt: f64, ex: Vec<f64>, ey: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Input(format!("sample width must be positive, got {dt}")));
        }
        if ex.len() != ey.len() {
            return Err(Error::Input(format!(
                "channel lengths differ: {} vs {}",
                ex.len(),
                ey.len()
            )));
        }
        if ex.is_empty() {
            return Err(Error::Input("signal has no samples".into()));
        }
        Ok(Self { dt, ex, ey })
    }

    pub fn zeros(dt: f64, len: usize) -> Result<Self> {
        Self::new(dt, vec![0.0; len], vec![0.0; len])
    }

    /// Fails on NaN or infinite samples.
    pub fn validate(&self) -> Result<()> {
        let bad = self
            .ex
            .iter()
            .chain(&self.ey)
            .position(|v| !v.is_finite());
        match bad {
            Some(k) => Err(Error::Numerical(format!(
                "non-finite signal value at sample {}",
                k % self.ex.len()
            ))),
            None => Ok(()),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.ex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ex.is_empty()
    }

    pub fn ex(&self) -> &[f64] {
        &self.ex
    }

    pub fn ey(&self) -> &[f64] {
        &self.ey
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.len() as f64
    }

    /// Both channels multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|x, y| (factor * x, factor * y))
    }

    /// The y channel multiplied by `ratio` relative to x.
    pub fn with_imbalance(&self, ratio: f64) -> Self {
        self.map(|x, y| (x, ratio * y))
    }

    /// `ex + i·ey` rotated by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        self.map(|x, y| (c * x - s * y, s * x + c * y))
    }

    /// Zero samples appended on both sides.
    pub fn padded(&self, before: usize, after: usize) -> Self {
        let pad = |v: &[f64]| {
            let mut out = vec![0.0; before];
            out.extend_from_slice(v);
            out.resize(before + v.len() + after, 0.0);
            out
        };
        Self {
            dt: self.dt,
            ex: pad(&self.ex),
            ey: pad(&self.ey),
        }
    }

    /// The samples of `self` followed by those of `other` (same `dt`).
    pub fn concat(&self, other: &Signal) -> Result<Self> {
        if (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Input("cannot join signals with different sample widths".into()));
        }
        let mut ex = self.ex.clone();
        let mut ey = self.ey.clone();
        ex.extend_from_slice(&other.ex);
        ey.extend_from_slice(&other.ey);
        Self::new(self.dt, ex, ey)
    }

    /// Largest `sqrt(ex² + ey²)` over the pulse.
    pub fn peak_amplitude(&self) -> f64 {
        self.ex
            .iter()
            .zip(&self.ey)
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max)
    }

    /// Largest single-channel magnitude.
    pub fn peak_channel(&self) -> f64 {
        self.ex
            .iter()
            .chain(&self.ey)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    fn map(&self, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (ex, ey) = self.ex.iter().zip(&self.ey).map(|(&x, &y)| f(x, y)).unzip();
        Self { dt: self.dt, ex, ey }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(Signal::new(0.0, vec![0.0], vec![0.0]).is_err());
        assert!(Signal::new(1e-9, vec![0.0; 2], vec![0.0]).is_err());
        assert!(Signal::new(1e-9, vec![], vec![]).is_err());
        let s = Signal::new(1e-9, vec![0.0, f64::INFINITY], vec![0.0; 2]).unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn rotation_by_quarter_turn_swaps_channels() {
        let s = Signal::new(1e-9, vec![0.3, -0.1], vec![0.0, 0.2]).unwrap();
        let r = s.rotated(std::f64::consts::FRAC_PI_2);
        for k in 0..2 {
            assert!((r.ex()[k] + s.ey()[k]).abs() < 1e-15);
            assert!((r.ey()[k] - s.ex()[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn padding_and_concat() {
        let s = Signal::new(2e-9, vec![1.0], vec![0.5]).unwrap();
        let p = s.padded(2, 1);
        assert_eq!(p.ex(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(p.ey(), &[0.0, 0.0, 0.5, 0.0]);
        assert!((p.duration() - 8e-9).abs() < 1e-20);
        assert_eq!(s.concat(&s).unwrap().len(), 2);
        let other = Signal::new(1e-9, vec![1.0], vec![0.5]).unwrap();
        assert!(s.concat(&other).is_err());
    }

    #[test]
    fn scaling_and_imbalance() {
        let s = Signal::new(1e-9, vec![0.4], vec![0.3]).unwrap();
        assert!((s.peak_amplitude() - 0.5).abs() < 1e-15);
        assert_eq!(s.scaled(2.0).ex(), &[0.8]);
        assert_eq!(s.with_imbalance(0.5).ey(), &[0.15]);
        assert_eq!(s.with_imbalance(0.5).ex(), &[0.4]);
    }
}
