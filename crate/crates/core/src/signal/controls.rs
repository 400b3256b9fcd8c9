use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-channel amplitude bound, chosen so that `sqrt(ex² + ey²) ≤ 1`.
pub const MAX_AMPLITUDE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Slack allowed on both bounds when checking feasibility. Subproblem
/// solutions sit exactly on the constraint boundary.
const FEAS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    X,
    Y,
}

/// Raw control variables of both quadratures before filtering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    pub cx: Vec<f64>,
    pub cy: Vec<f64>,
    pub slew_limit: f64,
}

impl ControlSet {
    pub fn new(cx: Vec<f64>, cy: Vec<f64>) -> Result<Self> {
        Self::with_slew(cx, cy, 1.0)
    }

    pub fn with_slew(cx: Vec<f64>, cy: Vec<f64>, slew_limit: f64) -> Result<Self> {
        if cx.len() != cy.len() {
            return Err(Error::Input(format!(
                "control channels differ in length: {} vs {}",
                cx.len(),
                cy.len()
            )));
        }
        if cx.len() < 2 {
            return Err(Error::Input("need at least two control variables".into()));
        }
        if !(slew_limit > 0.0) {
            return Err(Error::Input(format!("slew limit must be positive, got {slew_limit}")));
        }
        if cx.iter().chain(&cy).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite control variable".into()));
        }
        Ok(Self { cx, cy, slew_limit })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n], vec![0.0; n])
    }

    /// Uniform draw in the amplitude box, then made slew-feasible by a
    /// forward clamp.
    pub fn random<R: Rng + ?Sized>(n: usize, slew_limit: f64, rng: &mut R) -> Result<Self> {
        let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.random_range(-MAX_AMPLITUDE..=MAX_AMPLITUDE)).collect() };
        let cx = draw();
        let cy = draw();
        let mut c = Self::with_slew(cx, cy, slew_limit)?;
        c.project_slew();
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.cx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cx.is_empty()
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        match ch {
            Channel::X => &self.cx,
            Channel::Y => &self.cy,
        }
    }

    /// `[cx; cy]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.cx.clone();
        v.extend_from_slice(&self.cy);
        v
    }

    /// Inverse of [`ControlSet::to_vector`], keeping this set's slew limit.
    pub fn from_vector(&self, v: &[f64]) -> Result<Self> {
        if v.len() != 2 * self.len() {
            return Err(Error::Input(format!(
                "expected {} control values, got {}",
                2 * self.len(),
                v.len()
            )));
        }
        let (x, y) = v.split_at(self.len());
        Self::with_slew(x.to_vec(), y.to_vec(), self.slew_limit)
    }

    /// Clamps into the amplitude box, then limits every step from the left.
    pub fn project_slew(&mut self) {
        let s = self.slew_limit;
        for c in [&mut self.cx, &mut self.cy] {
            for k in 0..c.len() {
                c[k] = c[k].clamp(-MAX_AMPLITUDE, MAX_AMPLITUDE);
                if k > 0 {
                    c[k] = c[k].clamp(c[k - 1] - s, c[k - 1] + s);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub channel: Channel,
    /// Variable index; for slew violations, the left index of the pair.
    pub index: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub amplitude: Vec<Violation>,
    pub slew: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.amplitude.is_empty() && self.slew.is_empty()
    }
}

/// Lists every amplitude and slew violation.
pub fn check_feasible(controls: &ControlSet) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    for ch in [Channel::X, Channel::Y] {
        let c = controls.channel(ch);
        for (index, &value) in c.iter().enumerate() {
            if !(value.abs() <= MAX_AMPLITUDE + FEAS_TOL) {
                report.amplitude.push(Violation { channel: ch, index, value });
            }
        }
        for (index, w) in c.windows(2).enumerate() {
            let value = w[0] - w[1];
            if !(value.abs() <= controls.slew_limit + FEAS_TOL) {
                report.slew.push(Violation { channel: ch, index, value });
            }
        }
    }
    report
}
