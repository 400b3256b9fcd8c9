use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ControlSet, Signal};
use crate::{Error, Result};

/// Tail threshold on the first row of the transfer matrix.
const TAIL_THRESHOLD: f64 = 1e-3;
/// Kernel support in standard deviations.
const KERNEL_HALF_WIDTH: f64 = 4.0;

/// How the padding length n₀ is read off the first row of `M`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaddingRule {
    /// Smallest 1-based `i` with `Σ_{j≥i} M₁ⱼ < 0.001`.
    #[default]
    AsPrinted,
    /// Smallest `n₀` for which the first output sample of a padded
    /// all-ones input is below 0.001, i.e. `Σ_{j>n₀} M₁ⱼ < 0.001`.
    StepResponse,
}

/// What the nominal gate time measures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationConvention {
    /// The control variables span the gate time; padding extends the
    /// signal by n₀ variable widths on each side.
    #[default]
    Controls,
    /// The padded signal spans the gate time.
    Padded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub n_controls: usize,
    /// Seconds.
    pub gate_time: f64,
    /// Standard deviation ω_b of the Gaussian frequency response, rad/s.
    /// `f64::INFINITY` gives a pure sample-and-hold.
    pub bandwidth: f64,
    pub upsample: usize,
    pub padding: PaddingRule,
    pub duration: DurationConvention,
}

impl FilterSpec {
    pub fn new(n_controls: usize, gate_time: f64, bandwidth: f64) -> Self {
        Self {
            n_controls,
            gate_time,
            bandwidth,
            upsample: 4,
            padding: PaddingRule::default(),
            duration: DurationConvention::default(),
        }
    }
}

/// Linear map from padded control variables to signal samples.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    /// Rows = `upsample · (n_controls + 2·pad_count)`, one column per padded variable.
    pub m: DMatrix<f64>,
    pub bandwidth: f64,
    pub dt_signal: f64,
    pub pad_count: usize,
    pub upsample: usize,
    n_controls: usize,
    /// Columns of `m` that multiply actual control variables.
    inner: DMatrix<f64>,
}

/// Transfer matrix with the default padding rule and duration convention.
pub fn build_transfer_matrix(
    n_controls: usize,
    gate_time: f64,
    bandwidth: f64,
    upsample: usize,
) -> Result<TransferMatrix> {
    build_transfer_matrix_with(&FilterSpec {
        upsample,
        ..FilterSpec::new(n_controls, gate_time, bandwidth)
    })
}

pub fn build_transfer_matrix_with(spec: &FilterSpec) -> Result<TransferMatrix> {
    let FilterSpec {
        n_controls,
        gate_time,
        bandwidth,
        upsample,
        ..
    } = *spec;
    if n_controls < 2 {
        return Err(Error::Config(format!("need at least two control variables, got {n_controls}")));
    }
    if !(gate_time.is_finite() && gate_time > 0.0) {
        return Err(Error::Config(format!("gate time must be positive, got {gate_time}")));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::Config(format!("filter bandwidth must be positive, got {bandwidth}")));
    }
    if upsample == 0 {
        return Err(Error::Config("upsample factor must be at least 1".into()));
    }

    let (width, pad_count) = match spec.duration {
        DurationConvention::Controls => {
            let w = gate_time / n_controls as f64;
            (w, padding_length(&kernel(bandwidth, w / upsample as f64), upsample, spec.padding))
        }
        DurationConvention::Padded => {
            // n₀ depends on the variable width, which shrinks as n₀ grows, so
            // the iteration is monotone.
            let width = |n0: usize| gate_time / (n_controls + 2 * n0) as f64;
            let mut n0 = 0;
            while n0 < n_controls {
                let next = padding_length(&kernel(bandwidth, width(n0) / upsample as f64), upsample, spec.padding);
                if next <= n0 {
                    break;
                }
                n0 = next;
            }
            (width(n0), n0)
        }
    };
    if pad_count >= n_controls {
        return Err(Error::Config(format!(
            "filter too narrow for gate time: padding needs {pad_count} variables per side \
             but there are only {n_controls} controls"
        )));
    }

    let dt = width / upsample as f64;
    let k = kernel(bandwidth, dt);
    let half = k.len() / 2;
    let cols = n_controls + 2 * pad_count;
    let rows = upsample * cols;
    let mut m = DMatrix::zeros(rows, cols);
    for s in 0..rows {
        let lo = s.saturating_sub(half);
        let hi = (s + half).min(rows - 1);
        for r in lo..=hi {
            m[(s, r / upsample)] += k[r + half - s];
        }
    }
    let inner = m.columns(pad_count, n_controls).into_owned();
    Ok(TransferMatrix {
        m,
        bandwidth,
        dt_signal: dt,
        pad_count,
        upsample,
        n_controls,
        inner,
    })
}

/// Unit-sum Gaussian of time-domain standard deviation `1/ω_b` sampled at
/// `dt`, truncated at ±4σ. Odd length, centred.
fn kernel(bandwidth: f64, dt: f64) -> Vec<f64> {
    let sigma = 1.0 / bandwidth;
    let half = (KERNEL_HALF_WIDTH * sigma / dt).floor();
    if !half.is_finite() || half < 1.0 {
        return vec![1.0];
    }
    let half = half as i64;
    let mut k: Vec<f64> = (-half..=half)
        .map(|j| {
            let t = j as f64 * dt / sigma;
            (-0.5 * t * t).exp()
        })
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

fn padding_length(k: &[f64], upsample: usize, rule: PaddingRule) -> usize {
    // First row: fine sample 0 sees kernel offsets r = 0, 1, 2, ... which
    // fall in column r / upsample.
    let half = k.len() / 2;
    let ncols = half / upsample + 1;
    let mut row = vec![0.0; ncols];
    for r in 0..=half {
        row[r / upsample] += k[half + r];
    }
    let mut tail = 0.0;
    let mut first_small = ncols;
    for j in (0..ncols).rev() {
        tail += row[j];
        if tail >= TAIL_THRESHOLD {
            break;
        }
        first_small = j;
    }
    match rule {
        PaddingRule::StepResponse => first_small,
        PaddingRule::AsPrinted => first_small + 1,
    }
}

impl TransferMatrix {
    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    pub fn num_samples(&self) -> usize {
        self.m.nrows()
    }

    /// Duration of the whole padded signal.
    pub fn signal_duration(&self) -> f64 {
        self.dt_signal * self.num_samples() as f64
    }

    /// Width of one control variable.
    pub fn control_width(&self) -> f64 {
        self.dt_signal * self.upsample as f64
    }

    /// Rows of `M` restricted to the unpadded columns.
    pub fn inner(&self) -> &DMatrix<f64> {
        &self.inner
    }

    /// `E = M·c` on both channels, with the padding zeros implied.
    pub fn apply(&self, controls: &ControlSet) -> Result<Signal> {
        if controls.len() != self.n_controls {
            return Err(Error::Input(format!(
                "transfer matrix expects {} controls per channel, got {}",
                self.n_controls,
                controls.len()
            )));
        }
        let ex = &self.inner * DVector::from_column_slice(&controls.cx);
        let ey = &self.inner * DVector::from_column_slice(&controls.cy);
        Signal::new(self.dt_signal, ex.data.into(), ey.data.into())
    }

    /// `M·c` for an explicitly padded single-channel vector.
    pub fn apply_padded(&self, padded: &[f64]) -> Result<Vec<f64>> {
        if padded.len() != self.m.ncols() {
            return Err(Error::Input(format!(
                "padded vector must have {} entries, got {}",
                self.m.ncols(),
                padded.len()
            )));
        }
        Ok((&self.m * DVector::from_column_slice(padded)).data.into())
    }

    /// Chains signal-sample gradients back to `[∂/∂cx; ∂/∂cy]`.
    pub fn pullback(&self, gx: &[f64], gy: &[f64]) -> Vec<f64> {
        let gx = self.inner.tr_mul(&DVector::from_column_slice(gx));
        let gy = self.inner.tr_mul(&DVector::from_column_slice(gy));
        gx.iter().chain(gy.iter()).copied().collect()
    }
}
