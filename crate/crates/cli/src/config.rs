//! Campaign configuration files. Durations are in ns and frequencies in
//! MHz (ordinary frequency, ω/2π); both are converted to SI angular units
//! when the library types are built.

use std::path::{Path, PathBuf};

use rqoc::experiments::{CampaignSettings, ErrorInjection, PerturbationConfig};
use rqoc::qmodel::{ErrorEnsemble, TransmonModel};
use rqoc::scp::ScpConfig;
use rqoc::signal::{build_transfer_matrix_with, DurationConvention, FilterSpec, PaddingRule, TransferMatrix};
use rqoc::units::{khz_to_rad, mhz_to_rad, ns};
use rqoc::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub signal: SignalConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub scp: ScpConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub levels: usize,
    pub omega01_mhz: f64,
    /// Defaults to `omega01_mhz` (resonant drive).
    pub drive_mhz: Option<f64>,
    pub anharmonicity_mhz: f64,
    /// Defaults to 15 MHz for every transition.
    pub rabi_mhz: Option<Vec<f64>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            omega01_mhz: 4974.0,
            drive_mhz: None,
            anharmonicity_mhz: 345.0,
            rabi_mhz: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    pub gate_time_ns: Option<f64>,
    pub n_controls: usize,
    pub bandwidth_mhz: f64,
    pub upsample: usize,
    pub slew: f64,
    pub padding: PaddingRule,
    pub duration: DurationConvention,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            gate_time_ns: None,
            n_controls: 25,
            bandwidth_mhz: 24.0,
            upsample: 4,
            slew: 1.0,
            padding: PaddingRule::default(),
            duration: DurationConvention::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Amplitude errors; each contributes `±η`.
    pub etas: Vec<f64>,
    /// Detuning errors in kHz; each contributes `±δ`.
    pub detunings_khz: Vec<f64>,
    pub include_zero: bool,
    /// Cross the two axes (corners only) instead of listing them.
    pub cartesian: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            etas: Vec::new(),
            detunings_khz: Vec::new(),
            include_zero: true,
            cartesian: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Svg,
    #[default]
    Both,
}

impl Format {
    pub fn svg(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub starts: usize,
    /// Master seed; start `i` of a multistart uses `seed + i`.
    pub seed: u64,
    /// Worker threads, 0 for one per core.
    pub jobs: usize,
    pub out: PathBuf,
    pub format: Format,
    /// Odd number of amplitude-error points used to score finished pulses.
    pub eval_grid: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            starts: 5000,
            seed: 0,
            jobs: 0,
            out: PathBuf::from("out"),
            format: Format::Both,
            eval_grid: 41,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub eta_max: f64,
    pub grid: usize,
    pub t1_us: Option<f64>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self { eta_max: 0.1, grid: 41, t1_us: None }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sweep_error: SweepErrorConfig,
    pub heatmap: HeatmapConfig,
    pub competing_loss: CompetingLossConfig,
    pub perturb: PerturbConfig,
    pub difficulty: DifficultyConfig,
    pub objectives: ObjectivesConfig,
    pub freq_robust: FreqRobustConfig,
    pub rb: RbSimConfig,
    pub ape: ApeSimConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepErrorConfig {
    pub etas: Vec<f64>,
}

impl Default for SweepErrorConfig {
    fn default() -> Self {
        Self { etas: vec![0.0, 0.01, 0.02, 0.035, 0.05, 0.075, 0.1] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    pub gate_times_ns: Vec<f64>,
    pub controls: Vec<usize>,
    pub eta: f64,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            gate_times_ns: vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0],
            controls: vec![25, 50, 75, 100],
            eta: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompetingLossConfig {
    pub robust_times_ns: Vec<f64>,
    /// Error sizes the robust library is optimized for.
    pub robust_etas: Vec<f64>,
    pub nonrobust_time_ns: f64,
    pub t1_us: Vec<f64>,
    pub etas: Vec<f64>,
    pub points_per_range: usize,
}

impl Default for CompetingLossConfig {
    fn default() -> Self {
        Self {
            robust_times_ns: vec![120.0, 130.0, 150.0, 200.0, 250.0, 300.0],
            robust_etas: vec![0.02, 0.05, 0.1],
            nonrobust_time_ns: 60.0,
            t1_us: vec![20.0, 50.0, 100.0, 182.0, 300.0, 500.0],
            etas: (0..=20).map(|k| k as f64 * 0.005).collect(),
            points_per_range: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    pub eta: f64,
    pub seeds: usize,
    pub settings: PerturbationConfig,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self { eta: 0.05, seeds: 20, settings: PerturbationConfig::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DifficultyConfig {
    pub etas: Vec<f64>,
    pub d_levels: Vec<f64>,
}

impl Default for DifficultyConfig {
    fn default() -> Self {
        Self { etas: vec![0.05, 0.1], d_levels: vec![0.5, 1.0, 2.0] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectivesConfig {
    pub gate_times_ns: Vec<f64>,
    pub eta: f64,
}

impl Default for ObjectivesConfig {
    fn default() -> Self {
        Self { gate_times_ns: vec![130.0, 150.0, 200.0], eta: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreqRobustConfig {
    pub gate_times_ns: Vec<f64>,
    pub freq_error_khz: f64,
    pub amp_error: f64,
    pub box_points: usize,
}

impl Default for FreqRobustConfig {
    fn default() -> Self {
        Self {
            gate_times_ns: vec![100.0, 125.0, 150.0, 175.0, 200.0],
            freq_error_khz: 500.0,
            amp_error: 0.075,
            box_points: 5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbSimConfig {
    /// Pulse file to benchmark; without it a robust pulse is optimized from
    /// the `signal`, `ensemble` and `run` blocks.
    pub pulse: Option<PathBuf>,
    /// Amplitude multipliers `d` to sweep.
    pub scales: Vec<f64>,
    pub channel_imbalance: f64,
    pub phase_error: f64,
    pub lengths: Vec<usize>,
    pub sequences_per_length: usize,
    pub shots: u64,
    pub t1_us: Option<f64>,
}

impl Default for RbSimConfig {
    fn default() -> Self {
        let rb = rqoc::experiments::RbConfig::default();
        Self {
            pulse: None,
            scales: vec![1.0],
            channel_imbalance: 1.0,
            phase_error: 0.0,
            lengths: rb.lengths,
            sequences_per_length: rb.sequences_per_length,
            shots: rb.shots,
            t1_us: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApeSimConfig {
    pub pulse: Option<PathBuf>,
    pub phase_error: f64,
    pub repetitions: Vec<usize>,
    pub correction_max: f64,
    pub correction_points: usize,
}

impl Default for ApeSimConfig {
    fn default() -> Self {
        Self {
            pulse: None,
            phase_error: 0.0,
            repetitions: vec![1, 2, 4, 8, 16],
            correction_max: 0.05,
            correction_points: 101,
        }
    }
}

impl ApeSimConfig {
    pub fn corrections(&self) -> Vec<f64> {
        let n = self.correction_points.max(2);
        (0..n)
            .map(|k| self.correction_max * (2.0 * k as f64 / (n - 1) as f64 - 1.0))
            .collect()
    }

    pub fn injection(&self) -> ErrorInjection {
        ErrorInjection { phase_error: self.phase_error, ..ErrorInjection::default() }
    }
}

impl CampaignConfig {
    /// Reads and validates a TOML file. An absent path gives the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: Self = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.model()?;
        self.scp.validate()?;
        if let Some(t) = self.signal.gate_time_ns {
            if !(t > 0.0) {
                return bad(format!("signal.gate_time_ns must be positive, got {t}"));
            }
        }
        if self.signal.n_controls == 0 {
            return bad("signal.n_controls must be at least 1".into());
        }
        if !(self.signal.bandwidth_mhz > 0.0) || self.signal.upsample == 0 || !(self.signal.slew > 0.0) {
            return bad("signal.bandwidth_mhz, signal.upsample and signal.slew must be positive".into());
        }
        if self.run.starts == 0 {
            return bad("run.starts must be at least 1".into());
        }
        if self.run.eval_grid < 3 || self.run.eval_grid % 2 == 0 {
            return bad(format!("run.eval_grid must be odd and at least 3, got {}", self.run.eval_grid));
        }
        if self.evaluate.grid == 0 || self.evaluate.grid % 2 == 0 {
            return bad(format!("evaluate.grid must be odd, got {}", self.evaluate.grid));
        }
        if !(self.evaluate.eta_max >= 0.0) {
            return bad("evaluate.eta_max must be non-negative".into());
        }
        Ok(())
    }

    pub fn model(&self) -> Result<TransmonModel> {
        let m = &self.model;
        if m.levels < 2 {
            return Err(Error::Config(format!("model.levels must be at least 2, got {}", m.levels)));
        }
        let rabi = m.rabi_mhz.clone().unwrap_or_else(|| vec![15.0; m.levels - 1]);
        TransmonModel::new(
            m.levels,
            mhz_to_rad(m.omega01_mhz),
            mhz_to_rad(m.drive_mhz.unwrap_or(m.omega01_mhz)),
            mhz_to_rad(m.anharmonicity_mhz),
            rabi.into_iter().map(mhz_to_rad).collect(),
        )
        .map_err(|e| Error::Config(format!("model: {e}")))
    }

    /// The gate time in seconds; required by the commands that optimize.
    pub fn gate_time(&self) -> Result<f64> {
        self.signal
            .gate_time_ns
            .map(ns)
            .ok_or_else(|| Error::Config("missing required field `signal.gate_time_ns`".into()))
    }

    pub fn transfer_matrix(&self, gate_time: f64, n_controls: usize) -> Result<TransferMatrix> {
        build_transfer_matrix_with(&FilterSpec {
            n_controls,
            gate_time,
            bandwidth: mhz_to_rad(self.signal.bandwidth_mhz),
            upsample: self.signal.upsample,
            padding: self.signal.padding,
            duration: self.signal.duration,
        })
    }

    pub fn ensemble(&self) -> Result<ErrorEnsemble> {
        let e = &self.ensemble;
        let det: Vec<f64> = e.detunings_khz.iter().map(|&d| khz_to_rad(d)).collect();
        ErrorEnsemble::from_axes(&e.etas, &det, e.include_zero, e.cartesian)
            .map_err(|err| Error::Config(format!("ensemble: {err}")))
    }

    /// The largest amplitude error in the ensemble.
    pub fn eta_max(&self) -> f64 {
        self.ensemble.etas.iter().fold(0.0, |a, e| a.max(e.abs()))
    }

    pub fn scp(&self) -> ScpConfig {
        ScpConfig { rng_seed: self.run.seed, ..self.scp.clone() }
    }

    pub fn settings(&self) -> Result<CampaignSettings> {
        Ok(CampaignSettings {
            model: self.model()?,
            bandwidth: mhz_to_rad(self.signal.bandwidth_mhz),
            upsample: self.signal.upsample,
            padding: self.signal.padding,
            duration: self.signal.duration,
            slew_limit: self.signal.slew,
            scp: self.scp(),
            starts: self.run.starts,
            eval_grid: self.run.eval_grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_tables() {
        let c: CampaignConfig = toml::from_str("").unwrap();
        assert_eq!(c.model().unwrap(), TransmonModel::reference());
        assert_eq!(c.scp, ScpConfig::default());
        assert_eq!(c.scp.max_iterations, 10_000);
        assert_eq!(c.scp.fidelity_diff_tol, 1e-10);
        assert_eq!(c.scp.trust_region_min, 1e-9);
        assert_eq!(c.run.starts, 5000);
        assert_eq!(c.signal.bandwidth_mhz, 24.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<CampaignConfig>("[signal]\ngate_time = 60").is_err());
    }

    #[test]
    fn missing_gate_time_is_named() {
        let err = CampaignConfig::default().gate_time().unwrap_err().to_string();
        assert!(err.contains("signal.gate_time_ns"));
    }

    #[test]
    fn shipped_configs_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                let c = CampaignConfig::load(Some(&path)).unwrap();
                c.validate().unwrap();
                n += 1;
            }
        }
        assert!(n >= 2);
    }

    #[test]
    fn campaign_settings_follow_filter_config() {
        let mut c = CampaignConfig::default();
        c.signal.duration = DurationConvention::Padded;
        c.signal.padding = PaddingRule::StepResponse;
        let direct = c.transfer_matrix(ns(130.0), 25).unwrap();
        let via = c.settings().unwrap().transfer_matrix(ns(130.0), 25).unwrap();
        assert_eq!(direct.m, via.m);
        assert_eq!(direct.dt_signal, via.dt_signal);
    }
}
