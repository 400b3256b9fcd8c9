//! Multistart campaigns over gate times, control counts and error sizes.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::difficulty::{difficulty_stats, DifficultyRow};
use crate::qmodel::{
    average_fidelity_open, propagate_unitary, x_half_pi_target, ErrorEnsemble, ErrorSample, LindbladConfig,
    TransmonModel,
};
use crate::scp::{
    evaluate_samples, evaluate_signal_worst_case, multistart, run_scp, sample_start, ControlProblem, Mode,
    OptimizationRecord, ScpConfig,
};
use crate::signal::{build_transfer_matrix_with, ControlSet, DurationConvention, FilterSpec, PaddingRule, Signal, TransferMatrix};
use crate::{Error, Result};

/// Shared physics, filter and optimizer settings of a campaign.
#[derive(Clone, Debug)]
pub struct CampaignSettings {
    pub model: TransmonModel,
    /// Filter bandwidth ω_b, rad/s.
    pub bandwidth: f64,
    pub upsample: usize,
    pub padding: PaddingRule,
    pub duration: DurationConvention,
    pub slew_limit: f64,
    pub scp: ScpConfig,
    pub starts: usize,
    /// Points of the amplitude-error grid used to score finished pulses.
    pub eval_grid: usize,
}

impl CampaignSettings {
    pub fn transfer_matrix(&self, gate_time: f64, n_controls: usize) -> Result<TransferMatrix> {
        build_transfer_matrix_with(&FilterSpec {
            upsample: self.upsample,
            padding: self.padding,
            duration: self.duration,
            ..FilterSpec::new(n_controls, gate_time, self.bandwidth)
        })
    }

    pub fn problem(&self, gate_time: f64, n_controls: usize, ensemble: ErrorEnsemble) -> Result<ControlProblem> {
        Ok(ControlProblem::new(
            self.model.clone(),
            self.transfer_matrix(gate_time, n_controls)?,
            ensemble,
        ))
    }

    /// Best-of-`starts` run, scored by the worst case on the evaluation
    /// grid over `[−η, η]`.
    pub fn optimize(&self, gate_time: f64, n_controls: usize, ensemble: ErrorEnsemble, eta: f64) -> Result<OptimizedPulse> {
        let problem = self.problem(gate_time, n_controls, ensemble)?;
        let slew = self.slew_limit;
        let result = crate::scp::multistart_with(&problem, &self.scp, self.starts, |seed| {
            sample_start(n_controls, slew, seed)
        })?;
        OptimizedPulse::from_records(self, &problem, gate_time, eta, result.records)
    }
}

/// A finished pulse and the records it was chosen from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizedPulse {
    pub gate_time: f64,
    pub n_controls: usize,
    pub eta: f64,
    pub controls: ControlSet,
    /// Worst case of the best record on the evaluation grid.
    pub grid_infidelity: f64,
    pub max_leakage: f64,
    pub records: Vec<OptimizationRecord>,
}

impl OptimizedPulse {
    fn from_records(
        settings: &CampaignSettings,
        problem: &ControlProblem,
        gate_time: f64,
        eta: f64,
        records: Vec<OptimizationRecord>,
    ) -> Result<Self> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in records.iter().enumerate() {
            let inf = grid_infidelity(settings, problem, &r.final_controls, eta)?;
            if best.is_none_or(|(_, b)| inf < b) {
                best = Some((i, inf));
            }
        }
        let (i, inf) = best.ok_or_else(|| Error::Config("no records".into()))?;
        let controls = records[i].final_controls.clone();
        let signal = problem.signal(&controls)?;
        let max_leakage = max_leakage_over(&settings.model, &signal, &problem.ensemble.samples().to_vec())?;
        Ok(Self {
            gate_time,
            n_controls: problem.n_controls(),
            eta,
            controls,
            grid_infidelity: inf,
            max_leakage,
            records,
        })
    }

    pub fn best_record(&self) -> &OptimizationRecord {
        self.records
            .iter()
            .find(|r| r.final_controls == self.controls)
            .expect("best controls come from a record")
    }
}

fn grid_infidelity(settings: &CampaignSettings, problem: &ControlProblem, c: &ControlSet, eta: f64) -> Result<f64> {
    let signal = problem.signal(c)?;
    if eta == 0.0 {
        let f = evaluate_samples(&settings.model, &signal, &[ErrorSample::ZERO], &problem.target)?;
        return Ok(1.0 - f[0]);
    }
    Ok(1.0 - evaluate_signal_worst_case(&settings.model, &signal, eta, settings.eval_grid, &problem.target)?.worst)
}

/// Largest leakage population over the given error samples.
pub fn max_leakage_over(model: &TransmonModel, signal: &Signal, samples: &[ErrorSample]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &e in samples {
        worst = worst.max(propagate_unitary(model, signal, e)?.max_leakage);
    }
    Ok(worst)
}

/// Drive phase `atan2(E^y, E^x)` per sample.
pub fn drive_angle(signal: &Signal) -> Vec<f64> {
    signal.ex().iter().zip(signal.ey()).map(|(x, y)| y.atan2(*x)).collect()
}

// ---------------------------------------------------------------- sweep

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    /// Worst case over `[−η, η]` of the pulse optimized for `η`.
    pub own: f64,
    /// Best worst case over `[−η, η]` among all pulses.
    pub best_any: f64,
    /// Optimization error of the pulse achieving `best_any`.
    pub best_any_from: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `cross[i][j]`: pulse `i` scored over `[−η_j, η_j]`.
    pub cross: Vec<Vec<f64>>,
}

impl SweepResult {
    /// Largest `own / best_any` ratio.
    pub fn max_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.own / r.best_any).fold(0.0, f64::max)
    }
}

/// Scores every pulse over every error range. `pulses[i]` must be the
/// pulse optimized for `etas[i]`.
pub fn sweep_error(model: &TransmonModel, pulses: &[Signal], etas: &[f64], n_grid: usize) -> Result<SweepResult> {
    if pulses.len() != etas.len() {
        return Err(Error::Input("one pulse per error size is required".into()));
    }
    let target = x_half_pi_target(model.num_levels());
    let cross: Vec<Vec<f64>> = pulses
        .par_iter()
        .map(|p| {
            etas.iter()
                .map(|&eta| {
                    if eta == 0.0 {
                        evaluate_samples(model, p, &[ErrorSample::ZERO], &target).map(|f| 1.0 - f[0])
                    } else {
                        evaluate_signal_worst_case(model, p, eta, n_grid, &target).map(|g| 1.0 - g.worst)
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let rows = etas
        .iter()
        .enumerate()
        .map(|(j, &eta)| {
            let (i_best, best_any) = (0..pulses.len())
                .map(|i| (i, cross[i][j]))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            SweepRow {
                eta,
                own: cross[j][j],
                best_any,
                best_any_from: etas[i_best],
            }
        })
        .collect();
    Ok(SweepResult { rows, cross })
}

// -------------------------------------------------------------- heatmap

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub gate_time: f64,
    pub n_controls: usize,
    pub best_infidelity: f64,
    pub median_infidelity: f64,
    pub max_leakage: f64,
}

/// Full factorial over gate times and control counts at one error size.
pub fn heatmap_time_controls(
    settings: &CampaignSettings,
    gate_times: &[f64],
    control_counts: &[usize],
    eta: f64,
) -> Result<Vec<HeatmapCell>> {
    let mut cells = Vec::new();
    for &t in gate_times {
        for &n in control_counts {
            let ens = ErrorEnsemble::amplitude_triple(eta)?;
            let pulse = settings.optimize(t, n, ens, eta)?;
            let problem = settings.problem(t, n, ErrorEnsemble::amplitude_triple(eta)?)?;
            let mut all: Vec<f64> = pulse
                .records
                .iter()
                .map(|r| grid_infidelity(settings, &problem, &r.final_controls, eta))
                .collect::<Result<_>>()?;
            all.sort_by(f64::total_cmp);
            cells.push(HeatmapCell {
                gate_time: t,
                n_controls: n,
                best_infidelity: pulse.grid_infidelity,
                median_infidelity: all[all.len() / 2],
                max_leakage: pulse.max_leakage,
            });
        }
    }
    Ok(cells)
}

// -------------------------------------------------------- competing loss

/// A pulse entered into the competing-loss comparison.
#[derive(Clone, Debug)]
pub struct LibraryPulse {
    pub label: String,
    pub gate_time: f64,
    pub robust: bool,
    pub signal: Signal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompetingCell {
    pub t1: f64,
    pub eta: f64,
    pub best_fidelity: f64,
    pub best_label: String,
    pub best_gate_time: f64,
    pub best_nonrobust_fidelity: f64,
    pub robust_wins: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Boundary {
    pub t1: f64,
    /// Smallest error size at which a robust pulse wins.
    pub eta: f64,
    /// Gate time of the robust winner there.
    pub gate_time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompetingLossResult {
    pub cells: Vec<CompetingCell>,
    pub boundary: Vec<Boundary>,
    /// Least-squares `k` in `η = k·sqrt(T/T₁)`.
    pub k: f64,
    pub r_squared: f64,
}

impl CompetingLossResult {
    pub fn crossover_at(&self, t1: f64) -> Option<f64> {
        self.boundary
            .iter()
            .find(|b| (b.t1 - t1).abs() <= 1e-9 * t1)
            .map(|b| b.eta)
    }
}

/// Worst-case open-system fidelity of every pulse, for every `T₁` and every
/// error range `[−η, η]`. Each pulse is evaluated once per `T₁` on a grid
/// containing every `±η` in `etas`; the range score is the minimum over
/// grid points inside it.
pub fn competing_loss_map(
    model: &TransmonModel,
    library: &[LibraryPulse],
    t1_list: &[f64],
    etas: &[f64],
    points_per_range: usize,
) -> Result<CompetingLossResult> {
    if library.iter().all(|p| p.robust) || library.iter().all(|p| !p.robust) {
        return Err(Error::Input("the library needs robust and non-robust pulses".into()));
    }
    let eta_max = etas.iter().cloned().fold(0.0, f64::max);
    let mut grid: Vec<f64> = vec![0.0];
    let steps = points_per_range.max(1);
    for &e in etas.iter().filter(|e| **e > 0.0) {
        for k in 1..=steps {
            let v = e * k as f64 / steps as f64;
            grid.push(v);
            grid.push(-v);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let _ = eta_max;
    let target = x_half_pi_target(model.num_levels());

    // fid[t1][pulse][grid point]
    let fid: Vec<Vec<Vec<f64>>> = t1_list
        .iter()
        .map(|&t1| {
            let lind = LindbladConfig::relaxation(t1)?;
            library
                .par_iter()
                .map(|p| {
                    grid.iter()
                        .map(|&e| average_fidelity_open(model, &p.signal, ErrorSample::amplitude(e), &lind, &target))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut boundary = Vec::new();
    for (ti, &t1) in t1_list.iter().enumerate() {
        let mut crossing: Option<Boundary> = None;
        for &eta in etas {
            let score = |pi: usize| {
                grid.iter()
                    .zip(&fid[ti][pi])
                    .filter(|(g, _)| g.abs() <= eta + 1e-15)
                    .map(|(_, f)| *f)
                    .fold(f64::INFINITY, f64::min)
            };
            let scores: Vec<f64> = (0..library.len()).map(score).collect();
            let best = (0..library.len()).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).expect("non-empty");
            let best_nonrobust = (0..library.len())
                .filter(|&i| !library[i].robust)
                .map(|i| scores[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let robust_wins = library[best].robust && scores[best] > best_nonrobust;
            if robust_wins && crossing.is_none() {
                crossing = Some(Boundary {
                    t1,
                    eta,
                    gate_time: library[best].gate_time,
                });
            }
            cells.push(CompetingCell {
                t1,
                eta,
                best_fidelity: scores[best],
                best_label: library[best].label.clone(),
                best_gate_time: library[best].gate_time,
                best_nonrobust_fidelity: best_nonrobust,
                robust_wins,
            });
        }
        boundary.extend(crossing);
    }
    let (k, r_squared) = fit_sqrt_boundary(&boundary);
    Ok(CompetingLossResult {
        cells,
        boundary,
        k,
        r_squared,
    })
}

/// Fits `η = k·sqrt(T/T₁)` through the origin; returns `(k, R²)`.
pub fn fit_sqrt_boundary(boundary: &[Boundary]) -> (f64, f64) {
    if boundary.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let xs: Vec<f64> = boundary.iter().map(|b| (b.gate_time / b.t1).sqrt()).collect();
    let ys: Vec<f64> = boundary.iter().map(|b| b.eta).collect();
    let k = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - k * x).powi(2)).sum();
    let tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    (k, if tot > 0.0 { 1.0 - res / tot } else { f64::NAN })
}

// ------------------------------------------------------------ difficulty

/// Multistart at every error size; `Q` from the grid-scored records.
pub fn difficulty_campaign(
    settings: &CampaignSettings,
    gate_time: f64,
    n_controls: usize,
    etas: &[f64],
    d_levels: &[f64],
) -> Result<(Vec<DifficultyRow>, Vec<OptimizedPulse>)> {
    let mut groups = Vec::new();
    let mut pulses = Vec::new();
    for &eta in etas {
        let ens = if eta == 0.0 {
            ErrorEnsemble::nominal()
        } else {
            ErrorEnsemble::amplitude_triple(eta)?
        };
        let pulse = settings.optimize(gate_time, n_controls, ens.clone(), eta)?;
        let problem = settings.problem(gate_time, n_controls, ens)?;
        let fids: Vec<f64> = pulse
            .records
            .iter()
            .map(|r| grid_infidelity(settings, &problem, &r.final_controls, eta).map(|i| 1.0 - i))
            .collect::<Result<_>>()?;
        groups.push((eta, fids));
        pulses.push(pulse);
    }
    Ok((difficulty_stats(&groups, d_levels), pulses))
}

// ------------------------------------------------------------ objectives

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectiveRun {
    pub mode: Mode,
    pub seed: u64,
    /// Worst case on the evaluation grid.
    pub worst_case_fidelity: f64,
    /// Mean over the evaluation grid.
    pub average_fidelity: f64,
    pub seconds: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectiveComparison {
    pub gate_time: f64,
    pub worst_case: Vec<ObjectiveRun>,
    pub average_case: Vec<ObjectiveRun>,
}

impl ObjectiveComparison {
    fn best(runs: &[ObjectiveRun]) -> f64 {
        runs.iter().map(|r| r.worst_case_fidelity).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn best_worst_case_mode(&self) -> f64 {
        Self::best(&self.worst_case)
    }

    pub fn best_average_mode(&self) -> f64 {
        Self::best(&self.average_case)
    }

    /// Median over seeds of `t_average / t_worst`.
    pub fn median_runtime_ratio(&self) -> f64 {
        let mut r: Vec<f64> = self
            .worst_case
            .iter()
            .zip(&self.average_case)
            .map(|(w, a)| a.seconds / w.seconds.max(1e-12))
            .collect();
        r.sort_by(f64::total_cmp);
        r[r.len() / 2]
    }
}

/// The same starts optimized for the worst case and for the mean.
pub fn compare_objectives(
    settings: &CampaignSettings,
    gate_times: &[f64],
    n_controls: usize,
    eta: f64,
) -> Result<Vec<ObjectiveComparison>> {
    let target = x_half_pi_target(settings.model.num_levels());
    gate_times
        .iter()
        .map(|&t| {
            let problem = settings.problem(t, n_controls, ErrorEnsemble::amplitude_triple(eta)?)?;
            let run = |mode: Mode| -> Result<Vec<ObjectiveRun>> {
                (0..settings.starts as u64)
                    .into_par_iter()
                    .map(|i| {
                        let seed = settings.scp.rng_seed.wrapping_add(i);
                        let cfg = ScpConfig { mode, rng_seed: seed, ..settings.scp.clone() };
                        let start = sample_start(n_controls, settings.slew_limit, seed)?;
                        let clock = Instant::now();
                        let rec = run_scp(&problem, &cfg, &start)?;
                        let seconds = clock.elapsed().as_secs_f64();
                        let g = evaluate_signal_worst_case(
                            &settings.model,
                            &problem.signal(&rec.final_controls)?,
                            eta,
                            settings.eval_grid,
                            &target,
                        )?;
                        Ok(ObjectiveRun {
                            mode,
                            seed,
                            worst_case_fidelity: g.worst,
                            average_fidelity: g.fidelities.iter().sum::<f64>() / g.fidelities.len() as f64,
                            seconds,
                            iterations: rec.iterations_used,
                        })
                    })
                    .collect()
            };
            Ok(ObjectiveComparison {
                gate_time: t,
                worst_case: run(Mode::WorstCase)?,
                average_case: run(Mode::AverageCase)?,
            })
        })
        .collect()
}

// ------------------------------------------------------ frequency errors

/// Best worst-case infidelity of one robust multistart, scored two ways.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RobustScore {
    /// Over the samples that were optimized.
    pub ensemble: f64,
    /// Over the full amplitude × detuning box (see [`box_infidelity`]).
    pub grid: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub gate_time: f64,
    /// Detuning-robust ensemble `{−δ, 0, +δ}`.
    pub frequency_robust: RobustScore,
    /// Doubly-robust ensemble: zero plus the four corners.
    pub doubly_robust: RobustScore,
}

/// Worst-case infidelity over an `n × n` grid of amplitude and detuning
/// errors; an axis with zero range contributes only its zero.
pub fn box_infidelity(model: &TransmonModel, signal: &Signal, eta: f64, shift: f64, n: usize) -> Result<f64> {
    let axis = |r: f64| -> Vec<f64> {
        if r == 0.0 || n < 2 {
            vec![0.0]
        } else {
            (0..n).map(|k| r * (2.0 * k as f64 / (n - 1) as f64 - 1.0)).collect()
        }
    };
    let mut samples = Vec::new();
    for a in axis(eta) {
        for d in axis(shift) {
            samples.push(ErrorSample { amplitude: a, detuning: d });
        }
    }
    let f = evaluate_samples(model, signal, &samples, &x_half_pi_target(model.num_levels()))?;
    Ok(1.0 - f.into_iter().fold(f64::INFINITY, f64::min))
}

/// Multistart over `ensemble` at one gate time, scored on the ensemble and
/// on the `box_points²` grid spanning `±eta × ±shift`.
pub fn robust_score(
    settings: &CampaignSettings,
    gate_time: f64,
    n_controls: usize,
    ensemble: ErrorEnsemble,
    eta: f64,
    shift: f64,
    box_points: usize,
) -> Result<RobustScore> {
    let problem = settings.problem(gate_time, n_controls, ensemble)?;
    let slew = settings.slew_limit;
    let res = crate::scp::multistart_with(&problem, &settings.scp, settings.starts, |seed| {
        sample_start(n_controls, slew, seed)
    })?;
    let mut score = RobustScore { ensemble: f64::INFINITY, grid: f64::INFINITY };
    for r in &res.records {
        score.ensemble = score.ensemble.min(1.0 - r.worst_case_fidelity);
        let g = box_infidelity(&settings.model, &problem.signal(&r.final_controls)?, eta, shift, box_points)?;
        score.grid = score.grid.min(g);
    }
    Ok(score)
}

/// Detuning-robust and doubly-robust multistarts per gate time. `shift` is
/// the detuning error in rad/s.
pub fn robust_freq_campaign(
    settings: &CampaignSettings,
    gate_times: &[f64],
    n_controls: usize,
    shift: f64,
    eta: f64,
    box_points: usize,
) -> Result<Vec<FrequencyRow>> {
    gate_times
        .iter()
        .map(|&t| {
            Ok(FrequencyRow {
                gate_time: t,
                frequency_robust: robust_score(
                    settings,
                    t,
                    n_controls,
                    ErrorEnsemble::detuning_triple(shift)?,
                    0.0,
                    shift,
                    box_points,
                )?,
                doubly_robust: robust_score(
                    settings,
                    t,
                    n_controls,
                    ErrorEnsemble::doubly_robust(eta, shift)?,
                    eta,
                    shift,
                    box_points,
                )?,
            })
        })
        .collect()
}

/// Convenience: a single best pulse for `eta` at one gate time.
pub fn best_pulse(settings: &CampaignSettings, gate_time: f64, n_controls: usize, eta: f64) -> Result<OptimizedPulse> {
    let ens = if eta == 0.0 {
        ErrorEnsemble::nominal()
    } else {
        ErrorEnsemble::amplitude_triple(eta)?
    };
    settings.optimize(gate_time, n_controls, ens, eta)
}

/// Runs `multistart` directly; kept for callers that build their own problem.
pub fn multistart_problem(problem: &ControlProblem, scp: &ScpConfig, starts: usize) -> Result<Vec<OptimizationRecord>> {
    Ok(multistart(problem, scp, starts)?.records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_rad, ns, us};

    fn settings() -> CampaignSettings {
        CampaignSettings {
            model: TransmonModel::reference(),
            bandwidth: mhz_to_rad(24.0),
            upsample: 4,
            padding: PaddingRule::default(),
            duration: DurationConvention::default(),
            slew_limit: 1.0,
            scp: ScpConfig { max_iterations: 60, ..ScpConfig::default() },
            starts: 2,
            eval_grid: 11,
        }
    }

    #[test]
    fn dashed_never_above_solid() {
        let s = settings();
        let etas = [0.0, 0.05];
        let pulses: Vec<Signal> = etas
            .iter()
            .map(|&e| {
                let p = best_pulse(&s, ns(60.0), 10, e).unwrap();
                s.transfer_matrix(ns(60.0), 10).unwrap().apply(&p.controls).unwrap()
            })
            .collect();
        let r = sweep_error(&s.model, &pulses, &etas, 11).unwrap();
        for row in &r.rows {
            assert!(row.best_any <= row.own);
        }
        assert!(r.max_gap() >= 1.0);
    }

    #[test]
    fn heatmap_smoke() {
        let s = settings();
        let cells = heatmap_time_controls(&s, &[ns(50.0), ns(60.0)], &[10, 12], 0.05).unwrap();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.best_infidelity <= c.median_infidelity));
    }

    #[test]
    fn sqrt_boundary_fit_is_exact_on_model_data() {
        let b: Vec<Boundary> = [20e-6, 50e-6, 100e-6, 200e-6]
            .iter()
            .map(|&t1| Boundary { t1, eta: 0.7 * (130e-9 / t1).sqrt(), gate_time: 130e-9 })
            .collect();
        let (k, r2) = fit_sqrt_boundary(&b);
        assert!((k - 0.7).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_without_ranges_is_the_nominal_point() {
        let s = settings();
        let p = best_pulse(&s, ns(60.0), 10, 0.0).unwrap();
        let sig = s.transfer_matrix(ns(60.0), 10).unwrap().apply(&p.controls).unwrap();
        let b = box_infidelity(&s.model, &sig, 0.0, 0.0, 5).unwrap();
        assert!((b - p.grid_infidelity).abs() < 1e-15);
    }

    #[test]
    fn competing_map_prefers_short_pulse_without_error() {
        let s = settings();
        let make = |t: f64, n: usize, eta: f64, robust: bool| {
            let p = best_pulse(&s, ns(t), n, eta).unwrap();
            LibraryPulse {
                label: format!("{t}"),
                gate_time: ns(t),
                robust,
                signal: s.transfer_matrix(ns(t), n).unwrap().apply(&p.controls).unwrap(),
            }
        };
        let lib = vec![make(60.0, 10, 0.0, false), make(120.0, 12, 0.05, true)];
        let r = competing_loss_map(&s.model, &lib, &[us(20.0)], &[0.0, 0.05], 2).unwrap();
        assert!(!r.cells[0].robust_wins);
        assert_eq!(r.cells[0].best_label, "60");
    }
}
