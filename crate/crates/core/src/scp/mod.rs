//! Sequential convex programming for worst-case robust pulses.
//!
//! Each iteration linearizes the fidelity of every ensemble member around the
//! current controls, takes the step that maximizes the smallest linearized
//! fidelity inside a box trust region, and accepts it only if no member gets
//! worse. The trust region grows after an accepted step and shrinks after a
//! rejected one.

mod evaluate;
mod gradient;
mod subproblem;

pub use evaluate::{
    average_fidelity_signal, evaluate_samples, evaluate_signal_worst_case, evaluate_worst_case, GridEvaluation,
};
pub use gradient::{gradient, ForwardPass};
pub use subproblem::solve_subproblem;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qmodel::{fidelity_average_unitary, x_half_pi_target, ErrorEnsemble, TransmonModel};
use crate::signal::{check_feasible, ControlSet, Signal, TransferMatrix};
use crate::{CMatrix, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Maximize the smallest sample fidelity; every sample must improve.
    #[default]
    WorstCase,
    /// Maximize the mean; the mean must improve.
    AverageCase,
}

/// When a worst-case step is taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acceptance {
    /// The smallest sample fidelity must not decrease.
    #[default]
    Objective,
    /// No sample fidelity may decrease. Stalls once a sample that is not
    /// the minimum sits at a local maximum of its own fidelity.
    EverySample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScpConfig {
    pub trust_region_init: f64,
    pub incr_factor: f64,
    pub decr_factor: f64,
    pub max_iterations: usize,
    /// Stop once the objective (F2) reaches this value.
    pub fidelity_target: f64,
    /// Stop once the objective improves by less than this per accepted step,
    /// averaged over the last `plateau_window` accepted steps.
    pub fidelity_diff_tol: f64,
    pub plateau_window: usize,
    pub trust_region_min: f64,
    pub mode: Mode,
    /// Only consulted in worst-case mode.
    pub acceptance: Acceptance,
    pub rng_seed: u64,
    /// Weight μ of an optional `−μ‖x‖²` term in the subproblem.
    pub tikhonov: f64,
}

impl Default for ScpConfig {
    fn default() -> Self {
        Self {
            trust_region_init: 0.1,
            incr_factor: 1.2,
            decr_factor: 0.5,
            max_iterations: 10_000,
            fidelity_target: 1.0 - 1e-12,
            fidelity_diff_tol: 1e-10,
            plateau_window: 10,
            trust_region_min: 1e-9,
            mode: Mode::WorstCase,
            acceptance: Acceptance::Objective,
            rng_seed: 0,
            tikhonov: 0.0,
        }
    }
}

impl ScpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.incr_factor > 1.0) {
            return bad("incr_factor must exceed 1");
        }
        if !(self.decr_factor > 0.0 && self.decr_factor < 1.0) {
            return bad("decr_factor must lie in (0, 1)");
        }
        if !(self.trust_region_min > 0.0) {
            return bad("trust_region_min must be positive");
        }
        if !(self.trust_region_init > 0.0) {
            return bad("trust_region_init must be positive");
        }
        if self.plateau_window == 0 {
            return bad("plateau_window must be at least 1");
        }
        if !(self.tikhonov >= 0.0) {
            return bad("tikhonov must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FidelityTarget,
    FidelityPlateau,
    TrustRegionCollapsed,
    IterationLimit,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FidelityTarget => "fidelity_target",
            Self::FidelityPlateau => "fidelity_plateau",
            Self::TrustRegionCollapsed => "trust_region_collapsed",
            Self::IterationLimit => "iteration_limit",
        }
    }
}

/// One SCP iteration: the objective before the step, the trust region used,
/// and whether the step was taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub objective: f64,
    pub trust_region: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub final_controls: ControlSet,
    /// Average gate fidelity per ensemble sample.
    pub per_sample_fidelities: Vec<f64>,
    /// Minimum of `per_sample_fidelities`.
    pub worst_case_fidelity: f64,
    /// F2 per ensemble sample (the optimized quantity).
    pub objective_fidelities: Vec<f64>,
    pub iterations_used: usize,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_trust_region: f64,
    pub seed: u64,
    pub trace: Vec<TraceEntry>,
    pub config: ScpConfig,
}

impl OptimizationRecord {
    /// Objective after each accepted step, starting with the initial point.
    pub fn accepted_objectives(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .trace
            .windows(2)
            .filter(|w| w[0].accepted)
            .map(|w| w[1].objective)
            .collect();
        if let Some(first) = self.trace.first() {
            out.insert(0, first.objective);
        }
        out
    }
}

/// Physics, filter, robustness ensemble and target gate of one optimization.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub model: TransmonModel,
    pub tm: TransferMatrix,
    pub ensemble: ErrorEnsemble,
    pub target: CMatrix,
}

impl ControlProblem {
    /// Targets X_{π/2}.
    pub fn new(model: TransmonModel, tm: TransferMatrix, ensemble: ErrorEnsemble) -> Self {
        let target = x_half_pi_target(model.num_levels());
        Self { model, tm, ensemble, target }
    }

    pub fn n_controls(&self) -> usize {
        self.tm.n_controls()
    }

    pub fn signal(&self, controls: &ControlSet) -> Result<Signal> {
        self.tm.apply(controls)
    }

    fn forward(&self, controls: &ControlSet) -> Result<Vec<ForwardPass>> {
        let signal = self.signal(controls)?;
        self.ensemble
            .samples()
            .iter()
            .map(|&e| ForwardPass::new(&self.model, &signal, e).map_err(|err| gradient::dump(err, controls)))
            .collect()
    }

    /// F2 for every ensemble sample.
    pub fn objective_fidelities(&self, controls: &ControlSet) -> Result<Vec<f64>> {
        Ok(self.forward(controls)?.iter().map(|p| p.f2(&self.target)).collect())
    }

    /// Average gate fidelity for every ensemble sample.
    pub fn average_fidelities(&self, controls: &ControlSet) -> Result<Vec<f64>> {
        self.forward(controls)?
            .iter()
            .map(|p| fidelity_average_unitary(&p.final_unitary(), &self.target))
            .collect()
    }
}

fn objective(mode: Mode, fs: &[f64]) -> f64 {
    match mode {
        Mode::WorstCase => fs.iter().cloned().fold(f64::INFINITY, f64::min),
        Mode::AverageCase => fs.iter().sum::<f64>() / fs.len() as f64,
    }
}

/// Runs SCP from `initial` until a stopping rule fires.
pub fn run_scp(problem: &ControlProblem, config: &ScpConfig, initial: &ControlSet) -> Result<OptimizationRecord> {
    config.validate()?;
    if initial.len() != problem.n_controls() {
        return Err(Error::Input(format!(
            "expected {} controls per channel, got {}",
            problem.n_controls(),
            initial.len()
        )));
    }
    let report = check_feasible(initial);
    if !report.is_feasible() {
        return Err(Error::Input(format!("initial controls are infeasible: {report:?}")));
    }

    let mode = config.mode;
    let mut controls = initial.clone();
    let mut passes = problem.forward(&controls)?;
    let mut fids: Vec<f64> = passes.iter().map(|p| p.f2(&problem.target)).collect();
    let mut grads: Option<Vec<Vec<f64>>> = None;
    let mut lambda = config.trust_region_init;
    let mut history = vec![objective(mode, &fids)];
    let mut trace = Vec::new();
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut termination = Termination::IterationLimit;

    for _ in 0..config.max_iterations {
        let current = objective(mode, &fids);
        if current >= config.fidelity_target {
            termination = Termination::FidelityTarget;
            break;
        }
        if lambda < config.trust_region_min {
            termination = Termination::TrustRegionCollapsed;
            break;
        }
        let w = config.plateau_window;
        if history.len() > w {
            let gain = (history[history.len() - 1] - history[history.len() - 1 - w]) / w as f64;
            if gain < config.fidelity_diff_tol {
                termination = Termination::FidelityPlateau;
                break;
            }
        }

        let g = match &grads {
            Some(g) => g,
            None => {
                let mut out = Vec::with_capacity(passes.len());
                for p in &passes {
                    let (_, gx, gy) = p.f2_signal_gradient(&problem.target);
                    let g = problem.tm.pullback(&gx, &gy);
                    if g.iter().any(|v| !v.is_finite()) {
                        return Err(gradient::dump(Error::Numerical("non-finite gradient".into()), &controls));
                    }
                    out.push(g);
                }
                grads.insert(out)
            }
        };

        let step = solve_subproblem(&fids, g, lambda, &controls, mode, config.tikhonov);
        let trial = step.ok().and_then(|x| {
            let v: Vec<f64> = controls.to_vector().iter().zip(&x).map(|(a, b)| a + b).collect();
            controls.from_vector(&v).ok()
        });
        let outcome = match trial {
            Some(next) => {
                let next_passes = problem.forward(&next)?;
                let next_fids: Vec<f64> = next_passes.iter().map(|p| p.f2(&problem.target)).collect();
                let ok = match (mode, config.acceptance) {
                    (Mode::WorstCase, Acceptance::EverySample) => {
                        next_fids.iter().zip(&fids).all(|(n, o)| n >= o)
                    }
                    _ => objective(mode, &next_fids) >= current,
                };
                ok.then_some((next, next_passes, next_fids))
            }
            None => None,
        };
        trace.push(TraceEntry {
            objective: current,
            trust_region: lambda,
            accepted: outcome.is_some(),
        });
        match outcome {
            Some((next, next_passes, next_fids)) => {
                debug_assert!(objective(mode, &next_fids) >= current);
                controls = next;
                passes = next_passes;
                fids = next_fids;
                grads = None;
                lambda *= config.incr_factor;
                accepted += 1;
                history.push(objective(mode, &fids));
            }
            None => {
                lambda *= config.decr_factor;
                rejected += 1;
            }
        }
    }
    if termination == Termination::IterationLimit && objective(mode, &fids) >= config.fidelity_target {
        termination = Termination::FidelityTarget;
    }
    trace.push(TraceEntry {
        objective: objective(mode, &fids),
        trust_region: lambda,
        accepted: false,
    });

    let per_sample: Vec<f64> = passes
        .iter()
        .map(|p| fidelity_average_unitary(&p.final_unitary(), &problem.target))
        .collect::<Result<_>>()?;
    Ok(OptimizationRecord {
        worst_case_fidelity: per_sample.iter().cloned().fold(f64::INFINITY, f64::min),
        per_sample_fidelities: per_sample,
        objective_fidelities: fids,
        final_controls: controls,
        iterations_used: accepted + rejected,
        termination,
        accepted_steps: accepted,
        rejected_steps: rejected,
        final_trust_region: lambda,
        seed: config.rng_seed,
        trace,
        config: config.clone(),
    })
}

/// Uniform draw in the amplitude box followed by slew projection, seeded
/// deterministically.
pub fn sample_start(n_controls: usize, slew_limit: f64, seed: u64) -> Result<ControlSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ControlSet::random(n_controls, slew_limit, &mut rng)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultistartResult {
    pub records: Vec<OptimizationRecord>,
    pub best: usize,
}

impl MultistartResult {
    pub fn best(&self) -> &OptimizationRecord {
        &self.records[self.best]
    }
}

/// Independent SCP runs from random starts; start `i` uses seed
/// `rng_seed + i`. Runs in parallel on the current rayon pool; the result
/// does not depend on the thread count.
pub fn multistart(problem: &ControlProblem, config: &ScpConfig, n_starts: usize) -> Result<MultistartResult> {
    multistart_with(problem, config, n_starts, |seed| sample_start(problem.n_controls(), 1.0, seed))
}

/// As [`multistart`] with a caller-supplied start sampler taking the seed.
pub fn multistart_with<F>(
    problem: &ControlProblem,
    config: &ScpConfig,
    n_starts: usize,
    sampler: F,
) -> Result<MultistartResult>
where
    F: Fn(u64) -> Result<ControlSet> + Sync,
{
    if n_starts == 0 {
        return Err(Error::Config("need at least one start".into()));
    }
    config.validate()?;
    let records: Vec<OptimizationRecord> = (0..n_starts as u64)
        .into_par_iter()
        .map(|i| {
            let seed = config.rng_seed.wrapping_add(i);
            let start = sampler(seed)?;
            let cfg = ScpConfig { rng_seed: seed, ..config.clone() };
            run_scp(problem, &cfg, &start)
        })
        .collect::<Result<_>>()?;
    let best = best_index(&records);
    Ok(MultistartResult { records, best })
}

/// Index of the highest worst-case fidelity; the earliest wins ties.
fn best_index(records: &[OptimizationRecord]) -> usize {
    let mut best = 0;
    for (i, r) in records.iter().enumerate() {
        if r.worst_case_fidelity > records[best].worst_case_fidelity {
            best = i;
        }
    }
    best
}
