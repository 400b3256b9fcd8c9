//! Random feasible perturbations and perturb/re-optimize cycles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scp::{run_scp, ControlProblem, OptimizationRecord, ScpConfig};
use crate::signal::{check_feasible, ControlSet, Signal, MAX_AMPLITUDE};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Largest change of one control variable per perturbation.
    pub magnitude: f64,
    pub cycles: usize,
    /// Perturb until the worst-case infidelity has moved by this factor
    /// (in either direction) from the unperturbed value.
    pub target_inflation: f64,
    /// Cap on repeated perturbations before re-optimizing anyway.
    pub max_rounds: usize,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            magnitude: 0.01 * 2.0 * MAX_AMPLITUDE,
            cycles: 3,
            target_inflation: 10.0,
            max_rounds: 500,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.magnitude > 0.0) || !(self.target_inflation > 1.0) || self.max_rounds == 0 {
            return Err(Error::Config(format!("invalid perturbation settings {self:?}")));
        }
        Ok(())
    }
}

/// One uniform draw per variable inside its feasible interval, left to
/// right so each slew bound sees the already perturbed neighbour. If the
/// `±magnitude` box misses the feasible interval, the feasible point
/// closest to no change is used.
pub fn perturb<R: Rng + ?Sized>(controls: &ControlSet, magnitude: f64, rng: &mut R) -> ControlSet {
    let s = controls.slew_limit;
    let mut out = controls.clone();
    for c in [&mut out.cx, &mut out.cy] {
        for k in 0..c.len() {
            let mut lo = -MAX_AMPLITUDE - c[k];
            let mut hi = MAX_AMPLITUDE - c[k];
            if k > 0 {
                lo = lo.max(c[k - 1] - s - c[k]);
                hi = hi.min(c[k - 1] + s - c[k]);
            }
            let (blo, bhi) = (lo.max(-magnitude), hi.min(magnitude));
            let p = if blo < bhi {
                rng.random_range(blo..=bhi)
            } else {
                0f64.clamp(lo, hi)
            };
            c[k] += p;
        }
    }
    out
}

/// Sum over samples of `|ΔE^x| + |ΔE^y|`.
pub fn manhattan_distance(a: &Signal, b: &Signal) -> f64 {
    a.ex()
        .iter()
        .zip(b.ex())
        .chain(a.ey().iter().zip(b.ey()))
        .map(|(p, q)| (p - q).abs())
        .sum()
}

/// Worst-case average-gate infidelity of `controls` on the ensemble.
fn worst_infidelity(problem: &ControlProblem, controls: &ControlSet) -> Result<f64> {
    let f = problem.average_fidelities(controls)?;
    Ok(1.0 - f.into_iter().fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationCycle {
    pub rounds: usize,
    pub perturbed_infidelity: f64,
    pub reoptimized_infidelity: f64,
    /// Manhattan distance between the signals before perturbing and after
    /// re-optimizing.
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    pub initial_infidelity: f64,
    pub best: OptimizationRecord,
    pub cycles: Vec<PerturbationCycle>,
}

impl PerturbationOutcome {
    pub fn best_infidelity(&self) -> f64 {
        1.0 - self.best.worst_case_fidelity
    }

    /// `initial / best` worst-case infidelity.
    pub fn improvement(&self) -> f64 {
        self.initial_infidelity / self.best_infidelity().max(f64::MIN_POSITIVE)
    }
}

/// Perturbs the current best, re-optimizes, and keeps whichever is better,
/// `pconfig.cycles` times.
pub fn perturb_reoptimize(
    problem: &ControlProblem,
    scp: &ScpConfig,
    start: &OptimizationRecord,
    pconfig: &PerturbationConfig,
    seed: u64,
) -> Result<PerturbationOutcome> {
    pconfig.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = start.clone();
    let initial_infidelity = 1.0 - start.worst_case_fidelity;
    let mut cycles = Vec::with_capacity(pconfig.cycles);
    for _ in 0..pconfig.cycles {
        let base = best.final_controls.clone();
        let base_inf = (1.0 - best.worst_case_fidelity).max(f64::MIN_POSITIVE);
        let mut trial = base.clone();
        let mut rounds = 0;
        let mut inf = base_inf;
        while rounds < pconfig.max_rounds {
            trial = perturb(&trial, pconfig.magnitude, &mut rng);
            rounds += 1;
            inf = worst_infidelity(problem, &trial)?;
            if (inf.max(f64::MIN_POSITIVE) / base_inf).log10().abs() >= pconfig.target_inflation.log10() {
                break;
            }
        }
        debug_assert!(check_feasible(&trial).is_feasible());
        let record = run_scp(problem, scp, &trial)?;
        let distance = manhattan_distance(&problem.signal(&base)?, &problem.signal(&record.final_controls)?);
        cycles.push(PerturbationCycle {
            rounds,
            perturbed_infidelity: inf,
            reoptimized_infidelity: 1.0 - record.worst_case_fidelity,
            distance,
        });
        if record.worst_case_fidelity > best.worst_case_fidelity {
            best = record;
        }
    }
    Ok(PerturbationOutcome {
        initial_infidelity,
        best,
        cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodel::{ErrorEnsemble, TransmonModel};
    use crate::scp::sample_start;
    use crate::signal::build_transfer_matrix;
    use crate::units::{mhz_to_rad, ns};

    #[test]
    fn perturbations_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = sample_start(25, 1.0, 4).unwrap();
        // push some variables onto the bounds
        c.cx[3] = MAX_AMPLITUDE;
        c.cx[4] = MAX_AMPLITUDE - 1.0;
        c.cy[0] = -MAX_AMPLITUDE;
        assert!(check_feasible(&c).is_feasible());
        for k in 0..10_000 {
            let mag = if k % 2 == 0 { 0.014 } else { 0.5 };
            let p = perturb(&c, mag, &mut rng);
            assert!(check_feasible(&p).is_feasible());
            for (a, b) in p.to_vector().iter().zip(c.to_vector()) {
                assert!((a - b).abs() <= mag + 1e-15);
            }
        }
    }

    #[test]
    fn tight_slew_still_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = ControlSet::with_slew(vec![0.0, 0.01, 0.02, 0.01], vec![0.0; 4], 0.01).unwrap();
        for _ in 0..1000 {
            let p = perturb(&c, 0.3, &mut rng);
            assert!(check_feasible(&p).is_feasible());
        }
    }

    #[test]
    fn distance_is_a_manhattan_norm() {
        let a = Signal::new(1.0, vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let b = Signal::new(1.0, vec![1.0, -1.0], vec![0.5, 0.0]).unwrap();
        assert_eq!(manhattan_distance(&a, &b), 3.5);
        assert_eq!(manhattan_distance(&a, &a), 0.0);
    }

    #[test]
    fn cycles_never_lose_the_best() {
        let tm = build_transfer_matrix(10, ns(60.0), mhz_to_rad(24.0), 4).unwrap();
        let p = ControlProblem::new(TransmonModel::reference(), tm, ErrorEnsemble::amplitude_triple(0.05).unwrap());
        let scp = ScpConfig { max_iterations: 40, ..ScpConfig::default() };
        let start = run_scp(&p, &scp, &sample_start(10, 1.0, 0).unwrap()).unwrap();
        let out = perturb_reoptimize(&p, &scp, &start, &PerturbationConfig { cycles: 2, ..Default::default() }, 9).unwrap();
        assert_eq!(out.cycles.len(), 2);
        assert!(out.best.worst_case_fidelity >= start.worst_case_fidelity);
        assert!(out.cycles.iter().all(|c| c.rounds >= 1 && c.distance > 0.0));
    }
}
