//! How often independent starts land close to the best solution found.

use serde::{Deserialize, Serialize};

/// Fraction of `fidelities` whose log-infidelity lies within `d` decades of
/// the best one: `Pr(log₁₀(1−F) − log₁₀(1−F_max) < d)`.
pub fn difficulty_q(fidelities: &[f64], d: f64) -> f64 {
    if fidelities.is_empty() {
        return f64::NAN;
    }
    let floor = f64::MIN_POSITIVE;
    let best = fidelities.iter().map(|f| (1.0 - f).max(floor)).fold(f64::INFINITY, f64::min);
    let hits = fidelities
        .iter()
        .filter(|f| ((1.0 - *f).max(floor)).log10() - best.log10() < d)
        .count();
    hits as f64 / fidelities.len() as f64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DifficultyRow {
    /// The condition (error size or gate time) the records belong to.
    pub condition: f64,
    pub n_records: usize,
    pub best_infidelity: f64,
    /// `(d, Q)` pairs.
    pub q: Vec<(f64, f64)>,
}

/// One row per condition, each with `Q` at every level in `d_levels`.
pub fn difficulty_stats(groups: &[(f64, Vec<f64>)], d_levels: &[f64]) -> Vec<DifficultyRow> {
    groups
        .iter()
        .map(|(cond, fids)| DifficultyRow {
            condition: *cond,
            n_records: fids.len(),
            best_infidelity: fids.iter().map(|f| 1.0 - f).fold(f64::INFINITY, f64::min),
            q: d_levels.iter().map(|&d| (d, difficulty_q(fids, d))).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_within_decades() {
        let f = [1.0 - 1e-6, 1.0 - 2e-6, 1.0 - 1e-5, 1.0 - 1e-3];
        assert_eq!(difficulty_q(&f, 0.5), 0.5);
        assert_eq!(difficulty_q(&f, 1.5), 0.75);
        assert_eq!(difficulty_q(&f, f64::INFINITY), 1.0);
        // the best record is always counted
        assert_eq!(difficulty_q(&f, 1e-9), 0.25);
    }

    proptest::proptest! {
        #[test]
        fn q_is_monotone_in_d(inf in proptest::collection::vec(1e-9f64..0.5, 1..40), d1 in 0.0f64..3.0, d2 in 0.0f64..3.0) {
            let f: Vec<f64> = inf.iter().map(|i| 1.0 - i).collect();
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            proptest::prop_assert!(difficulty_q(&f, lo) <= difficulty_q(&f, hi));
            proptest::prop_assert!(difficulty_q(&f, hi) <= 1.0);
        }
    }
}
