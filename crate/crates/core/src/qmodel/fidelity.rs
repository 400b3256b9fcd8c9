use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;

use crate::{CMatrix, Error, Result, C64};

/// X_{π/2} on the qubit block, identity on every higher level.
pub fn x_half_pi_target(n: usize) -> CMatrix {
    let mut u = CMatrix::identity(n, n);
    let c = C64::new(FRAC_1_SQRT_2, 0.0);
    let s = C64::new(0.0, -FRAC_1_SQRT_2);
    u[(0, 0)] = c;
    u[(1, 1)] = c;
    u[(0, 1)] = s;
    u[(1, 0)] = s;
    u
}

/// The six Bloch-sphere poles embedded in an `n`-level space, ordered
/// `+z, −z, +x, −x, +y, −y`.
pub fn cardinal_states(n: usize) -> Vec<DVector<C64>> {
    let h = FRAC_1_SQRT_2;
    let qubit = [
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        (C64::new(h, 0.0), C64::new(h, 0.0)),
        (C64::new(h, 0.0), C64::new(-h, 0.0)),
        (C64::new(h, 0.0), C64::new(0.0, h)),
        (C64::new(h, 0.0), C64::new(0.0, -h)),
    ];
    qubit
        .iter()
        .map(|&(a, b)| {
            let mut v = DVector::zeros(n);
            v[0] = a;
            v[1] = b;
            v
        })
        .collect()
}

fn check_square_pair(u: &CMatrix, target: &CMatrix) -> Result<()> {
    if !u.is_square() || u.shape() != target.shape() {
        return Err(Error::Input(format!(
            "dimension mismatch: {:?} vs {:?}",
            u.shape(),
            target.shape()
        )));
    }
    Ok(())
}

/// `|tr(U†U_T)|²/n²`.
pub fn fidelity_f1(u: &CMatrix, target: &CMatrix) -> Result<f64> {
    check_square_pair(u, target)?;
    let n = u.nrows() as f64;
    let tr: C64 = (0..u.nrows())
        .map(|j| (0..u.nrows()).map(|k| u[(k, j)].conj() * target[(k, j)]).sum::<C64>())
        .sum();
    Ok(tr.norm_sqr() / (n * n))
}

/// Qubit-subspace gate fidelity `|Σ_{j=0,1}(U†U_T)_jj|²/4`.
pub fn fidelity_f2(u: &CMatrix, target: &CMatrix) -> Result<f64> {
    check_square_pair(u, target)?;
    if u.nrows() < 2 {
        return Err(Error::Input("F2 needs at least two levels".into()));
    }
    let n = u.nrows();
    let tr: C64 = (0..2)
        .map(|j| (0..n).map(|k| u[(k, j)].conj() * target[(k, j)]).sum::<C64>())
        .sum();
    Ok(tr.norm_sqr() / 4.0)
}

/// Average fidelity from the six evolved poles (in [`cardinal_states`] order).
pub fn fidelity_average(final_states: &[CMatrix], target: &CMatrix) -> Result<f64> {
    if final_states.len() != 6 {
        return Err(Error::Input(format!(
            "need the six cardinal states, got {}",
            final_states.len()
        )));
    }
    let n = target.nrows();
    let mut total = 0.0;
    for (psi, rho) in cardinal_states(n).iter().zip(final_states) {
        if rho.shape() != (n, n) {
            return Err(Error::Input("density matrix dimension mismatch".into()));
        }
        let ideal = target * psi;
        // tr(|φ⟩⟨φ| ρ) = ⟨φ|ρ|φ⟩
        total += (ideal.adjoint() * rho * &ideal)[(0, 0)].re;
    }
    Ok(total / 6.0)
}

/// Average fidelity of a unitary evolution, applying `u` to the six poles.
pub fn fidelity_average_unitary(u: &CMatrix, target: &CMatrix) -> Result<f64> {
    check_square_pair(u, target)?;
    let m = target.adjoint() * u;
    let total: f64 = cardinal_states(u.nrows())
        .iter()
        .map(|psi| (psi.adjoint() * &m * psi)[(0, 0)].norm_sqr())
        .sum();
    Ok(total / 6.0)
}

/// Closed-form qubit average fidelity `(|tr(V†V_T)|² + 2)/6`.
pub fn qubit_average_fidelity(v: &CMatrix, target: &CMatrix) -> Result<f64> {
    check_square_pair(v, target)?;
    if v.nrows() != 2 {
        return Err(Error::Input("closed form holds for a qubit only".into()));
    }
    let tr = (v.adjoint() * target).trace();
    Ok((tr.norm_sqr() + 2.0) / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodel::propagate::piece_propagator;

    fn diag3(phi: f64) -> CMatrix {
        let mut u = CMatrix::identity(3, 3);
        u[(2, 2)] = C64::from_polar(1.0, phi);
        u
    }

    #[test]
    fn identical_unitaries_have_unit_fidelity() {
        let t = x_half_pi_target(3);
        assert!((fidelity_f1(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity_f2(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity_average_unitary(&t, &t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn third_level_phase_costs_f1_not_f2() {
        // perfect X on the qubit, phase π on level 2
        let mut x = CMatrix::zeros(3, 3);
        x[(0, 1)] = C64::new(1.0, 0.0);
        x[(1, 0)] = C64::new(1.0, 0.0);
        x[(2, 2)] = C64::new(1.0, 0.0);
        let mut u = x.clone();
        u[(2, 2)] = C64::new(-1.0, 0.0);
        assert!((fidelity_f1(&u, &x).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!((fidelity_f2(&u, &x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f1_phase_grid() {
        for k in 0..=24 {
            let phi = -std::f64::consts::PI + k as f64 * std::f64::consts::PI / 12.0;
            let expected = (C64::new(2.0, 0.0) + C64::from_polar(1.0, phi)).norm_sqr() / 9.0;
            let f = fidelity_f1(&CMatrix::identity(3, 3), &diag3(phi)).unwrap();
            assert!((f - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn f2_is_blind_to_leakage_level_phase() {
        let t = x_half_pi_target(3);
        for k in 0..16 {
            let phi = k as f64 * 0.4;
            let f = fidelity_f2(&(&t * diag3(phi)), &t).unwrap();
            assert!((f - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_vs_x_half_pi() {
        let id = CMatrix::identity(3, 3);
        let t = x_half_pi_target(3);
        assert!((fidelity_f2(&id, &t).unwrap() - 0.5).abs() < 1e-15);
        assert!((fidelity_average_unitary(&id, &t).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn full_leakage_gives_zero_f2() {
        // four levels: |0⟩ → |2⟩ and |1⟩ → |3⟩
        let mut u = CMatrix::zeros(4, 4);
        u[(2, 0)] = C64::new(1.0, 0.0);
        u[(3, 1)] = C64::new(1.0, 0.0);
        u[(0, 2)] = C64::new(1.0, 0.0);
        u[(1, 3)] = C64::new(1.0, 0.0);
        let f = fidelity_f2(&u, &CMatrix::identity(4, 4)).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn dimension_errors() {
        let a = CMatrix::identity(3, 3);
        let b = CMatrix::identity(2, 2);
        assert!(fidelity_f1(&a, &b).is_err());
        assert!(fidelity_f2(&CMatrix::identity(1, 1), &CMatrix::identity(1, 1)).is_err());
        assert!(fidelity_average(&vec![a.clone(); 5], &a).is_err());
    }

    #[test]
    fn pole_average_matches_qubit_closed_form() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let t = x_half_pi_target(2);
        for _ in 0..50 {
            let mut h = CMatrix::zeros(2, 2);
            h[(0, 0)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
            h[(1, 1)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
            let off = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h[(0, 1)] = off;
            h[(1, 0)] = off.conj();
            let v = piece_propagator(&h, 1.7);
            let rhos: Vec<CMatrix> = cardinal_states(2)
                .iter()
                .map(|psi| {
                    let out = &v * psi;
                    &out * out.adjoint()
                })
                .collect();
            let fa = fidelity_average(&rhos, &t).unwrap();
            let fu = fidelity_average_unitary(&v, &t).unwrap();
            let fc = qubit_average_fidelity(&v, &t).unwrap();
            assert!((fa - fc).abs() < 1e-10 && (fu - fc).abs() < 1e-10);
        }
    }
}
