//! The 24 single-qubit Cliffords as words over `{Z_{±π}, Z_{±π/2}, X_{π/2}}`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::qmodel::x_half_pi_target;
use crate::C64;

type U2 = Matrix2<C64>;

/// One generator. `Z` rotations are virtual; `X90` is the physical pulse.
/// `Idle` only appears as the one-gate word of the identity element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    X90,
    Z(ZAngle),
    Idle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZAngle {
    Plus90,
    Minus90,
    Plus180,
    Minus180,
}

impl ZAngle {
    pub const ALL: [ZAngle; 4] = [ZAngle::Plus90, ZAngle::Minus90, ZAngle::Plus180, ZAngle::Minus180];

    pub fn radians(self) -> f64 {
        match self {
            ZAngle::Plus90 => FRAC_PI_2,
            ZAngle::Minus90 => -FRAC_PI_2,
            ZAngle::Plus180 => PI,
            ZAngle::Minus180 => -PI,
        }
    }
}

impl Gate {
    pub fn is_physical(self) -> bool {
        matches!(self, Gate::X90)
    }

    /// Ideal qubit unitary.
    pub fn unitary(self) -> U2 {
        match self {
            Gate::X90 => x_half_pi_target(2).fixed_view::<2, 2>(0, 0).into_owned(),
            Gate::Z(a) => z_rotation(a.radians()),
            Gate::Idle => U2::identity(),
        }
    }
}

/// `exp(−iθσz/2)`.
pub fn z_rotation(theta: f64) -> U2 {
    U2::new(
        C64::from_polar(1.0, -theta / 2.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::from_polar(1.0, theta / 2.0),
    )
}

/// Product of a time-ordered word (first gate applied first).
pub fn word_unitary(word: &[Gate]) -> U2 {
    word.iter().fold(U2::identity(), |acc, g| g.unitary() * acc)
}

/// Whether `a = e^{iφ} b` for some φ.
pub fn equal_up_to_phase(a: &U2, b: &U2, tol: f64) -> bool {
    let overlap = (a.adjoint() * b).trace();
    (overlap.norm() - 2.0).abs() <= tol
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CliffordElement {
    pub word: Vec<Gate>,
    #[serde(skip)]
    pub unitary: U2,
}

impl CliffordElement {
    pub fn physical_gates(&self) -> usize {
        self.word.iter().filter(|g| g.is_physical()).count()
    }

    pub fn total_gates(&self) -> usize {
        self.word.len()
    }
}

/// Each element keeps the word with the fewest physical gates, then the
/// fewest gates overall. The identity is the single `Idle` gate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CliffordDecomposition {
    pub elements: Vec<CliffordElement>,
}

impl CliffordDecomposition {
    pub fn build() -> Self {
        let mut alphabet = vec![Gate::X90];
        alphabet.extend(ZAngle::ALL.iter().map(|&a| Gate::Z(a)));
        let mut elements = vec![CliffordElement {
            word: vec![Gate::Idle],
            unitary: U2::identity(),
        }];
        // breadth-first over word length; the group closes at length 5
        let mut frontier: Vec<Vec<Gate>> = vec![vec![]];
        for _ in 0..5 {
            let mut next = Vec::new();
            for w in &frontier {
                for &g in &alphabet {
                    let mut word = w.clone();
                    word.push(g);
                    next.push(word);
                }
            }
            for word in &next {
                let u = word_unitary(word);
                let cost = |w: &[Gate]| (w.iter().filter(|g| g.is_physical()).count(), w.len());
                match elements.iter_mut().find(|e| equal_up_to_phase(&e.unitary, &u, 1e-10)) {
                    Some(e) if e.word != [Gate::Idle] && cost(word) < cost(&e.word) => e.word = word.clone(),
                    Some(_) => {}
                    None => elements.push(CliffordElement { word: word.clone(), unitary: u }),
                }
            }
            frontier = next;
        }
        Self { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn average_physical_gates(&self) -> f64 {
        self.elements.iter().map(|e| e.physical_gates()).sum::<usize>() as f64 / self.len() as f64
    }

    pub fn average_total_gates(&self) -> f64 {
        self.elements.iter().map(|e| e.total_gates()).sum::<usize>() as f64 / self.len() as f64
    }

    /// Index of the element equal to `u` up to phase.
    pub fn find(&self, u: &U2) -> Option<usize> {
        self.elements.iter().position(|e| equal_up_to_phase(&e.unitary, u, 1e-8))
    }

    /// Index of the element undoing the ideal product of `indices`.
    pub fn inverse_of_sequence(&self, indices: &[usize]) -> Option<usize> {
        let total = indices.iter().fold(U2::identity(), |acc, &i| self.elements[i].unitary * acc);
        self.find(&total.adjoint())
    }
}
