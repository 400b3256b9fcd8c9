//! Reference pulses: DRAG, BB1 composite sequences and the closed-form
//! two-level fidelity.

mod analytic;
mod bb1;
mod drag;

pub use analytic::{
    amplitude_expansion, analytic_qubit_fidelity, crossover_detuning, detuning_expansion,
    model_shift_for,
};
pub use bb1::{bb1_min_duration, bb1_phases, make_bb1, Bb1Sequence};
pub use drag::{
    drag_beta, drag_value, make_drag, make_drag_with, polish_nonrobust, project_to_controls,
    signal_energy, DragSpec,
};
