//! Robust optimal control of band-limited pulses for a driven transmon.
//!
//! The crate is organised bottom-up:
//!
//! * [`qmodel`]: rotating-frame Hamiltonian, unitary and Lindblad propagation,
//!   gate fidelities.
//! * [`signal`]: control variables, the Gaussian transfer matrix and the
//!   amplitude/slew feasibility rules.
//! * [`scp`]: exact gradients through the filter, the max-min trust-region
//!   subproblem and the sequential convex programming loop.
//! * [`baselines`]: DRAG, BB1 and closed-form two-level references.
//! * [`experiments`]: campaigns built on the above (error sweeps, competing
//!   losses, difficulty statistics, perturbation cycles, randomized
//!   benchmarking and phase-error amplification).
//!
//! Frequencies are angular (rad/s) and times are seconds throughout the
//! library; [`units`] converts from the ns / MHz values used in configs.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod lp;
pub mod qmodel;
pub mod scp;
pub mod signal;
pub mod units;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
