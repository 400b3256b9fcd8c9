//! Campaigns built on the optimizer, and simulated calibration and
//! benchmarking sequences.

pub mod campaigns;
pub mod clifford;
pub mod difficulty;
pub mod perturb;
pub mod rb;
pub mod transfer_map;

pub use clifford::{CliffordDecomposition, CliffordElement, Gate, ZAngle};
pub use rb::{
    fit_decay, simulate_ape, simulate_rb, virtual_z, ApeResult, DecayFit, ErrorInjection, GateSet, RbConfig, RbResult,
};
pub use difficulty::{difficulty_q, difficulty_stats, DifficultyRow};
pub use perturb::{
    manhattan_distance, perturb, perturb_reoptimize, PerturbationConfig, PerturbationCycle, PerturbationOutcome,
};
pub use transfer_map::AmplitudeTransferMap;
pub use campaigns::{
    best_pulse, box_infidelity, compare_objectives, competing_loss_map, difficulty_campaign, drive_angle,
    fit_sqrt_boundary, heatmap_time_controls, max_leakage_over, robust_freq_campaign, robust_score, sweep_error, Boundary,
    CampaignSettings, CompetingCell, CompetingLossResult, FrequencyRow, HeatmapCell, LibraryPulse, ObjectiveComparison, RobustScore,
    ObjectiveRun, OptimizedPulse, SweepResult, SweepRow,
};
