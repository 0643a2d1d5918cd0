//! Experiment drivers: presets, reference solutions, convergence tables,
//! slope studies, energy traces and snapshots.

pub mod convergence;
pub mod energy;
pub mod presets;
pub mod reference;
pub mod slopes;
pub mod snapshot;

pub use convergence::{convergence_study, slope_study, ConvergenceRow, ConvergenceStudy, RunSummary};
pub use energy::{energy_trace, EnergyTrace, EnergyViolation};
pub use presets::{preset, preset_names, ExperimentPreset, InitialCondition, DEFAULT_SEED};
pub use reference::{reference_gate, reference_solution};
pub use slopes::{least_squares_slope, successive_order, SlopeQuantity, SlopeStudy};
pub use snapshot::{display_field, phase_separation, SnapshotRecord};
