//! Ion-chain equilibria, normal modes and mode-derived quantities.

mod equilibrium;
mod modes;
mod potential;
mod scan;
mod shifts;

pub use equilibrium::{
    default_seed, find_equilibrium, find_equilibrium_with, newton_minimize, ChainConfiguration, SolverOptions,
};
pub use modes::{
    extract_mode_frequency, ground_state_extent, lamb_dicke, modes_from_hessian, normal_modes, NormalModeSet,
};
pub use potential::ChainPotential;
pub use scan::{
    compensate_stray_field, field_for_frequency_shift, scan_field, CompensationResult, ModeScanPoint, ModeScanResult,
};
pub use shifts::{
    is_out_of_phase, order_dependent_shift, out_of_phase_mode, radiation_pressure_displacement, OrderShift,
    RadiationPressureShift,
};
