//! Quantum-logic spectroscopy on a joint internal ⊗ motional state: exact
//! pulse propagation, stochastic decay/cooling/detection channels and the
//! readout and preparation protocols built on them.

pub mod channels;
pub mod protocols;
pub mod pulse;
pub mod state;

pub use channels::{
    bayes_update, bayes_update_counts, cool_to_ground, detect, nbar_from_ground_probability, poisson_pmf,
    spontaneous_decay, thermal_distribution, DetectionModel,
};
pub use protocols::{
    comb_raman_frequencies, dicke_mean_fidelity, dipole_force_amplitude, dipole_force_displacement, ideal_dicke_state,
    pumping_ladder_monte_carlo, qnd_monte_carlo, run_dicke_preparation, run_pumping_ladder, run_qnd_readout,
    run_schmidt_readout, run_trajectories, schmidt_monte_carlo, trajectory_rng, DickeConfig, PumpingConfig, QndConfig,
    QndMapping, QndSummary, ReadoutRecord, SchmidtConfig, SchmidtOutcome, SchmidtSummary,
};
pub use pulse::{
    apply_pulse, displacement_element, hamiltonian_entries, required_n_max, CompiledPulse, Pulse, PulseKind,
    PulseTarget,
};
pub use state::{DecayChannel, InternalLevelSet, JointState, DEFAULT_N_MAX};
