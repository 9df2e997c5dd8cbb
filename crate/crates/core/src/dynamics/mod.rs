//! Time evolution of states and beables: unitary propagation, guidance
//! integration, jump processes and ensemble studies.

pub mod ensemble;
pub mod evolution;
pub mod integrate;
pub mod jump;
pub mod lattice;
pub mod measurement;

pub use ensemble::{
    run_ensemble, sample_configurations, total_variation, EnsembleMode, EnsembleSpec, EquilibriumReport,
    InitialDistribution, Interaction, TrajectorySet,
};
pub use evolution::{evolve_state, Evolution, EvolutionMethod, EvolutionPlan, Frozen, Reversed, StateSchedule};
pub use integrate::{integrate_trajectory, Flow, Frame, IntegratorSpec, JumpEvent, Trajectory};
pub use jump::{HybridJumps, LatticeModel, MAX_RATE_STEP};
pub use lattice::{refinement_study, RefinementLevel, RefinementReport, RefinementSpec};
pub use measurement::{measurement_scenario, packet_state, BranchReport, MeasurementSpec};
