//! Fermionic Fock sectors of fixed fermion number, the truncated boson
//! factor and operator assembly.
//!
//! Single-particle modes are ordered lexicographically by (species, band,
//! spin, momentum); basis states are `a_{i_1}^dagger ... a_{i_n}^dagger |0_D>`
//! with ascending indices, stored as `u128` bitmasks.

pub mod basis;
pub mod operators;
pub mod sector;
pub mod sparse;
pub mod state;

pub use basis::{Band, ModeBasis, SingleParticleIndex};
pub use operators::{
    apply_one_body, build_boson_hamiltonian, build_free_hamiltonian, build_hamiltonian, build_interaction,
    build_one_body_operator, charge_operator, charge_weights, density_weights, fermion_number_operator,
    grid_point_weights, one_body_fermion, region_weights, sea_second_moment_terms, slater_one_body_mean,
    slater_one_body_variance, InteractionKernel, KernelKind, KernelQuadrature, Region, SpatialProfile,
};
pub use sector::{
    annihilation_matrix, apply_ladder_combination, creation_matrix, enumerate_sector, full_fock_creation,
    BosonSpace, FockSector, HilbertSpace, MAX_SECTOR_STATES,
};
pub use sparse::{commutator_norm, OperatorMatrix};
pub use state::{dirac_sea_state, expectation, single_particle_state, variance, QuantumState};
