//! Numerical laboratory for the Dirac-sea pilot-wave model of quantum field
//! theory on a periodic box with a momentum cut-off.
//!
//! The crate is organised bottom-up:
//!
//! * [`modes`]: momentum lattice, Dirac matrices, plane-wave spinors and the
//!   band-limited delta function.
//! * [`fock`]: fixed fermion-number sectors, sparse operators, Hamiltonians
//!   and one-body observables such as the fermion number in a region.
//! * [`position`]: position-space amplitudes, the beable density, the guidance
//!   velocity, the cut-off source term `g` and the correction velocity.
//! * [`dynamics`]: state evolution, trajectory integration, the minimal jump
//!   process, ensembles and the measurement scenario.
//! * [`fluct`]: vacuum and macroscopic fermion-number fluctuation quadratures
//!   and the distinguishability radius.
//! * [`io`]: checkpoint, trajectory and grid-field file formats.
//! * [`checks`]: the invariant suite behind `diracsea check`.
//!
//! Data-parallel loops go through [`exec::Exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

pub mod checks;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fluct;
pub mod fock;
pub mod io;
pub mod modes;
pub mod position;

pub use error::{Error, Result};
pub use exec::Exec;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
