//! Dynamical phase transitions of quenched SSH chains.
//!
//! A state prepared on the edge of a topological chain is suddenly evolved
//! under a new chain. Chiral symmetry pairs every eigenvalue `+E` with `−E`
//! and the edge state populates both partners equally, so the Loschmidt
//! amplitude is real and its phase is purely geometric: it sits at `0` or `π`
//! and jumps by `π` exactly where the amplitude crosses zero.
//!
//! Modules:
//! - [`lattice`]: chains, disorder, chiral operator, states, winding number
//! - [`spectral`]: tridiagonal eigensolver, chiral pairing, occupations, spectra
//! - [`quench`]: Loschmidt amplitude, rate function, geometric phase, critical times
//! - [`phasemap`]: dynamical phase boundary search and parameter scans
//! - [`mech`]: carrier-level integration of parametrically coupled beams and
//!   envelope demodulation
//! - [`datasets`]: device tables and fixed disorder realizations

pub mod datasets;
pub mod error;
pub mod lattice;
pub mod mech;
pub mod phasemap;
pub mod quench;
pub mod spectral;

pub use error::{Error, Result};
