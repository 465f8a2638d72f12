//! Simulation of a cavity mode coupled to a mechanical oscillator through
//! the square of its displacement.
//!
//! The composite basis is mechanics-major: `|k>_m |n>_c` has index
//! `k * n_cav + n`. Energies are in units of the mechanical quantum.

pub mod convergence;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod observables;
pub mod sparse;

pub use error::{Error, Result};
pub use hilbert::{
    CMatrix, CVector, DensityMatrix, HilbertSpec, Operator, StateVector, C64,
};
pub use model::{DressedLabel, ModelParams};
