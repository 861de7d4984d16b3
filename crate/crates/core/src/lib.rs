//! Simulation and verification toolkit for quantum batteries.
//!
//! Builds battery and charger Hamiltonians, evolves states exactly by spectral
//! propagation, measures stored energy, power, energy variance and the Fisher
//! information of the energy distribution, and checks the power, capacity and
//! entanglement bounds those quantities obey.

pub mod bounds;
pub mod capacity;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod jw;
pub mod models;
pub mod numerics;
pub mod observables;

pub use error::{Error, Result};
pub use models::{Family, Model, ModelSpec};
pub use numerics::{BasisTag, DensityMatrix, HermitianOperator, LevelStructure, StateVector};
