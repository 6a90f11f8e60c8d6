//! Non-parametric inference of a spherical mass density and an isotropic
//! phase-space distribution from projected positions and line-of-sight
//! velocities.
//!
//! The numerical core ([`model`], [`projection`], [`binning`]) is generic over
//! the scalar type; the aliases below fix it to `f64`, which is what the
//! sampler and the pipeline use.

pub mod binning;
pub mod catalog;
pub mod config;
pub mod error;
pub mod inference;
pub mod model;
pub mod num;
pub mod pipeline;
pub mod projection;
pub mod quadrature;
pub mod report;
pub mod synthetic;

pub use error::{Error, Result};

pub type RadialGrid64 = model::RadialGrid<f64>;
pub type EnergyGrid64 = model::EnergyGrid<f64>;
pub type DensityVector64 = model::DensityVector<f64>;
pub type DfVector64 = model::DfVector<f64>;
pub type PotentialProfile64 = model::PotentialProfile<f64>;
pub type PhasePoint64 = model::PhasePoint<f64>;
pub type Observation64 = projection::Observation<f64>;
pub type ObservationSet64 = projection::ObservationSet<f64>;
pub type Projector64 = projection::Projector<f64>;
pub type BinningResult64 = binning::BinningResult<f64>;
