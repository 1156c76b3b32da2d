//! Steady-state transport through a finite one-dimensional tight-binding sample
//! coupled to two thermal reservoirs.

pub mod config;
pub mod error;
pub mod fluxes;
pub mod green;
pub mod leads;
pub mod model;
pub mod output;
pub mod potentials;
pub mod quadrature;
pub mod scan;
pub mod scattering;
pub mod stats;
pub mod transfer;
mod tridiagonal;
pub mod validate;

pub use error::{Error, Result};
