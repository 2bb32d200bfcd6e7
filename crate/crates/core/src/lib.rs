//! Stochastic high-field BGK relaxation solver and hydrodynamic-limit
//! verification harness on the one-dimensional torus.

pub mod coeffs;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kinetic;
pub mod macroscopic;
pub mod maxwell;
pub mod problem;
pub mod quadrature;
pub mod wiener;

pub use error::{Error, Result};
