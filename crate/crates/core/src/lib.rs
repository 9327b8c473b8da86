//! Time-harmonic electromagnetic scattering by a sphere carrying a generalized
//! impedance boundary condition `ν × E + Z H_T = f`.

pub mod cli;
pub mod config;
pub mod error;
pub mod meshio;
pub mod mie;
pub mod output;
pub mod quadrature;
pub mod scatter;
pub mod special;
pub mod spectral;
pub mod surface;
pub mod validation;
pub mod volume;
pub mod vec3;

pub use error::{GibcError, Result};
