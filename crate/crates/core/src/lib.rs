//! Pseudospectral simulation and analysis of generalized electron MHD,
//!
//! `B_t + μ Λ^κ B + ∇×((∇×Λ^{-s} B) × B) = 0`, `∇·B = 0`,
//!
//! on the periodic box, together with the Littlewood-Paley, Gevrey and
//! decay diagnostics used to check its analytical properties.

pub mod checkpoint;
pub mod diagnostics;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod init;
pub mod lp;
pub mod model;
pub mod numerics;
pub mod spectral;
pub mod solver;

#[cfg(test)]
pub(crate) mod testing;

pub use error::{EmhdError, Result};
pub use field::{
    PhysicalScalarField, PhysicalVectorField, SpectralField, SpectralScalarField,
    SpectralVectorField,
};
pub use grid::Grid3;
