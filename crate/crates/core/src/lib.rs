//! Discontinuous Galerkin spectral elements for coupled elastic and acoustic
//! waves on hexahedral meshes.

pub mod analytic;
pub mod assembly;
pub mod basis;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod integrator;
pub mod mesh;
pub mod space;

pub use error::{Error, Result};
