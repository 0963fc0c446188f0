//! Matrix ∂̄-problems on compact planar domains, integrable-operator
//! resolvents and regularized determinants, and τ-function checks.

pub mod cli;
pub mod config;
pub mod dbar;
pub mod deformation;
pub mod determinants;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod nls;
pub mod quadrature;

pub use error::{Error, Result};
