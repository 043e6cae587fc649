//! Regularization of the big-bang singularity of the anisotropic Friedmann
//! model: reduction to a central-force system, McGehee blow-up of the
//! singularity into a collision manifold, exact rational classification of
//! branch-regularizability in the equation of state, and construction of the
//! unique bounce extension through `a = 0`.

pub mod blowup;
pub mod bounce;
pub mod checks;
pub mod cli;
pub mod cosmo;
pub mod error;
pub mod flow;
pub mod ratnum;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
