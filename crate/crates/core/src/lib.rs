//! Spectral simulation kernels for abstract (matrix-valued) Schrödinger and
//! heat evolutions on a periodic truncation of R^n: Gaussian-weighted norms
//! and their convexity diagnostics, exact and split-step propagators, the
//! Appell transformation, and Carleman inequality harnesses.

pub mod appell;
pub mod carleman;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod potentials;
pub mod propagator;

pub use error::{Error, Result};
pub use grid::{Domain, Field, Grid, Trajectory, C64};
