//! Vorticity dynamics outside the unit disk, with the verification tools
//! used to test boundary-layer, inviscid-limit and kernel estimates.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`], [`spectral`], [`snapshot`]: radial grid, θ-Fourier fields, file format
//! - [`biot_savart`]: stream function, velocity, wall slip and boundary flux per mode
//! - [`solver`]: IMEX Navier–Stokes stepper with the nonlocal vorticity boundary row, RK3 Euler
//! - [`rescaled`]: boundary-layer variables, curvature operators, the DtN expansion check
//! - [`stokes`]: half-space heat/Stokes kernels, Robin oracle, Duhamel iteration
//! - [`norms`]: analytic norms on pencil domains and the energy functionals
//! - [`diagnostics`], [`experiments`]: per-step records, audits and the E1–E4 harness

pub mod biot_savart;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod initial;
pub mod linalg;
pub mod norms;
pub mod quadrature;
pub mod rescaled;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod stokes;

pub use config::{Experiment, SolverConfig};
pub use error::{Error, Result};
pub use grid::{build_grid, RadialGrid};
pub use spectral::{PhysicalField, SpectralField, ThetaTransform};
