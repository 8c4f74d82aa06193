//! Numerical laboratory for the generalized Zakharov–Kuznetsov equation
//! `u_t + ∂_xΔu + u^k u_x = 0` on `ℝ³`, approximated on a periodic box.
//!
//! The crate provides the spectral grid and transforms, the dispersive
//! multipliers, singular initial data, norm evaluation, an
//! integrating-factor RK4 solver and numerical audits of the linear and
//! nonlinear estimates.

pub mod audit;
pub mod blowup;
pub mod error;
pub mod experiment;
mod fft;
pub mod grid;
pub mod multiplier;
pub mod norms;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{forward_transform, inverse_transform, make_grid, Grid3, RealField, SpectralField};
