//! Numerical core for ROC analysis of functional biomarkers.
//!
//! Curves live on a shared [`Grid`] with trapezoid quadrature weights, so the
//! L²(0,1) inner product becomes a weighted dot product. On top of that the
//! crate provides:
//!
//! - [`estimation`]: sample means, covariance operators and weighted FPCA;
//! - [`indexes`]: fixed (max/min/integral) and estimated (mean-difference,
//!   AUC-optimal linear, quadratic) discriminant indexes;
//! - [`roc`]: empirical distribution functions, ROC curve, AUC and Youden
//!   index of a pair of score samples;
//! - [`binormal`]: closed-form results for multivariate normal biomarkers;
//! - [`simulation`]: Gaussian-process generators and the scenario catalog.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod binormal;
mod error;
pub mod estimation;
pub mod grid;
pub mod indexes;
mod linalg;
pub mod normal;
pub mod roc;
pub mod simulation;

pub use error::{Error, Result};
pub use grid::{inner_product, make_uniform_grid, norm, Curve, FunctionalSample, Grid, Group};

pub use nalgebra::{DMatrix, DVector};
