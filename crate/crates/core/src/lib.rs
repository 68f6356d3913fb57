//! Numerical laboratory for singular measures on the d-torus.
//!
//! The crate discretises measures on a power-of-two grid, mollifies them,
//! estimates their classical and higher-order Fourier decay and Gowers
//! `U^k` norms, and evaluates the maximal-operator integrals and inequality
//! checks built on top of them.

pub mod dyadic;
pub mod error;
pub mod fft;
pub mod fourier;
pub mod gowers;
pub mod grid_measure;
pub mod interp;
pub mod maximal;
pub mod par;
pub mod regression;

pub use error::{LabError, Result};
pub use grid_measure::{GridFunction, GridMeasure, MollifierFamily, TorusGrid};
