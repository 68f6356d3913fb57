//! Discretised measures and functions on the d-torus.
//!
//! A [`TorusGrid`] samples `T^d = [0,1)^d` at `N` points per axis, `N` a power
//! of two. Multi-indices are stored row-major with the last axis fastest.
//! [`GridMeasure`] stores mass per cell; [`GridFunction`] stores density
//! samples, so `∫f = N^{-d} Σ f`.

mod ball;
mod construct;
pub mod io;
mod mollifier;

pub use ball::{ball_condition_fit, ball_masses, default_radii, BallConditionFit};
pub(crate) use ball::window_sum_axis;
pub use construct::{build_cantor, build_dirac, build_lebesgue, build_random_salem};
pub use mollifier::{delta_mollify, mollify, MollifierFamily, Profile};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform grid on the d-torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    d: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(LabError::InvalidParameter("dimension must be positive".into()));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(LabError::NotPowerOfTwo(n));
        }
        let total = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if total > (1u128 << 40) {
            return Err(LabError::MemoryBudget {
                required: total.saturating_mul(8),
                budget: 8u128 << 40,
            });
        }
        Ok(Self { d, n })
    }

    /// One-dimensional grid.
    pub fn line(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log2_n(&self) -> u32 {
        self.n.trailing_zeros()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `N^{-d}`.
    pub fn cell_volume(&self) -> f64 {
        (self.spacing()).powi(self.d as i32)
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }

    /// Multi-index of a flat index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        for a in (0..self.d).rev() {
            out[a] = flat % self.n;
            flat /= self.n;
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &m| acc * self.n + m % self.n)
    }

    /// Flat index of `multi + shift` with wrap-around.
    pub fn ravel_shifted(&self, multi: &[usize], shift: &[i64]) -> usize {
        let n = self.n as i64;
        multi.iter().zip(shift).fold(0, |acc, (&m, &s)| {
            acc * self.n + (m as i64 + s).rem_euclid(n) as usize
        })
    }

    /// Coordinates `i/N` of a flat index.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .into_iter()
            .map(|m| m as f64 * self.spacing())
            .collect()
    }

    /// Per-axis stride of the row-major layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(LabError::GridMismatch(format!(
                "(d={}, N={}) vs (d={}, N={})",
                self.d, self.n, other.d, other.n
            )));
        }
        Ok(())
    }
}

/// Returns `values` translated by `shift` grid steps: `out[i] = values[i - shift]`.
pub fn translate_values(grid: &TorusGrid, values: &[f64], shift: &[i64]) -> Vec<f64> {
    let neg: Vec<i64> = shift.iter().map(|s| -s).collect();
    (0..grid.len())
        .map(|i| values[grid.ravel_shifted(&grid.unravel(i), &neg)])
        .collect()
}

/// Real samples (densities) on a torus grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at the grid coordinates.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `∫ f = N^{-d} Σ f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `L^p` norm with respect to the normalised volume.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    /// `∫ f g`.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `x ↦ f(x - a)` for a grid shift `a`.
    pub fn translate(&self, shift: &[i64]) -> Self {
        Self {
            grid: self.grid,
            values: translate_values(&self.grid, &self.values, shift),
        }
    }
}

/// Nonnegative cell masses on a torus grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    grid: TorusGrid,
    weights: Vec<f64>,
    name: String,
    seed: Option<u64>,
}

impl GridMeasure {
    pub fn new(grid: TorusGrid, weights: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} weights for a grid of {} points",
                weights.len(),
                grid.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(LabError::NonFinite("measure weights"));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(LabError::InvalidParameter("negative measure weight".into()));
        }
        Ok(Self {
            grid,
            weights,
            name: name.into(),
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Density `weights · N^d`.
    pub fn to_density(&self) -> GridFunction {
        let scale = self.grid.len() as f64;
        GridFunction {
            grid: self.grid,
            values: self.weights.iter().map(|w| w * scale).collect(),
        }
    }

    pub fn translate(&self, shift: &[i64]) -> Self {
        Self {
            grid: self.grid,
            weights: translate_values(&self.grid, &self.weights, shift),
            name: self.name.clone(),
            seed: self.seed,
        }
    }
}
