use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GridFunction, GridMeasure, TorusGrid};
use crate::error::{LabError, Result};
use crate::fft::fft_nd;

/// Radial base profile, supported in the ball of radius 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `exp(-1/(1 - |2x|^2))` on `|x| < 1/2`.
    Bump,
    /// `exp(-|x|^2 / (2σ^2))` truncated to `|x| < 1/2`.
    Gaussian { sigma: f64 },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Bump
    }
}

impl Profile {
    /// Unnormalised profile value at radius `r`.
    pub fn value(&self, r: f64) -> f64 {
        if r >= 0.5 {
            return 0.0;
        }
        match *self {
            Profile::Bump => {
                let u = 2.0 * r;
                (-1.0 / (1.0 - u * u)).exp()
            }
            Profile::Gaussian { sigma } => (-(r * r) / (2.0 * sigma * sigma)).exp(),
        }
    }
}

/// Family `φ_n(x) = 2^{nd} φ(2^n x)`, each sampled and renormalised to unit
/// discrete mass on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MollifierFamily {
    pub profile: Profile,
}

/// Surface area of the unit sphere in `R^d`.
fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d - 2) as f64 * sphere_area(d - 2),
    }
}

impl MollifierFamily {
    pub fn bump() -> Self {
        Self {
            profile: Profile::Bump,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self {
            profile: Profile::Gaussian { sigma },
        }
    }

    /// Finest scale resolvable on `grid`: `2^{-n} >= 2/N`.
    pub fn max_scale(grid: &TorusGrid) -> u32 {
        grid.log2_n().saturating_sub(1)
    }

    /// Sampled, renormalised kernel weights of `φ_n` (sum 1), indexed by the
    /// displacement from the origin with wrap-around.
    pub fn kernel(&self, grid: &TorusGrid, n: u32) -> Result<Vec<f64>> {
        let max = Self::max_scale(grid);
        if n > max {
            return Err(LabError::ScaleTooFine { n, max });
        }
        let scale = (1u64 << n) as f64;
        let nn = grid.n();
        let mut w: Vec<f64> = (0..grid.len())
            .map(|i| {
                let r2: f64 = grid
                    .unravel(i)
                    .iter()
                    .map(|&m| {
                        let disp = crate::fft::signed_freq(m, nn) as f64 / nn as f64;
                        disp * disp
                    })
                    .sum();
                self.profile.value(scale * r2.sqrt())
            })
            .collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(LabError::NonFinite("mollifier kernel"));
        }
        w.iter_mut().for_each(|v| *v /= total);
        Ok(w)
    }

    /// Integral of the unnormalised profile over `R^d`.
    pub fn profile_integral(&self, d: usize) -> f64 {
        let steps = 20_000;
        let h = 0.5 / steps as f64;
        let area = sphere_area(d);
        // Simpson on [0, 1/2].
        let g = |r: f64| self.profile.value(r) * area * r.powi(d as i32 - 1);
        let mut s = g(0.0) + g(0.5);
        for i in 1..steps {
            let r = i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(r);
        }
        s * h / 3.0
    }

    /// `sup |φ'|` of the unit-integral profile in dimension `d`.
    pub fn profile_derivative_bound(&self, d: usize) -> f64 {
        let z = self.profile_integral(d);
        let steps = 200_000;
        let h = 0.5 / steps as f64;
        (0..steps)
            .map(|i| {
                let r = i as f64 * h;
                (self.profile.value(r + h) - self.profile.value(r)).abs() / h
            })
            .fold(0.0, f64::max)
            / z
    }
}

fn check_finite(mu: &GridMeasure) -> Result<()> {
    if mu.weights().iter().any(|w| !w.is_finite()) {
        return Err(LabError::NonFinite("measure weights"));
    }
    Ok(())
}

/// Density of `φ_n ∗ μ` by FFT circular convolution.
pub fn mollify(mu: &GridMeasure, n: u32, family: &MollifierFamily) -> Result<GridFunction> {
    check_finite(mu)?;
    let grid = *mu.grid();
    let kernel = family.kernel(&grid, n)?;
    let dims = grid.dims();
    let mut k: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut w: Vec<Complex64> = mu.weights().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut k, &dims, false);
    fft_nd(&mut w, &dims, false);
    for (a, b) in w.iter_mut().zip(&k) {
        *a *= b;
    }
    fft_nd(&mut w, &dims, true);
    // Unnormalised inverse carries the factor N^d that turns mass into density.
    GridFunction::new(grid, w.into_iter().map(|c| c.re).collect())
}

/// `μ_{n+1} - μ_n`.
pub fn delta_mollify(mu: &GridMeasure, n: u32, family: &MollifierFamily) -> Result<GridFunction> {
    let fine = mollify(mu, n + 1, family)?;
    let coarse = mollify(mu, n, family)?;
    fine.sub(&coarse)
}
