use serde::{Deserialize, Serialize};

use super::{GridMeasure, TorusGrid};
use crate::error::{LabError, Result};
use crate::par;
use crate::regression::fit_line;

/// Fitted growth law `max_x μ(B(x,r)) ≈ C_H r^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallConditionFit {
    pub alpha: f64,
    pub c_h: f64,
    pub residual: f64,
    pub radii: Vec<f64>,
    /// `max_x μ(B(x,r))` for each radius.
    pub max_masses: Vec<f64>,
}

/// Dyadic radii `2^{-m}`, `m = 2..=log2(N) - 2`.
pub fn default_radii(grid: &TorusGrid) -> Vec<f64> {
    let top = grid.log2_n().saturating_sub(2);
    (2..=top).map(|m| 0.5f64.powi(m as i32)).collect()
}

/// Circular window sums `s[i] = Σ_{j=i+start}^{i+start+len-1} v[j]` along one axis.
pub(crate) fn window_sum_axis(
    grid: &TorusGrid,
    v: &[f64],
    axis: usize,
    start: i64,
    len: usize,
) -> Vec<f64> {
    let n = grid.n();
    let stride = grid.stride(axis);
    let block = n * stride;
    let mut out = vec![0.0; v.len()];
    let lines: Vec<usize> = (0..v.len())
        .filter(|&i| (i % block) / stride == 0)
        .collect();
    let results = par::map_indexed(lines.len(), |li| {
        let base = lines[li];
        let at = |k: i64| v[base + (k.rem_euclid(n as i64) as usize) * stride];
        let end = start + len as i64;
        let mut s: f64 = (start..end).map(at).sum();
        let mut row = Vec::with_capacity(n);
        for i in 0..n as i64 {
            row.push(s);
            s += at(i + end) - at(i + start);
        }
        row
    });
    for (li, row) in results.into_iter().enumerate() {
        let base = lines[li];
        for (k, val) in row.into_iter().enumerate() {
            out[base + k * stride] = val;
        }
    }
    out
}

/// `μ(B(x, r))` at every grid point `x`, with `B(x,r) = x + [-r, r)^d`
/// realised as `2h` cells per axis, `h = floor(rN)`.
pub fn ball_masses(mu: &GridMeasure, r: f64) -> Vec<f64> {
    let grid = *mu.grid();
    let h = ((r * grid.n() as f64).floor() as usize).max(1);
    if 2 * h >= grid.n() {
        return vec![mu.mass(); grid.len()];
    }
    let mut cur = mu.weights().to_vec();
    for axis in 0..grid.d() {
        cur = window_sum_axis(&grid, &cur, axis, -(h as i64), 2 * h);
    }
    cur
}

/// Least-squares fit of `log M(r) = log C_H + α log r` with
/// `M(r) = max_x μ(B(x,r))`; `α` is clamped to `[0, d]`.
pub fn ball_condition_fit(mu: &GridMeasure, radii: &[f64]) -> Result<BallConditionFit> {
    if radii.len() < 3 {
        return Err(LabError::TooFewPoints {
            needed: 3,
            got: radii.len(),
        });
    }
    let grid = mu.grid();
    for &r in radii {
        if !(r >= 2.0 * grid.spacing() - 1e-15 && r <= 0.25 + 1e-15) {
            return Err(LabError::InvalidParameter(format!(
                "radius {r} outside [2/N, 1/4]"
            )));
        }
    }
    let max_masses: Vec<f64> = radii
        .iter()
        .map(|&r| ball_masses(mu, r).into_iter().fold(0.0, f64::max))
        .collect();
    if max_masses.iter().any(|&m| !(m > 0.0)) {
        return Err(LabError::InvalidParameter("measure has zero mass".into()));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = max_masses.iter().map(|m| m.ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok(BallConditionFit {
        alpha: fit.slope.clamp(0.0, grid.d() as f64),
        c_h: fit.intercept.exp(),
        residual: fit.rms,
        radii: radii.to_vec(),
        max_masses,
    })
}
