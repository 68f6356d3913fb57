//! Off-grid evaluation of periodic grid data.

use serde::{Deserialize, Serialize};

use crate::grid_measure::TorusGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Multilinear,
    Nearest,
}

/// Calls `visit(flat_index, weight)` for every grid point contributing to the
/// value at torus point `x`. Weights are nonnegative and sum to 1.
#[inline]
pub fn for_each_weight(
    grid: &TorusGrid,
    mode: Interpolation,
    x: &[f64],
    mut visit: impl FnMut(usize, f64),
) {
    let n = grid.n();
    let nf = n as f64;
    match mode {
        Interpolation::Nearest => {
            let flat = x.iter().fold(0usize, |acc, &c| {
                let p = (c * nf).round().rem_euclid(nf) as usize % n;
                acc * n + p
            });
            visit(flat, 1.0);
        }
        Interpolation::Multilinear => {
            if grid.d() == 1 {
                let p = (x[0] * nf).rem_euclid(nf);
                let i0 = p.floor();
                let t = p - i0;
                let i0 = i0 as usize % n;
                visit(i0, 1.0 - t);
                if t > 0.0 {
                    visit((i0 + 1) % n, t);
                }
                return;
            }
            let d = grid.d();
            let mut base = Vec::with_capacity(d);
            let mut frac = Vec::with_capacity(d);
            for &c in x {
                let p = (c * nf).rem_euclid(nf);
                let i0 = p.floor();
                base.push(i0 as usize % n);
                frac.push(p - i0);
            }
            for corner in 0..(1usize << d) {
                let mut w = 1.0;
                let mut flat = 0usize;
                for a in 0..d {
                    let up = (corner >> (d - 1 - a)) & 1 == 1;
                    w *= if up { frac[a] } else { 1.0 - frac[a] };
                    flat = flat * n + if up { (base[a] + 1) % n } else { base[a] };
                }
                if w > 0.0 {
                    visit(flat, w);
                }
            }
        }
    }
}

/// Interpolated value of periodic grid data at torus point `x`.
#[inline]
pub fn eval(grid: &TorusGrid, mode: Interpolation, values: &[f64], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for_each_weight(grid, mode, x, |i, w| acc += w * values[i]);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_grid_values_and_linear_between() {
        let g = TorusGrid::line(8).unwrap();
        let v: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(eval(&g, Interpolation::Multilinear, &v, &[0.375]), 3.0);
        assert!((eval(&g, Interpolation::Multilinear, &v, &[0.4375]) - 3.5).abs() < 1e-15);
        // Wrap between the last and first sample.
        assert!((eval(&g, Interpolation::Multilinear, &v, &[0.9375]) - 3.5).abs() < 1e-15);
        assert!((eval(&g, Interpolation::Multilinear, &v, &[-0.0625]) - 3.5).abs() < 1e-15);
        assert_eq!(eval(&g, Interpolation::Nearest, &v, &[0.40]), 3.0);
    }

    #[test]
    fn bilinear_weights_sum_to_one() {
        let g = TorusGrid::new(2, 4).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for_each_weight(&g, Interpolation::Multilinear, &[0.3, 0.9], |_, w| {
            total += w;
            count += 1;
        });
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(count, 4);
        // Bilinear data is reproduced exactly.
        let v: Vec<f64> = (0..16).map(|i| (i / 4) as f64 + 10.0 * (i % 4) as f64).collect();
        let got = eval(&g, Interpolation::Multilinear, &v, &[0.3, 0.6]);
        assert!((got - (1.2 + 24.0)).abs() < 1e-12);
    }
}
