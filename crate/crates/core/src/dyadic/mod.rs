//! Dyadic conditional expectations, martingale differences, the discrete
//! Hardy–Littlewood maximal function and the scale-reduction lemma checks.
//!
//! Cube sums are built bottom-up by halving one axis at a time, so every
//! cube sum is the same fixed binary tree over its cells. Averages of
//! cube-constant data are therefore reproduced bit for bit, which makes
//! `E_s ∘ E_s = E_s` and `E_s ∘ E_{s'} = E_{min(s,s')}` exact.

mod hl;
mod lemmas;

pub use hl::{hl_maximal, hl_radii, weak_type_constant};
pub use lemmas::{
    lipschitz_bound_check, scale1_check, scale3_check, LemmaReport, LemmaSample, ScaleLemmaConfig,
};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid_measure::{GridFunction, TorusGrid};

/// Dyadic level `s`: cubes of side `2^{-s}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicLevel {
    s: u32,
}

impl DyadicLevel {
    pub fn new(s: u32, grid: &TorusGrid) -> Result<Self> {
        if s > grid.log2_n() {
            return Err(LabError::Unresolvable(format!(
                "dyadic level {s} finer than the grid (N = {})",
                grid.n()
            )));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// Grid cells per cube edge.
    pub fn cells_per_edge(&self, grid: &TorusGrid) -> usize {
        grid.n() >> self.s
    }
}

/// Sums adjacent pairs along `axis`, halving that extent.
fn halve(cur: &[f64], dims: &mut [usize], axis: usize) -> Vec<f64> {
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let m = dims[axis] / 2;
    let mut out = Vec::with_capacity(cur.len() / 2);
    for o in 0..outer {
        for i in 0..m {
            let a = (o * dims[axis] + 2 * i) * inner;
            let b = a + inner;
            out.extend((0..inner).map(|r| cur[a + r] + cur[b + r]));
        }
    }
    dims[axis] = m;
    out
}

/// Sums over the cubes of level `s`, row-major with side `2^s`.
pub(crate) fn cube_sums(grid: &TorusGrid, values: &[f64], s: u32) -> Vec<f64> {
    let mut dims = grid.dims();
    let mut cur = values.to_vec();
    let target = 1usize << s;
    while dims[0] > target {
        for axis in 0..grid.d() {
            cur = halve(&cur, &mut dims, axis);
        }
    }
    cur
}

/// Index of the level-`s` cube containing grid cell `flat`.
pub(crate) fn cube_of(grid: &TorusGrid, flat: usize, s: u32) -> usize {
    let shift = grid.log2_n() - s;
    grid.unravel(flat)
        .iter()
        .fold(0usize, |acc, &m| (acc << s) | (m >> shift))
}

/// Cube averages of level `s`, row-major with side `2^s`.
pub(crate) fn cube_averages(f: &GridFunction, s: u32) -> Vec<f64> {
    let grid = f.grid();
    let cells = ((grid.n() >> s) as f64).powi(grid.d() as i32);
    cube_sums(grid, f.values(), s)
        .into_iter()
        .map(|v| v / cells)
        .collect()
}

/// `E_s f`: the average of `f` over the level-`s` cube containing each cell.
pub fn conditional_expectation(f: &GridFunction, level: DyadicLevel) -> GridFunction {
    let grid = *f.grid();
    let s = level.s();
    let avg = cube_averages(f, s);
    let values = (0..grid.len()).map(|i| avg[cube_of(&grid, i, s)]).collect();
    GridFunction::new(grid, values).expect("grid sizes agree")
}

/// `Δ_k f = E_{k+1} f - E_k f`.
pub fn martingale_difference(f: &GridFunction, k: u32) -> Result<GridFunction> {
    let grid = f.grid();
    let fine = conditional_expectation(f, DyadicLevel::new(k + 1, grid)?);
    let coarse = conditional_expectation(f, DyadicLevel::new(k, grid)?);
    fine.sub(&coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fn(grid: TorusGrid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        GridFunction::new(grid, v).unwrap()
    }

    #[test]
    fn constant_and_global_mean() {
        let g = TorusGrid::line(64).unwrap();
        let c = GridFunction::constant(g, 0.3);
        let e = conditional_expectation(&c, DyadicLevel::new(3, &g).unwrap());
        assert_eq!(e.values(), c.values());
        let f = random_fn(g, 1);
        let e0 = conditional_expectation(&f, DyadicLevel::new(0, &g).unwrap());
        let mean = f.integral();
        assert!(e0.values().iter().all(|v| (v - mean).abs() < 1e-15));
    }

    #[test]
    fn cube_averages_match_direct_summation() {
        for grid in [TorusGrid::line(64).unwrap(), TorusGrid::new(2, 16).unwrap()] {
            let f = random_fn(grid, 2);
            let s = 3.min(grid.log2_n());
            let e = conditional_expectation(&f, DyadicLevel::new(s, &grid).unwrap());
            let side = grid.n() >> s;
            for x in 0..grid.len() {
                let base: Vec<usize> = grid.unravel(x).iter().map(|m| m / side * side).collect();
                let mut total = 0.0;
                let cells = side.pow(grid.d() as u32);
                for c in 0..cells {
                    let mut multi = base.clone();
                    let mut rem = c;
                    for a in (0..grid.d()).rev() {
                        multi[a] += rem % side;
                        rem /= side;
                    }
                    total += f.values()[grid.ravel(&multi)];
                }
                assert!((e.values()[x] - total / cells as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn idempotent_and_tower_bitwise() {
        for grid in [TorusGrid::line(128).unwrap(), TorusGrid::new(2, 32).unwrap()] {
            let f = random_fn(grid, 3);
            let top = grid.log2_n();
            for s in 0..=top {
                let ls = DyadicLevel::new(s, &grid).unwrap();
                let es = conditional_expectation(&f, ls);
                assert_eq!(conditional_expectation(&es, ls).values(), es.values());
                for t in 0..=top {
                    let lt = DyadicLevel::new(t, &grid).unwrap();
                    let lm = DyadicLevel::new(s.min(t), &grid).unwrap();
                    let lhs = conditional_expectation(&conditional_expectation(&f, lt), ls);
                    assert_eq!(lhs.values(), conditional_expectation(&f, lm).values());
                }
            }
        }
    }

    #[test]
    fn martingale_differences() {
        let g = TorusGrid::line(64).unwrap();
        let f = random_fn(g, 4);
        let top = g.log2_n();
        let mut recon = conditional_expectation(&f, DyadicLevel::new(0, &g).unwrap());
        let diffs: Vec<GridFunction> = (0..top)
            .map(|k| martingale_difference(&f, k).unwrap())
            .collect();
        for (k, dk) in diffs.iter().enumerate() {
            let back = conditional_expectation(dk, DyadicLevel::new(k as u32, &g).unwrap());
            assert!(back.sup_norm() < 1e-12);
            recon = recon.add(dk).unwrap();
        }
        for (a, b) in recon.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for j in 0..diffs.len() {
            for k in 0..j {
                assert!(diffs[j].inner(&diffs[k]).unwrap().abs() < 1e-10);
            }
        }
        let c = GridFunction::constant(g, 2.0);
        assert!(martingale_difference(&c, 2).unwrap().sup_norm() == 0.0);
        assert!(martingale_difference(&c, top).is_err());
    }

    #[test]
    fn contraction_in_lp() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = random_fn(g, 5);
        for s in 0..=4 {
            let e = conditional_expectation(&f, DyadicLevel::new(s, &g).unwrap());
            for p in [1.0, 2.0] {
                assert!(e.lp_norm(p) <= f.lp_norm(p) + 1e-12);
            }
            assert!(e.sup_norm() <= f.sup_norm() + 1e-12);
        }
    }

    #[test]
    fn rejects_unresolvable_level() {
        let g = TorusGrid::line(16).unwrap();
        assert!(DyadicLevel::new(5, &g).is_err());
    }
}
