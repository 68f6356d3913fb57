use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid_measure::{GridFunction, TorusGrid};
use crate::par;

/// Byte budget for materialised tensors and spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryBudget {
    pub bytes: u128,
}

impl MemoryBudget {
    pub fn new(bytes: u128) -> Self {
        Self { bytes }
    }

    pub fn check(&self, required: u128) -> Result<()> {
        if required > self.bytes {
            return Err(LabError::MemoryBudget {
                required,
                budget: self.bytes,
            });
        }
        Ok(())
    }
}

impl Default for MemoryBudget {
    /// 1 GiB.
    fn default() -> Self {
        Self::new(1 << 30)
    }
}

/// `Δ^k f` on `grid^{k+1}`, indexed `(x; u_1, …, u_k)` row-major with `x`
/// leading and each slot a flat grid index.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxTensor {
    grid: TorusGrid,
    k: u32,
    values: Vec<f64>,
}

impl BoxTensor {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn flat(&self, x: usize, us: &[usize]) -> usize {
        let l = self.grid.len();
        us.iter().fold(x, |acc, &u| acc * l + u)
    }

    /// Entry at flat grid indices `x` and `u_1..u_k`.
    pub fn get(&self, x: usize, us: &[usize]) -> f64 {
        assert_eq!(us.len(), self.k as usize);
        self.values[self.flat(x, us)]
    }

    /// `∫ Δ^k f dx du`.
    pub fn mean(&self) -> f64 {
        let n = self.values.len();
        par::sum_indexed(n, |i| self.values[i]) / n as f64
    }
}

/// Flat index of `x - Σ_a ι_a u_a` on the grid.
#[inline]
fn offset_index(grid: &TorusGrid, x: usize, us: &[usize], iota: usize) -> usize {
    let n = grid.n();
    if grid.d() == 1 {
        let mut p = x as i64;
        for (a, &u) in us.iter().enumerate() {
            if iota >> a & 1 == 1 {
                p -= u as i64;
            }
        }
        return p.rem_euclid(n as i64) as usize;
    }
    let mut xm = grid.unravel(x);
    for (a, &u) in us.iter().enumerate() {
        if iota >> a & 1 == 1 {
            for (c, um) in xm.iter_mut().zip(grid.unravel(u)) {
                *c = (*c + n - um) % n;
            }
        }
    }
    grid.ravel(&xm)
}

/// `Δ^k f(x; u) = Π_{ι ∈ {0,1}^k} f(x - ι·u)`.
pub fn box_value_direct(f: &GridFunction, x: usize, us: &[usize]) -> f64 {
    let grid = f.grid();
    let v = f.values();
    (0..(1usize << us.len()))
        .map(|iota| v[offset_index(grid, x, us, iota)])
        .product()
}

/// [`box_value_direct`] with `u_1..u_k` packed row-major into one index.
#[inline]
pub fn box_value_direct_flat(f: &GridFunction, k: u32, x: usize, mut u: usize) -> f64 {
    let l = f.grid().len();
    let mut us = [0usize; 8];
    for a in (0..k as usize).rev() {
        us[a] = u % l;
        u /= l;
    }
    box_value_direct(f, x, &us[..k as usize])
}

/// `Δ^k f(x;u) = Δ^{k-1} f(x - u_k; u') · Δ^{k-1} f(x; u')`.
pub fn box_value_recursive(f: &GridFunction, x: usize, us: &[usize]) -> f64 {
    match us.split_last() {
        None => f.values()[x],
        Some((&uk, rest)) => {
            let shifted = offset_index(f.grid(), x, &[uk], 1);
            box_value_recursive(f, shifted, rest) * box_value_recursive(f, x, rest)
        }
    }
}

fn tensor_len(grid: &TorusGrid, k: u32, budget: MemoryBudget) -> Result<usize> {
    let entries = (grid.len() as u128).pow(k + 1);
    budget.check(entries * 8)?;
    Ok(entries as usize)
}

/// Materialises `Δ^k f` by the product formula, in parallel over `x`.
pub fn box_tensor(f: &GridFunction, k: u32, budget: MemoryBudget) -> Result<BoxTensor> {
    let grid = *f.grid();
    let len = tensor_len(&grid, k, budget)?;
    let l = grid.len();
    let row = len / l;
    let mut values = vec![0.0; len];
    par::fill_rows(&mut values, row, |x, out| {
        for (u, slot) in out.iter_mut().enumerate() {
            *slot = box_value_direct_flat(f, k, x, u);
        }
    });
    Ok(BoxTensor { grid, k, values })
}

/// Materialises `Δ^k f` from `Δ^{k-1} f` level by level.
pub fn box_tensor_recursive(f: &GridFunction, k: u32, budget: MemoryBudget) -> Result<BoxTensor> {
    let grid = *f.grid();
    tensor_len(&grid, k, budget)?;
    let l = grid.len();
    let mut prev = f.values().to_vec();
    for level in 1..=k {
        // prev is indexed (x; u_1..u_{level-1}).
        let inner = l.pow(level - 1);
        let mut next = vec![0.0; prev.len() * l];
        par::fill_rows(&mut next, inner * l, |x, out| {
            for uk in 0..l {
                let xs = offset_index(&grid, x, &[uk], 1);
                for up in 0..inner {
                    // (x; u', u_k) with u_k last.
                    out[up * l + uk] = prev[xs * inner + up] * prev[x * inner + up];
                }
            }
        });
        prev = next;
    }
    Ok(BoxTensor {
        grid,
        k,
        values: prev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fn(grid: TorusGrid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridFunction::new(grid, (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn constants() {
        let g = TorusGrid::line(8).unwrap();
        for k in 0..=3 {
            let t = box_tensor(&GridFunction::constant(g, 1.0), k, MemoryBudget::default()).unwrap();
            assert!(t.values().iter().all(|&v| v == 1.0));
            let c = 1.1f64;
            let t = box_tensor(&GridFunction::constant(g, c), k, MemoryBudget::default()).unwrap();
            let expect = c.powi(1 << k);
            assert!(t.values().iter().all(|&v| (v - expect).abs() < 1e-12));
        }
    }

    #[test]
    fn order_zero_is_input() {
        let f = random_fn(TorusGrid::line(16).unwrap(), 1);
        let t = box_tensor(&f, 0, MemoryBudget::default()).unwrap();
        assert_eq!(t.values(), f.values());
    }

    #[test]
    fn direct_and_recursive_agree_pointwise() {
        let g = TorusGrid::line(16).unwrap();
        let f = random_fn(g, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = rng.random_range(0..16);
            let us = [rng.random_range(0..16), rng.random_range(0..16)];
            let a = box_value_direct(&f, x, &us);
            let b = box_value_recursive(&f, x, &us);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_and_recursive_tensors_agree() {
        for g in [TorusGrid::line(8).unwrap(), TorusGrid::new(2, 4).unwrap()] {
            let f = random_fn(g, 4);
            for k in 1..=2 {
                let a = box_tensor(&f, k, MemoryBudget::default()).unwrap();
                let b = box_tensor_recursive(&f, k, MemoryBudget::default()).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetric_in_u_slots() {
        let g = TorusGrid::line(8).unwrap();
        let f = random_fn(g, 5);
        let t = box_tensor(&f, 3, MemoryBudget::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let x = rng.random_range(0..8);
            let u = [rng.random_range(0..8), rng.random_range(0..8), rng.random_range(0..8)];
            let base = t.get(x, &u);
            for p in [[1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]] {
                let perm = [u[p[0]], u[p[1]], u[p[2]]];
                assert!((t.get(x, &perm) - base).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn memory_budget_reports_bytes() {
        let g = TorusGrid::line(256).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let err = box_tensor(&f, 3, MemoryBudget::new(1 << 20)).unwrap_err();
        assert_eq!(
            err,
            LabError::MemoryBudget {
                required: 256u128.pow(4) * 8,
                budget: 1 << 20
            }
        );
    }
}
