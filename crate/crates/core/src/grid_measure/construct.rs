use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GridMeasure, TorusGrid};
use crate::error::{LabError, Result};

/// Upper bound on the number of leaf cubes a random construction may produce.
const MAX_LEAVES: usize = 1 << 24;

/// Uniform measure, every cell carrying `N^{-d}`.
pub fn build_lebesgue(grid: TorusGrid) -> GridMeasure {
    let w = grid.cell_volume();
    GridMeasure {
        grid,
        weights: vec![w; grid.len()],
        name: "lebesgue".into(),
        seed: None,
    }
}

/// Unit point mass at the origin.
pub fn build_dirac(grid: TorusGrid) -> GridMeasure {
    let mut weights = vec![0.0; grid.len()];
    weights[0] = 1.0;
    GridMeasure {
        grid,
        weights,
        name: "dirac".into(),
        seed: None,
    }
}

/// Cell masses of the interval `[a, b)` carrying total mass `mass`, spread by
/// overlap length. Accumulates into `out`.
fn deposit_interval(out: &mut [f64], n: usize, a: f64, b: f64, mass: f64) {
    let nf = n as f64;
    let len = b - a;
    let first = (a * nf).floor() as i64;
    let last = ((b * nf).ceil() as i64 - 1).max(first);
    for c in first..=last {
        let lo = (c as f64 / nf).max(a);
        let hi = ((c + 1) as f64 / nf).min(b);
        if hi > lo {
            out[c.rem_euclid(n as i64) as usize] += mass * (hi - lo) / len;
        }
    }
}

/// Tensor product of per-axis cell-mass vectors.
fn product_weights(grid: &TorusGrid, axis: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| grid.unravel(i).iter().map(|&m| axis[m]).product())
        .collect()
}

/// Self-similar two-piece Cantor measure with contraction `ratio`,
/// stopped at `depth` and taken as a product on each axis when `d > 1`.
pub fn build_cantor(grid: TorusGrid, ratio: f64, depth: u32) -> Result<GridMeasure> {
    if !(ratio > 0.0 && ratio < 0.5) {
        return Err(LabError::InvalidParameter(format!(
            "cantor ratio {ratio} outside (0, 1/2)"
        )));
    }
    if depth == 0 || depth > 40 {
        return Err(LabError::InvalidParameter(format!("cantor depth {depth}")));
    }
    let leaf = ratio.powi(depth as i32);
    if 2.0 * leaf < grid.spacing() {
        return Err(LabError::Unresolvable(format!(
            "2·ratio^depth = {} is below the cell size 1/{}",
            2.0 * leaf,
            grid.n()
        )));
    }
    let mut lefts = vec![0.0_f64];
    let mut len = 1.0;
    for _ in 0..depth {
        let step = len * (1.0 - ratio);
        lefts = lefts.iter().flat_map(|&a| [a, a + step]).collect();
        len *= ratio;
    }
    let mass = 0.5_f64.powi(depth as i32);
    let mut axis = vec![0.0; grid.n()];
    for a in lefts {
        deposit_interval(&mut axis, grid.n(), a, a + leaf, mass);
    }
    let weights = product_weights(&grid, &axis);
    Ok(GridMeasure {
        grid,
        weights,
        name: format!("cantor(ratio={ratio},depth={depth})"),
        seed: None,
    })
}

/// Random Cantor-type measure: each surviving cube is split into `split^d`
/// children, `keep` of which are retained uniformly at random and share its
/// mass equally.
///
/// Levels finer than the grid are binned into the cell containing them, so
/// only `split <= N` is required.
pub fn build_random_salem(
    grid: TorusGrid,
    keep: usize,
    split: usize,
    depth: u32,
    seed: u64,
) -> Result<GridMeasure> {
    let d = grid.d();
    let children = split
        .checked_pow(d as u32)
        .ok_or_else(|| LabError::InvalidParameter("split^d overflows".into()))?;
    if split < 2 || keep == 0 || keep >= children {
        return Err(LabError::InvalidParameter(format!(
            "need 1 <= keep < split^d and split >= 2 (keep={keep}, split={split}, d={d})"
        )));
    }
    if depth == 0 {
        return Err(LabError::InvalidParameter("depth must be positive".into()));
    }
    if split > grid.n() {
        return Err(LabError::Unresolvable(format!(
            "first-level cubes of side 1/{split} are finer than the grid 1/{}",
            grid.n()
        )));
    }
    match keep.checked_pow(depth) {
        Some(leaves) if leaves <= MAX_LEAVES => {}
        _ => {
            return Err(LabError::Unresolvable(format!(
                "keep^depth = {keep}^{depth} leaves exceeds {MAX_LEAVES}"
            )))
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Leaf cubes as (corner, side).
    let mut cubes: Vec<Vec<f64>> = vec![vec![0.0; d]];
    let mut side = 1.0;
    for _ in 0..depth {
        let child = side / split as f64;
        let mut next = Vec::with_capacity(cubes.len() * keep);
        for corner in &cubes {
            let mut picks = sample(&mut rng, children, keep).into_vec();
            picks.sort_unstable();
            for p in picks {
                let mut c = corner.clone();
                let mut rest = p;
                for a in (0..d).rev() {
                    c[a] += (rest % split) as f64 * child;
                    rest /= split;
                }
                next.push(c);
            }
        }
        cubes = next;
        side = child;
    }

    let mass = 1.0 / cubes.len() as f64;
    let n = grid.n();
    let mut weights = vec![0.0; grid.len()];
    for corner in &cubes {
        // Per-axis overlaps, then outer product.
        let per_axis: Vec<Vec<(usize, f64)>> = corner
            .iter()
            .map(|&a| {
                let mut v = vec![0.0; n];
                deposit_interval(&mut v, n, a, a + side, 1.0);
                v.into_iter()
                    .enumerate()
                    .filter(|(_, w)| *w > 0.0)
                    .collect()
            })
            .collect();
        let mut stack: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), mass)];
        for axis in &per_axis {
            stack = stack
                .into_iter()
                .flat_map(|(idx, w)| {
                    axis.iter().map(move |&(c, f)| {
                        let mut i = idx.clone();
                        i.push(c);
                        (i, w * f)
                    })
                })
                .collect();
        }
        for (idx, w) in stack {
            weights[grid.ravel(&idx)] += w;
        }
    }
    Ok(GridMeasure {
        grid,
        weights,
        name: format!("salem(keep={keep},split={split},depth={depth})"),
        seed: Some(seed),
    })
}
