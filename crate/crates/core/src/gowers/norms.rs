use serde::{Deserialize, Serialize};

use super::box_tensor::{box_tensor, MemoryBudget};
use crate::error::{LabError, Result};
use crate::fourier::Dft;
use crate::grid_measure::{GridFunction, TorusGrid};
use crate::par;

/// How `∫ Δ^k f` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UkMethod {
    /// Never materialises the tensor.
    #[default]
    Streaming,
    /// Materialises `Δ^k f` within the memory budget.
    Tensor,
}

/// `g(x) = f(x) f(x - h)`.
fn multiplicative_derivative(grid: &TorusGrid, f: &[f64], h: usize) -> Vec<f64> {
    if grid.d() == 1 {
        let n = f.len();
        return (0..n).map(|x| f[x] * f[(x + n - h) % n]).collect();
    }
    let neg: Vec<i64> = grid.unravel(h).iter().map(|&m| -(m as i64)).collect();
    (0..f.len())
        .map(|x| f[x] * f[grid.ravel_shifted(&grid.unravel(x), &neg)])
        .collect()
}

fn power_rec(grid: &TorusGrid, f: &[f64], k: u32, parallel: bool) -> f64 {
    let l = f.len();
    if k == 1 {
        let m = f.iter().sum::<f64>() / l as f64;
        return m * m;
    }
    let term = |h: usize| power_rec(grid, &multiplicative_derivative(grid, f, h), k - 1, false);
    let total = if parallel {
        par::sum_indexed(l, term)
    } else {
        (0..l).map(term).sum::<f64>()
    };
    total / l as f64
}

/// `∫ Δ^k f dx du` accumulated without materialising the tensor, via
/// `‖f‖_{U^k}^{2^k} = E_h ‖f·f(·-h)‖_{U^{k-1}}^{2^{k-1}}` and
/// `‖g‖_{U^1}^2 = (∫g)^2`.
pub fn uk_power_streaming(f: &GridFunction, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(LabError::InvalidParameter("U^k needs k >= 1".into()));
    }
    Ok(power_rec(f.grid(), f.values(), k, true))
}

/// `‖f‖_{U^k}` with the default streaming evaluation.
pub fn uk_norm(f: &GridFunction, k: u32) -> Result<f64> {
    uk_norm_with(f, k, UkMethod::Streaming, MemoryBudget::default())
}

pub fn uk_norm_with(
    f: &GridFunction,
    k: u32,
    method: UkMethod,
    budget: MemoryBudget,
) -> Result<f64> {
    if k == 0 {
        return Err(LabError::InvalidParameter("U^k needs k >= 1".into()));
    }
    let power = match method {
        UkMethod::Streaming => uk_power_streaming(f, k)?,
        UkMethod::Tensor => box_tensor(f, k, budget)?.mean(),
    };
    // Nonnegative in exact arithmetic; clear rounding residue.
    Ok(power.max(0.0).powf(1.0 / (1u64 << k) as f64))
}

/// `(Σ_ξ |f̂(ξ)|^4)^{1/4}`.
pub fn uk_norm_spectral_u2(f: &GridFunction) -> f64 {
    f.dft().power_sum(4.0).powf(0.25)
}
