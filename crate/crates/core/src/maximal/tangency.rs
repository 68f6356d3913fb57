use super::omega::OmegaSet;
use super::strong_type::{sample_tuples, McConfig, McEstimate};
use crate::error::{LabError, Result};

/// Largest grid for the exact planar enumeration.
const EXACT_MAX_N: usize = 64;

/// Whether `(x_1, …, x_k)` lies in `A_δ`: some coordinate of some `x_i` is
/// at most `δ`, or two points share a coordinate within `δ`. Coordinates are
/// taken in `[0, 1)` without wrap-around.
pub(crate) fn in_tangency_set(xs: &[Vec<f64>], delta: f64) -> bool {
    for (i, x) in xs.iter().enumerate() {
        if x.iter().any(|c| c.abs() <= delta) {
            return true;
        }
        for y in &xs[..i] {
            if x.iter().zip(y).any(|(a, b)| (a - b).abs() <= delta) {
                return true;
            }
        }
    }
    false
}

/// `k² d`: `kd` slabs `{x_i^j <= δ}` and `d·k(k-1)/2` slabs
/// `{|x_i^j - x_{i'}^j| <= δ}`, the latter of width `2δ`, each meeting
/// `Ω^k` in measure at most `width · |Ω|^{k-1}`.
pub fn tangency_constant(k: usize, d: usize) -> f64 {
    (k * k * d) as f64
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(LabError::InvalidParameter(format!("delta = {delta} outside [0, 1/2]")));
    }
    Ok(())
}

/// Monte Carlo estimate of `|Ω^k ∩ A_δ|`.
pub fn internal_tangency_measure(
    omega: &OmegaSet,
    delta: f64,
    k: usize,
    config: McConfig,
) -> Result<McEstimate> {
    check_delta(delta)?;
    if k < 2 {
        return Err(LabError::InvalidParameter(format!("k = {k} below 2")));
    }
    if config.samples < 10_000 {
        return Err(LabError::InvalidParameter(format!(
            "{} samples; at least 10^4 required",
            config.samples
        )));
    }
    let hits = sample_tuples(omega, k, config, |xs, _| in_tangency_set(xs, delta))?;
    Ok(McEstimate::from_values(
        hits.iter().map(|&b| if b { 1.0 } else { 0.0 }),
        omega.volume().powi(k as i32),
    ))
}

/// Length of `[b0, b1] ∩ ([0, δ] ∪ [x - δ, x + δ])`.
fn covered_length(x: f64, b0: f64, b1: f64, delta: f64) -> f64 {
    let len = |lo: f64, hi: f64| (hi.min(b1) - lo.max(b0)).max(0.0);
    let first = len(0.0, delta);
    let second = len(x - delta, x + delta);
    let overlap = (delta.min(x + delta).min(b1) - b0.max(x - delta)).max(0.0);
    first + second - overlap
}

/// Area of `A_δ` inside the cell product `[a0,a1] × [b0,b1]`. The covered
/// length is piecewise linear in `x_1` between the listed breakpoints, so
/// the trapezoid rule on each piece is exact.
fn cell_pair_area(a0: f64, a1: f64, b0: f64, b1: f64, delta: f64) -> f64 {
    let mut cuts = vec![a0, a1];
    for c in [delta, 2.0 * delta, b0 - delta, b0 + delta, b1 - delta, b1 + delta] {
        if c > a0 && c < a1 {
            cuts.push(c);
        }
    }
    cuts.sort_by(|p, q| p.total_cmp(q));
    cuts.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            if 0.5 * (lo + hi) <= delta {
                (hi - lo) * (b1 - b0)
            } else {
                0.5 * (hi - lo) * (covered_length(lo, b0, b1, delta) + covered_length(hi, b0, b1, delta))
            }
        })
        .sum()
}

/// Exact `|Ω² ∩ A_δ|` for `d = 1` by summing closed-form cell-pair areas.
pub fn internal_tangency_exact(omega: &OmegaSet, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let grid = omega.grid();
    if grid.d() != 1 || grid.n() > EXACT_MAX_N {
        return Err(LabError::InvalidParameter(format!(
            "exact enumeration needs d = 1 and N <= {EXACT_MAX_N} (got d = {}, N = {})",
            grid.d(),
            grid.n()
        )));
    }
    let h = grid.spacing();
    let cells = omega.cells();
    let mut total = 0.0;
    for &a in &cells {
        for &b in &cells {
            let (a0, b0) = (a as f64 * h, b as f64 * h);
            total += cell_pair_area(a0, a0 + h, b0, b0 + h, delta);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_measure::TorusGrid;

    #[test]
    fn closed_form_unit_interval() {
        let g = TorusGrid::line(64).unwrap();
        let omega = OmegaSet::interval(g, 0.0, 1.0).unwrap();
        let exact = internal_tangency_exact(&omega, 0.1).unwrap();
        assert!((exact - 0.36).abs() < 1e-12, "{exact}");
        assert_eq!(internal_tangency_exact(&omega, 0.0).unwrap(), 0.0);
        let cfg = McConfig { samples: 200_000, seed: 3, stream: 0 };
        let mc = internal_tangency_measure(&omega, 0.1, 2, cfg).unwrap();
        assert!((mc.value - 0.36).abs() <= 3.0 * mc.std_error + 1e-3, "{mc:?}");
    }

    #[test]
    fn exact_and_monte_carlo_agree_on_random_sets() {
        let g = TorusGrid::line(64).unwrap();
        for seed in 0..4 {
            let omega = OmegaSet::random_dyadic_union(g, 4, 0.5, seed).unwrap();
            for delta in [0.02, 0.125] {
                let exact = internal_tangency_exact(&omega, delta).unwrap();
                let cfg = McConfig { samples: 50_000, seed, stream: 0 };
                let mc = internal_tangency_measure(&omega, delta, 2, cfg).unwrap();
                assert!((mc.value - exact).abs() <= 4.0 * mc.std_error, "{exact} {mc:?}");
                assert!(exact <= tangency_constant(2, 1) * delta * omega.volume());
            }
        }
    }

    #[test]
    fn membership() {
        assert!(in_tangency_set(&[vec![0.05], vec![0.5]], 0.1));
        assert!(in_tangency_set(&[vec![0.3], vec![0.35]], 0.1));
        assert!(!in_tangency_set(&[vec![0.3], vec![0.5]], 0.1));
        assert!(in_tangency_set(&[vec![0.3, 0.9], vec![0.5, 0.85]], 0.1));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = TorusGrid::line(128).unwrap();
        let omega = OmegaSet::interval(g, 0.0, 1.0).unwrap();
        assert!(internal_tangency_exact(&omega, 0.1).is_err());
        assert!(internal_tangency_exact(&omega, 0.7).is_err());
        let cfg = McConfig { samples: 100, ..Default::default() };
        assert!(internal_tangency_measure(&omega, 0.1, 2, cfg).is_err());
    }
}
