use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::omega::OmegaSet;
use super::operators::ScaleFunction;
use super::tangency::in_tangency_set;
use crate::error::{LabError, Result};
use crate::grid_measure::GridFunction;
use crate::interp::{eval, Interpolation};
use crate::par;

/// Samples per random substream.
pub(crate) const BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub(crate) fn from_values(values: impl Iterator<Item = f64> + Clone, scale: f64) -> Self {
        let m = values.clone().count();
        let mean = values.clone().sum::<f64>() / m as f64;
        let var = if m > 1 {
            values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64
        } else {
            0.0
        };
        Self {
            value: scale * mean,
            std_error: scale * (var / m as f64).sqrt(),
            samples: m,
        }
    }
}

/// Sample count, seed and first substream of a Monte Carlo run. Batch `b`
/// draws from `ChaCha8(seed)` on stream `stream + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0,
            stream: 0,
        }
    }
}

/// Draws `config.samples` uniform points of `Ω^k` (continuous within cells)
/// and maps each through `visit`, batch by batch in a fixed order.
pub(crate) fn sample_tuples<T: Send>(
    omega: &OmegaSet,
    k: usize,
    config: McConfig,
    visit: impl Fn(&[Vec<f64>], &[usize]) -> T + Sync,
) -> Result<Vec<T>> {
    if omega.is_empty() {
        return Err(LabError::EmptySet);
    }
    if config.samples == 0 {
        return Err(LabError::InvalidParameter("zero Monte Carlo samples".into()));
    }
    let grid = *omega.grid();
    let cells = omega.cells();
    let h = grid.spacing();
    let batches = config.samples.div_ceil(BATCH);
    let per_batch = par::map_indexed(batches, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(config.stream.wrapping_add(b as u64));
        let count = BATCH.min(config.samples - b * BATCH);
        let mut out = Vec::with_capacity(count);
        let mut xs = vec![vec![0.0; grid.d()]; k];
        let mut which = vec![0usize; k];
        for _ in 0..count {
            for i in 0..k {
                let c = cells[rng.random_range(0..cells.len())];
                which[i] = c;
                for (a, base) in grid.coords(c).into_iter().enumerate() {
                    xs[i][a] = base + h * rng.random::<f64>();
                }
            }
            out.push(visit(&xs, &which));
        }
        out
    });
    Ok(per_batch.into_iter().flatten().collect())
}

/// `h^d Σ_y Π_i μ_n(x_i + t_i y)`.
fn inner_integral(mu_n: &GridFunction, xs: &[Vec<f64>], ts: &[f64], mode: Interpolation) -> f64 {
    let grid = mu_n.grid();
    let d = grid.d();
    let mut buf = vec![0.0; d];
    let mut acc = 0.0;
    for yi in 0..grid.len() {
        let y = grid.coords(yi);
        let mut prod = 1.0;
        for (x, &t) in xs.iter().zip(ts) {
            for a in 0..d {
                buf[a] = x[a] + t * y[a];
            }
            prod *= eval(grid, mode, mu_n.values(), &buf);
            if prod == 0.0 {
                break;
            }
        }
        acc += prod;
    }
    acc * grid.cell_volume()
}

/// `∫_{Ω^k} ∫ Π_i μ_n(x_i + t(x_i) y) dy dx` split over the tangency set
/// `A_δ` (internal) and its complement (transverse).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongTypeSplit {
    pub delta: f64,
    pub total: McEstimate,
    pub internal: McEstimate,
    pub transverse: McEstimate,
}

fn check_inputs(omega: &OmegaSet, mu_n: &GridFunction, t: &ScaleFunction, k: usize) -> Result<()> {
    omega.grid().check_same(mu_n.grid())?;
    omega.grid().check_same(t.grid())?;
    if !(2..=3).contains(&k) {
        return Err(LabError::InvalidParameter(format!("k = {k} outside {{2, 3}}")));
    }
    Ok(())
}

pub fn restricted_strong_type_split(
    omega: &OmegaSet,
    mu_n: &GridFunction,
    t: &ScaleFunction,
    k: usize,
    delta: f64,
    config: McConfig,
    mode: Interpolation,
) -> Result<StrongTypeSplit> {
    check_inputs(omega, mu_n, t, k)?;
    let rows = sample_tuples(omega, k, config, |xs, cells| {
        let ts: Vec<f64> = cells.iter().map(|&c| t.at(c)).collect();
        (inner_integral(mu_n, xs, &ts, mode), in_tangency_set(xs, delta))
    })?;
    let scale = omega.volume().powi(k as i32);
    let total = McEstimate::from_values(rows.iter().map(|r| r.0), scale);
    let internal = McEstimate::from_values(rows.iter().map(|r| if r.1 { r.0 } else { 0.0 }), scale);
    let transverse =
        McEstimate::from_values(rows.iter().map(|r| if r.1 { 0.0 } else { r.0 }), scale);
    Ok(StrongTypeSplit {
        delta,
        total,
        internal,
        transverse,
    })
}

/// Monte Carlo estimate of `∫_{Ω^k} ∫ Π_i μ_n(x_i + t(x_i) y) dy dx`.
pub fn restricted_strong_type_integral(
    omega: &OmegaSet,
    mu_n: &GridFunction,
    t: &ScaleFunction,
    k: usize,
    config: McConfig,
    mode: Interpolation,
) -> Result<McEstimate> {
    Ok(restricted_strong_type_split(omega, mu_n, t, k, 0.0, config, mode)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_measure::{build_random_salem, mollify, MollifierFamily, TorusGrid};
    use crate::maximal::ScaleKind;

    #[test]
    fn constant_density_gives_volume_power() {
        let g = TorusGrid::line(64).unwrap();
        let omega = OmegaSet::random_dyadic_union(g, 3, 0.5, 1).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let t = ScaleFunction::new(g, ScaleKind::Random { seed: 2 }).unwrap();
        for k in [2, 3] {
            let cfg = McConfig { samples: 500, ..Default::default() };
            let est = restricted_strong_type_integral(&omega, &one, &t, k, cfg, Interpolation::Multilinear)
                .unwrap();
            assert!((est.value - 0.5f64.powi(k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_set_unit_dilation_integrates_to_one() {
        let g = TorusGrid::line(64).unwrap();
        let mu = build_random_salem(g, 2, 4, 2, 3).unwrap();
        let mu_n = mollify(&mu, 3, &MollifierFamily::bump()).unwrap();
        let omega = OmegaSet::interval(g, 0.0, 1.0).unwrap();
        let t = ScaleFunction::new(g, ScaleKind::Constant { value: 1.0 }).unwrap();
        let cfg = McConfig { samples: 4000, seed: 5, stream: 0 };
        let est = restricted_strong_type_integral(&omega, &mu_n, &t, 2, cfg, Interpolation::Multilinear)
            .unwrap();
        assert!((est.value - 1.0).abs() <= 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn split_adds_up_and_is_deterministic() {
        let g = TorusGrid::line(64).unwrap();
        let mu = build_random_salem(g, 2, 4, 2, 3).unwrap();
        let mu_n = mollify(&mu, 3, &MollifierFamily::bump()).unwrap();
        let omega = OmegaSet::random_dyadic_union(g, 4, 0.5, 9).unwrap();
        let t = ScaleFunction::new(g, ScaleKind::Sawtooth { teeth: 3 }).unwrap();
        let cfg = McConfig { samples: 1000, seed: 1, stream: 7 };
        let a = restricted_strong_type_split(&omega, &mu_n, &t, 2, 0.05, cfg, Interpolation::Multilinear)
            .unwrap();
        let b = restricted_strong_type_split(&omega, &mu_n, &t, 2, 0.05, cfg, Interpolation::Multilinear)
            .unwrap();
        assert_eq!(a, b);
        assert!((a.internal.value + a.transverse.value - a.total.value).abs() < 1e-12);
        assert!(a.internal.value >= 0.0 && a.transverse.value >= 0.0);
    }

    #[test]
    fn rejects_empty_and_bad_order() {
        let g = TorusGrid::line(16).unwrap();
        let empty = OmegaSet::from_indicator(g, vec![false; 16], "empty").unwrap();
        let one = GridFunction::constant(g, 1.0);
        let t = ScaleFunction::new(g, ScaleKind::Constant { value: 1.0 }).unwrap();
        let cfg = McConfig::default();
        assert_eq!(
            restricted_strong_type_integral(&empty, &one, &t, 2, cfg, Interpolation::Multilinear),
            Err(LabError::EmptySet)
        );
        let full = OmegaSet::interval(g, 0.0, 1.0).unwrap();
        assert!(restricted_strong_type_integral(&full, &one, &t, 4, cfg, Interpolation::Multilinear).is_err());
    }
}
