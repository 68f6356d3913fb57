use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid_measure::{mollify, GridFunction, GridMeasure, MollifierFamily, TorusGrid};
use crate::interp::{eval, for_each_weight, Interpolation};
use crate::par;

/// Kernel samples below this fraction of the peak are treated as zero.
const KERNEL_CUTOFF: f64 = 1e-12;

/// Uniform grid of `samples` dilations in `[1, 2]`, endpoints included.
pub fn t_grid(samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(LabError::InvalidParameter(format!(
            "need at least 2 t samples, got {samples}"
        )));
    }
    let step = 1.0 / (samples - 1) as f64;
    Ok((0..samples).map(|i| 1.0 + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleKind {
    Constant { value: f64 },
    Random { seed: u64 },
    /// `1 + frac(teeth · Σ_a x_a)`.
    Sawtooth { teeth: u32 },
}

/// A measurable choice of dilation `t(x) ∈ [1, 2]`, sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFunction {
    grid: TorusGrid,
    values: Vec<f64>,
    kind: ScaleKind,
}

impl ScaleFunction {
    pub fn new(grid: TorusGrid, kind: ScaleKind) -> Result<Self> {
        let values = match kind {
            ScaleKind::Constant { value } => vec![value; grid.len()],
            ScaleKind::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..grid.len()).map(|_| rng.random_range(1.0..=2.0)).collect()
            }
            ScaleKind::Sawtooth { teeth } => (0..grid.len())
                .map(|i| {
                    let s: f64 = grid.coords(i).iter().sum();
                    1.0 + (teeth as f64 * s).fract()
                })
                .collect(),
        };
        Self::from_values(grid, values, kind)
    }

    pub fn from_values(grid: TorusGrid, values: Vec<f64>, kind: ScaleKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} scale values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(1.0..=2.0).contains(*v)) {
            return Err(LabError::InvalidParameter(format!("scale value {v} outside [1, 2]")));
        }
        Ok(Self { grid, values, kind })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ScaleKind {
        self.kind
    }

    pub fn at(&self, flat: usize) -> f64 {
        self.values[flat]
    }
}

/// Shortest circular arc `(start, len)` of axis indices covering `occupied`.
fn support_arc(occupied: &[bool]) -> Option<(i64, usize)> {
    let n = occupied.len();
    let idx: Vec<usize> = (0..n).filter(|&i| occupied[i]).collect();
    if idx.is_empty() {
        return None;
    }
    if idx.len() == n {
        return Some((0, n));
    }
    let mut best_gap = 0;
    let mut start = idx[0];
    for (w, &i) in idx.iter().enumerate() {
        let next = if w + 1 < idx.len() { idx[w + 1] } else { idx[0] + n };
        if next - i > best_gap {
            best_gap = next - i;
            start = next % n;
        }
    }
    Some((start as i64, n + 1 - best_gap))
}

/// Per-axis support arcs of the cells where `keep` holds.
fn axis_arcs(grid: &TorusGrid, keep: impl Fn(usize) -> bool) -> Option<Vec<(i64, usize)>> {
    let n = grid.n();
    let mut occ = vec![vec![false; n]; grid.d()];
    for i in 0..grid.len() {
        if keep(i) {
            for (a, m) in grid.unravel(i).into_iter().enumerate() {
                occ[a][m] = true;
            }
        }
    }
    occ.iter().map(|o| support_arc(o)).collect()
}

/// Kernel samples with representative coordinates and cell weights.
struct KernelSupport {
    /// `(y, μ_n(y) N^{-d})`.
    points: Vec<(Vec<f64>, f64)>,
    /// Per-axis range of the representatives.
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl KernelSupport {
    fn new(mu_n: &GridFunction) -> Self {
        let grid = *mu_n.grid();
        let v = mu_n.values();
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let cutoff = KERNEL_CUTOFF * peak;
        let keep = |i: usize| v[i].abs() > cutoff;
        let n = grid.n() as i64;
        let nf = grid.n() as f64;
        // Arcs that wrap past the top edge start at a negative coordinate.
        let arcs: Vec<(i64, usize)> = axis_arcs(&grid, keep)
            .unwrap_or_else(|| vec![(0, grid.n()); grid.d()])
            .into_iter()
            .map(|(s, l)| if s + l as i64 > n { (s - n, l) } else { (s, l) })
            .collect();
        let vol = grid.cell_volume();
        let points = (0..grid.len())
            .filter(|&i| keep(i))
            .map(|i| {
                let y = grid
                    .unravel(i)
                    .iter()
                    .zip(&arcs)
                    .map(|(&m, &(s, _))| (s + (m as i64 - s).rem_euclid(n)) as f64 / nf)
                    .collect();
                (y, v[i] * vol)
            })
            .collect();
        let lo = arcs.iter().map(|&(s, _)| s as f64 / nf).collect();
        let hi = arcs
            .iter()
            .map(|&(s, l)| (s + l as i64 - 1) as f64 / nf)
            .collect();
        Self { points, lo, hi }
    }

    /// `Σ_y w_y f(x + t y)`.
    #[inline]
    fn apply(&self, grid: &TorusGrid, mode: Interpolation, f: &[f64], x: &[f64], t: f64, buf: &mut [f64]) -> f64 {
        let mut acc = 0.0;
        for (y, w) in &self.points {
            for a in 0..x.len() {
                buf[a] = x[a] + t * y[a];
            }
            acc += w * eval(grid, mode, f, buf);
        }
        acc
    }
}

/// `max_{t ∈ T} ∫ f(x + dilation · t y) μ_n(y) dy` over the uniform `t` grid.
pub fn restricted_maximal_dilated(
    f: &GridFunction,
    mu_n: &GridFunction,
    dilation: f64,
    t_samples: usize,
    mode: Interpolation,
) -> Result<GridFunction> {
    let grid = *f.grid();
    grid.check_same(mu_n.grid())?;
    if !(dilation > 0.0) {
        return Err(LabError::InvalidParameter(format!("dilation {dilation} not positive")));
    }
    let ts = t_grid(t_samples)?;
    let kernel = KernelSupport::new(mu_n);
    let values = par::map_indexed(grid.len(), |i| {
        let x = grid.coords(i);
        let mut buf = vec![0.0; grid.d()];
        ts.iter()
            .map(|&t| kernel.apply(&grid, mode, f.values(), &x, dilation * t, &mut buf))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    GridFunction::new(grid, values)
}

/// `M_n f(x) = max_{t ∈ T} ∫ f(x + t y) μ_n(y) dy`.
pub fn restricted_maximal(
    f: &GridFunction,
    mu_n: &GridFunction,
    t_samples: usize,
    mode: Interpolation,
) -> Result<GridFunction> {
    restricted_maximal_dilated(f, mu_n, 1.0, t_samples, mode)
}

/// Bound on `sup_{t ∈ [1,2]} - max_{t ∈ T}` for [`restricted_maximal`]:
/// half the grid step times `Σ_a L_a Σ_y |w_y| |y_a|`, with `L_a` the
/// Lipschitz constant of the interpolant of `f` along axis `a`.
pub fn t_discretization_bound(
    f: &GridFunction,
    mu_n: &GridFunction,
    t_samples: usize,
) -> Result<f64> {
    let grid = *f.grid();
    grid.check_same(mu_n.grid())?;
    t_grid(t_samples)?;
    let kernel = KernelSupport::new(mu_n);
    let v = f.values();
    let nf = grid.n() as f64;
    let mut total = 0.0;
    for a in 0..grid.d() {
        let mut shift = vec![0i64; grid.d()];
        shift[a] = 1;
        let jump = (0..grid.len())
            .map(|i| (v[grid.ravel_shifted(&grid.unravel(i), &shift)] - v[i]).abs())
            .fold(0.0, f64::max);
        let moment: f64 = kernel.points.iter().map(|(y, w)| w.abs() * y[a].abs()).sum();
        total += nf * jump * moment;
    }
    Ok(0.5 / (t_samples - 1) as f64 * total)
}

/// `max_{ν ∈ 0..=nu_max} max_{t ∈ T} ∫ f(x + 2^{-ν} t y) μ_n(y) dy`.
pub fn full_maximal(
    f: &GridFunction,
    mu: &GridMeasure,
    family: &MollifierFamily,
    n: u32,
    nu_max: u32,
    t_samples: usize,
    mode: Interpolation,
) -> Result<GridFunction> {
    let mu_n = mollify(mu, n, family)?;
    let mut best = restricted_maximal_dilated(f, &mu_n, 1.0, t_samples, mode)?;
    for nu in 1..=nu_max {
        let dil = (-(nu as f64)).exp2();
        let next = restricted_maximal_dilated(f, &mu_n, dil, t_samples, mode)?;
        best.values_mut()
            .iter_mut()
            .zip(next.values())
            .for_each(|(b, v)| *b = b.max(*v));
    }
    Ok(best)
}

/// Support of a maximal-operator output against the per-axis prediction
/// `supp f - [2^{-ν_max}, 2] · supp μ_n`, widened by one cell for
/// interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportGrowth {
    pub f_support_cells: usize,
    pub output_support_cells: usize,
    pub predicted_cells: usize,
    pub outside: usize,
    pub contained: bool,
}

pub fn support_growth_check(
    f: &GridFunction,
    output: &GridFunction,
    mu_n: &GridFunction,
    nu_max: u32,
) -> Result<SupportGrowth> {
    let grid = *f.grid();
    grid.check_same(output.grid())?;
    grid.check_same(mu_n.grid())?;
    let fv = f.values();
    let f_arcs = axis_arcs(&grid, |i| fv[i] != 0.0);
    let out_cells: Vec<usize> = (0..grid.len()).filter(|&i| output.values()[i] != 0.0).collect();
    let f_support_cells = fv.iter().filter(|v| **v != 0.0).count();
    let Some(f_arcs) = f_arcs else {
        return Ok(SupportGrowth {
            f_support_cells,
            output_support_cells: out_cells.len(),
            predicted_cells: 0,
            outside: out_cells.len(),
            contained: out_cells.is_empty(),
        });
    };
    let kernel = KernelSupport::new(mu_n);
    let tmin = (-(nu_max as f64)).exp2();
    let n = grid.n() as i64;
    let nf = grid.n() as f64;
    // Predicted arc per axis as (start, len) in cells.
    let predicted: Vec<(i64, i64)> = (0..grid.d())
        .map(|a| {
            let (s, l) = f_arcs[a];
            let lo = kernel.lo[a];
            let hi = kernel.hi[a];
            let lo_t = if lo < 0.0 { 2.0 * lo } else { tmin * lo };
            let hi_t = if hi > 0.0 { 2.0 * hi } else { tmin * hi };
            let start = s - (hi_t * nf).ceil() as i64 - 1;
            let end = s + l as i64 - 1 - (lo_t * nf).floor() as i64 + 1;
            (start, (end - start + 1).min(n))
        })
        .collect();
    let inside = |i: usize| {
        grid.unravel(i)
            .iter()
            .zip(&predicted)
            .all(|(&m, &(s, l))| (m as i64 - s).rem_euclid(n) < l)
    };
    let outside = out_cells.iter().filter(|&&i| !inside(i)).count();
    let predicted_cells = predicted.iter().map(|&(_, l)| l as usize).product();
    Ok(SupportGrowth {
        f_support_cells,
        output_support_cells: out_cells.len(),
        predicted_cells,
        outside,
        contained: outside == 0,
    })
}

/// `T f(x) = ∫ f(x + t(x) y) μ_n(y) dy` for a fixed scale selector.
pub fn linearized_operator(
    f: &GridFunction,
    mu_n: &GridFunction,
    t: &ScaleFunction,
    mode: Interpolation,
) -> Result<GridFunction> {
    let grid = *f.grid();
    grid.check_same(mu_n.grid())?;
    grid.check_same(t.grid())?;
    let kernel = KernelSupport::new(mu_n);
    let values = par::map_indexed(grid.len(), |i| {
        let mut buf = vec![0.0; grid.d()];
        kernel.apply(&grid, mode, f.values(), &grid.coords(i), t.at(i), &mut buf)
    });
    GridFunction::new(grid, values)
}

/// Adjoint of [`linearized_operator`] for `⟨a, b⟩ = N^{-d} Σ a b`, formed
/// by scattering each `g(x) w_y` onto the interpolation stencil of
/// `x + t(x) y`.
pub fn linearized_adjoint(
    g: &GridFunction,
    mu_n: &GridFunction,
    t: &ScaleFunction,
    mode: Interpolation,
) -> Result<GridFunction> {
    let grid = *g.grid();
    grid.check_same(mu_n.grid())?;
    grid.check_same(t.grid())?;
    let kernel = KernelSupport::new(mu_n);
    let chunks = 64.min(grid.len());
    let per = grid.len().div_ceil(chunks);
    let partials = par::map_indexed(chunks, |c| {
        let mut acc = vec![0.0; grid.len()];
        let mut buf = vec![0.0; grid.d()];
        for x in c * per..((c + 1) * per).min(grid.len()) {
            let gx = g.values()[x];
            if gx == 0.0 {
                continue;
            }
            let xc = grid.coords(x);
            let tx = t.at(x);
            for (y, w) in &kernel.points {
                for a in 0..xc.len() {
                    buf[a] = xc[a] + tx * y[a];
                }
                let scale = gx * w;
                for_each_weight(&grid, mode, &buf, |m, c| acc[m] += scale * c);
            }
        }
        acc
    });
    let mut out = vec![0.0; grid.len()];
    for part in partials {
        out.iter_mut().zip(part).for_each(|(o, p)| *o += p);
    }
    GridFunction::new(grid, out)
}

/// `y ↦ ∫ g(x - t(x) y) μ_n(x) dx` with `y ∈ [0,1)^d`.
pub fn dual_operator(
    g: &GridFunction,
    mu_n: &GridFunction,
    t: &ScaleFunction,
    mode: Interpolation,
) -> Result<GridFunction> {
    let grid = *g.grid();
    grid.check_same(mu_n.grid())?;
    grid.check_same(t.grid())?;
    let vol = grid.cell_volume();
    let xs: Vec<(Vec<f64>, f64, f64)> = (0..grid.len())
        .filter(|&x| mu_n.values()[x] != 0.0)
        .map(|x| (grid.coords(x), t.at(x), mu_n.values()[x] * vol))
        .collect();
    let values = par::map_indexed(grid.len(), |yi| {
        let y = grid.coords(yi);
        let mut buf = vec![0.0; grid.d()];
        let mut acc = 0.0;
        for (x, tx, w) in &xs {
            for a in 0..y.len() {
                buf[a] = x[a] - tx * y[a];
            }
            acc += w * eval(&grid, mode, g.values(), &buf);
        }
        acc
    });
    GridFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_measure::{build_cantor, build_lebesgue, build_random_salem};

    fn random_fn(grid: TorusGrid, seed: u64, lo: f64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len()).map(|_| rng.random_range(lo..1.0)).collect();
        GridFunction::new(grid, v).unwrap()
    }

    #[test]
    fn arcs() {
        assert_eq!(support_arc(&[false, true, true, false]), Some((1, 2)));
        assert_eq!(support_arc(&[true, false, false, true]), Some((3, 2)));
        assert_eq!(support_arc(&[true, true]), Some((0, 2)));
        assert_eq!(support_arc(&[false, false]), None);
        assert_eq!(support_arc(&[false, false, true, false]), Some((2, 1)));
    }

    #[test]
    fn t_grid_endpoints() {
        let ts = t_grid(5).unwrap();
        assert_eq!(ts, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!(t_grid(1).is_err());
    }

    #[test]
    fn scale_functions_in_range() {
        let g = TorusGrid::new(2, 16).unwrap();
        for kind in [
            ScaleKind::Constant { value: 1.5 },
            ScaleKind::Random { seed: 3 },
            ScaleKind::Sawtooth { teeth: 5 },
        ] {
            let t = ScaleFunction::new(g, kind).unwrap();
            assert!(t.values().iter().all(|v| (1.0..=2.0).contains(v)));
        }
        assert!(ScaleFunction::new(g, ScaleKind::Constant { value: 2.5 }).is_err());
    }

    #[test]
    fn constant_input_is_preserved() {
        let g = TorusGrid::line(128).unwrap();
        let mu = build_cantor(g, 1.0 / 3.0, 3).unwrap();
        let mu_n = mollify(&mu, 4, &MollifierFamily::bump()).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let m = restricted_maximal(&one, &mu_n, 8, Interpolation::Multilinear).unwrap();
        assert!(m.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn lebesgue_half_indicator_matches_direct_sum() {
        let g = TorusGrid::line(64).unwrap();
        let mu_n = mollify(&build_lebesgue(g), 3, &MollifierFamily::bump()).unwrap();
        let f = GridFunction::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        let ts = t_grid(16).unwrap();
        let m = restricted_maximal(&f, &mu_n, 16, Interpolation::Multilinear).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let xi = rng.random_range(0..64usize);
            let x = xi as f64 / 64.0;
            // Oracle: average over the dilated copy, summed cell by cell.
            let oracle = ts
                .iter()
                .map(|&t| {
                    (0..64)
                        .map(|j| {
                            let z = (x + t * j as f64 / 64.0).rem_euclid(1.0) * 64.0;
                            let i0 = z.floor() as usize % 64;
                            let fr = z - z.floor();
                            let fv = |i: usize| if i < 32 { 1.0 } else { 0.0 };
                            (1.0 - fr) * fv(i0) + fr * fv((i0 + 1) % 64)
                        })
                        .sum::<f64>()
                        / 64.0
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((m.values()[xi] - oracle).abs() < 1e-12);
            assert!(m.values()[xi] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn monotone_in_f() {
        let g = TorusGrid::line(64).unwrap();
        let mu = build_random_salem(g, 2, 4, 3, 1).unwrap();
        let mu_n = mollify(&mu, 3, &MollifierFamily::bump()).unwrap();
        let f = random_fn(g, 2, 0.0);
        let bigger = GridFunction::new(g, f.values().iter().map(|v| v + 0.1).collect()).unwrap();
        let a = restricted_maximal(&f, &mu_n, 8, Interpolation::Multilinear).unwrap();
        let b = restricted_maximal(&bigger, &mu_n, 8, Interpolation::Multilinear).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
        assert!(a.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn t_refinement_within_bound() {
        let g = TorusGrid::line(128).unwrap();
        let mu = build_cantor(g, 1.0 / 3.0, 4).unwrap();
        let mu_n = mollify(&mu, 4, &MollifierFamily::bump()).unwrap();
        let f = random_fn(g, 3, 0.0);
        let a = restricted_maximal(&f, &mu_n, 32, Interpolation::Multilinear).unwrap();
        let b = restricted_maximal(&f, &mu_n, 64, Interpolation::Multilinear).unwrap();
        let bound = t_discretization_bound(&f, &mu_n, 32).unwrap();
        let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= bound, "{diff} > {bound}");
    }

    #[test]
    fn full_maximal_properties() {
        let g = TorusGrid::line(128).unwrap();
        let mu = build_cantor(g, 1.0 / 3.0, 4).unwrap();
        let fam = MollifierFamily::bump();
        let one = GridFunction::constant(g, 1.0);
        let m = full_maximal(&one, &mu, &fam, 4, 3, 8, Interpolation::Multilinear).unwrap();
        assert!(m.values().iter().all(|v| (v - 1.0).abs() < 1e-10));

        let f = GridFunction::from_fn(g, |x| if (0.4..0.45).contains(&x[0]) { 1.0 } else { 0.0 });
        let full = full_maximal(&f, &mu, &fam, 4, 3, 8, Interpolation::Multilinear).unwrap();
        let mu_n = mollify(&mu, 4, &fam).unwrap();
        let base = restricted_maximal(&f, &mu_n, 8, Interpolation::Multilinear).unwrap();
        assert!(full.values().iter().zip(base.values()).all(|(a, b)| a >= b));
        assert!(full.values().iter().all(|v| *v >= 0.0));
        let growth = support_growth_check(&f, &full, &mu_n, 3).unwrap();
        assert!(growth.contained, "{growth:?}");

        // A concentrated kernel keeps the predicted support local.
        let point = crate::grid_measure::build_dirac(g);
        let local = full_maximal(&f, &point, &fam, 4, 3, 8, Interpolation::Multilinear).unwrap();
        let point_n = mollify(&point, 4, &fam).unwrap();
        let growth = support_growth_check(&f, &local, &point_n, 3).unwrap();
        assert!(growth.contained, "{growth:?}");
        assert!(growth.predicted_cells < 40, "{growth:?}");
        assert!(growth.output_support_cells > growth.f_support_cells);
    }

    #[test]
    fn dual_operator_trivial_cases() {
        let g = TorusGrid::line(64).unwrap();
        let mu = build_cantor(g, 0.25, 2).unwrap();
        let mu_n = mollify(&mu, 3, &MollifierFamily::bump()).unwrap();
        let t = ScaleFunction::new(g, ScaleKind::Random { seed: 1 }).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let d = dual_operator(&one, &mu_n, &t, Interpolation::Multilinear).unwrap();
        assert!(d.values().iter().all(|v| (v - mu_n.integral()).abs() < 1e-10));

        let leb = GridFunction::constant(g, 1.0);
        let t1 = ScaleFunction::new(g, ScaleKind::Constant { value: 1.0 }).unwrap();
        let gf = random_fn(g, 5, -1.0);
        let d = dual_operator(&gf, &leb, &t1, Interpolation::Multilinear).unwrap();
        assert!(d.values().iter().all(|v| (v - gf.integral()).abs() < 1e-12));
    }

    #[test]
    fn pairing_identity() {
        for grid in [TorusGrid::line(64).unwrap(), TorusGrid::new(2, 16).unwrap()] {
            let mu = build_random_salem(grid, 2, 4, 2, 7).unwrap();
            let mu_n = mollify(&mu, 2, &MollifierFamily::bump()).unwrap();
            for seed in 0..3 {
                let f = random_fn(grid, 10 + seed, -1.0);
                let g = random_fn(grid, 20 + seed, -1.0);
                let t = ScaleFunction::new(grid, ScaleKind::Random { seed }).unwrap();
                let tf = linearized_operator(&f, &mu_n, &t, Interpolation::Multilinear).unwrap();
                let tg = linearized_adjoint(&g, &mu_n, &t, Interpolation::Multilinear).unwrap();
                let lhs = g.inner(&tf).unwrap();
                let rhs = f.inner(&tg).unwrap();
                assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1.0));
            }
        }
    }
}
