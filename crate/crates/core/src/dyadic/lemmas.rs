use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{conditional_expectation, cube_averages, hl_maximal, DyadicLevel};
use crate::error::{LabError, Result};
use crate::grid_measure::{mollify, GridFunction, GridMeasure, MollifierFamily};
use crate::interp::{eval, Interpolation};
use crate::maximal::t_grid;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaSample {
    pub sample: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of one inequality check: per-sample sides, the summary pair and
/// the number of samples whose ratio exceeds `1 + tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub samples: Vec<LemmaSample>,
    pub lhs: f64,
    pub rhs: f64,
    pub max_ratio: f64,
    pub violations: usize,
    pub tolerance: f64,
    pub note: Option<String>,
}

impl LemmaReport {
    fn from_samples(lemma: &str, samples: Vec<LemmaSample>, tolerance: f64) -> Self {
        let ratio = |s: &LemmaSample| {
            if s.lhs == 0.0 {
                0.0
            } else if s.rhs == 0.0 {
                f64::INFINITY
            } else {
                s.lhs / s.rhs
            }
        };
        let worst = samples
            .iter()
            .max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
            .copied();
        let violations = samples
            .iter()
            .filter(|s| s.lhs > s.rhs * (1.0 + tolerance) + 1e-15)
            .count();
        Self {
            lemma: lemma.to_string(),
            lhs: worst.map_or(0.0, |s| s.lhs),
            rhs: worst.map_or(0.0, |s| s.rhs),
            max_ratio: worst.as_ref().map_or(0.0, ratio),
            samples,
            violations,
            tolerance,
            note: None,
        }
    }

    /// `sample,lhs,rhs` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample,lhs,rhs\n");
        for r in &self.samples {
            s.push_str(&format!("{},{},{}\n", r.sample, r.lhs, r.rhs));
        }
        s
    }
}

/// Checks `|∫ E_s f(x + r y) dμ(y)| <= 5^d μ(T^d) f*(x)` at the sampled
/// grid points `x`; `x + r y` is formed in `R^d` and wrapped.
pub fn scale1_check(
    f: &GridFunction,
    mu: &GridMeasure,
    level: DyadicLevel,
    r: f64,
    x_samples: &[usize],
) -> Result<LemmaReport> {
    let grid = *f.grid();
    grid.check_same(mu.grid())?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(LabError::InvalidParameter(format!("r = {r} outside (0, 1]")));
    }
    let s = level.s();
    let side = 1usize << s;
    let avg = cube_averages(f, s);
    let fstar = hl_maximal(f);
    let support: Vec<(Vec<f64>, f64)> = mu
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(j, &w)| (grid.coords(j), w))
        .collect();
    let five_d = 5f64.powi(grid.d() as i32);
    let mass = mu.mass();
    let rows = par::map_indexed(x_samples.len(), |i| {
        let x = grid.coords(x_samples[i]);
        let mut acc = 0.0;
        for (y, w) in &support {
            let cube = x.iter().zip(y).fold(0usize, |idx, (xa, ya)| {
                let z = (xa + r * ya).rem_euclid(1.0);
                (idx << s) | ((z * side as f64) as usize).min(side - 1)
            });
            acc += w * avg[cube];
        }
        LemmaSample {
            sample: x_samples[i],
            lhs: acc.abs(),
            rhs: five_d * mass * fstar.values()[x_samples[i]],
        }
    });
    let mut report = LemmaReport::from_samples("scale1", rows, 1e-12);
    if (r * side as f64) > 1.0 {
        report.note = Some(format!(
            "cube side 2^-{s} is smaller than r = {r}; the covering count is not guaranteed"
        ));
    }
    Ok(report)
}

/// Parameters shared by the kernel-regularity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleLemmaConfig {
    /// Constant `c` of the hypothesis `k <= c √s`.
    pub c: f64,
    pub t_samples: usize,
    pub pairs: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for ScaleLemmaConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            t_samples: 16,
            pairs: 100,
            seed: 0,
            tolerance: 0.05,
        }
    }
}

fn check_hypothesis(k: u32, s: u32, c: f64) -> Result<()> {
    if k as f64 > c * (s as f64).sqrt() {
        return Err(LabError::Hypothesis(format!(
            "k = {k} exceeds c·√s = {}",
            c * (s as f64).sqrt()
        )));
    }
    Ok(())
}

/// `√d · ‖φ'‖_∞ · 2^{-(s - (d+1) c √s)}`: the kernel-difference bound for
/// points `2^{-s}` apart, with the derivative of the unit-integral profile
/// made explicit.
fn kernel_difference_bound(s: u32, c: f64, d: usize, lip: f64) -> f64 {
    let df = d as f64;
    df.sqrt() * lip * (-(s as f64 - (df + 1.0) * c * (s as f64).sqrt())).exp2()
}

/// Samples pairs `|y_1 - y_2|_∞ <= 2^{-s}` and compares
/// `sup_{x, t} |μ_k((y_1-x)/t) - μ_k((y_2-x)/t)|` with the bound.
pub fn lipschitz_bound_check(
    mu: &GridMeasure,
    k: u32,
    s: u32,
    family: &MollifierFamily,
    config: &ScaleLemmaConfig,
) -> Result<LemmaReport> {
    check_hypothesis(k, s, config.c)?;
    let grid = *mu.grid();
    let d = grid.d();
    let mu_k = mollify(mu, k, family)?;
    let lip = family.profile_derivative_bound(d);
    let bound = kernel_difference_bound(s, config.c, d, lip);
    let ts = t_grid(config.t_samples)?;
    let step = (-(s as f64)).exp2();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..config.pairs)
        .map(|_| {
            let y1: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            let y2 = y1.iter().map(|y| y + rng.random_range(-step..=step)).collect();
            (y1, y2)
        })
        .collect();
    let rows = par::map_indexed(pairs.len(), |i| {
        let (y1, y2) = &pairs[i];
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        let mut sup = 0.0f64;
        for xi in 0..grid.len() {
            let x = grid.coords(xi);
            for &t in &ts {
                for ax in 0..d {
                    a[ax] = (y1[ax] - x[ax]) / t;
                    b[ax] = (y2[ax] - x[ax]) / t;
                }
                let va = eval(&grid, Interpolation::Multilinear, mu_k.values(), &a);
                let vb = eval(&grid, Interpolation::Multilinear, mu_k.values(), &b);
                sup = sup.max((va - vb).abs());
            }
        }
        LemmaSample {
            sample: i,
            lhs: sup,
            rhs: bound,
        }
    });
    let mut report = LemmaReport::from_samples("scale2", rows, config.tolerance);
    report.note = Some(format!("unit-integral profile has sup|φ'| = {lip}"));
    Ok(report)
}

/// Projects out `E_s f` and compares `M f(x) = max_t |∫ f(y) μ_k((y-x)/t) dy|`
/// with the bound times `‖f - E_s f‖_p`, pointwise and in `L^p`.
#[allow(clippy::too_many_arguments)]
pub fn scale3_check(
    f: &GridFunction,
    mu: &GridMeasure,
    k: u32,
    level: DyadicLevel,
    p: f64,
    family: &MollifierFamily,
    config: &ScaleLemmaConfig,
) -> Result<LemmaReport> {
    let s = level.s();
    check_hypothesis(k, s, config.c)?;
    if p < 1.0 {
        return Err(LabError::InvalidParameter(format!("p = {p} below 1")));
    }
    let grid = *f.grid();
    grid.check_same(mu.grid())?;
    let d = grid.d();
    let projection = conditional_expectation(f, level);
    let f0 = f.sub(&projection)?;
    let mu_k = mollify(mu, k, family)?;
    let lip = family.profile_derivative_bound(d);
    let bound = kernel_difference_bound(s, config.c, d, lip);
    let ts = t_grid(config.t_samples)?;
    let vol = grid.cell_volume();
    let ys: Vec<(Vec<f64>, f64)> = f0
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, &v)| (grid.coords(j), v))
        .collect();
    let m_values = par::map_indexed(grid.len(), |xi| {
        let x = grid.coords(xi);
        let mut arg = vec![0.0; d];
        let mut best = 0.0f64;
        for &t in &ts {
            let mut acc = 0.0;
            for (y, v) in &ys {
                for ax in 0..d {
                    arg[ax] = (y[ax] - x[ax]) / t;
                }
                acc += v * eval(&grid, Interpolation::Multilinear, mu_k.values(), &arg);
            }
            best = best.max((acc * vol).abs());
        }
        best
    });
    let f0_norm = f0.lp_norm(p);
    let rhs = bound * f0_norm;
    let rows = m_values
        .iter()
        .enumerate()
        .map(|(i, &m)| LemmaSample {
            sample: i,
            lhs: m,
            rhs,
        })
        .collect();
    let mut report = LemmaReport::from_samples("scale3", rows, config.tolerance);
    let m_fn = GridFunction::new(grid, m_values)?;
    report.lhs = m_fn.lp_norm(p);
    report.rhs = rhs;
    report.note = Some(format!(
        "removed ‖E_s f‖_p = {}; unit-integral profile has sup|φ'| = {lip}",
        projection.lp_norm(p)
    ));
    Ok(report)
}
