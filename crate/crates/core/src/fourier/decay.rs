use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dft, Spectrum};
use crate::error::{LabError, Result};
use crate::fft::fft_nd;
use crate::gowers::{box_tensor, box_value_direct_flat, MemoryBudget};
use crate::grid_measure::{mollify, GridFunction, GridMeasure, MollifierFamily, TorusGrid};
use crate::par;
use crate::regression::fit_line;

/// Magnitudes below this fraction of `|c(0)|` count as vanishing.
const VANISHING: f64 = 1e-12;

/// Inclusive range of dyadic frequency bands; band `b` is `2^b <= |ξ| < 2^{b+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub min_band: u32,
    pub max_band: u32,
}

impl FitWindow {
    pub fn new(min_band: u32, max_band: u32) -> Self {
        Self { min_band, max_band }
    }

    /// Bands `0..=log2(N) - 3`, i.e. `|ξ| < N/4`, leaving out the top octave.
    pub fn classical_default(grid: &TorusGrid) -> Self {
        Self::new(0, grid.log2_n().saturating_sub(3))
    }

    /// Bands below the mollification cutoff `2^{n-1}`, capped by
    /// [`FitWindow::classical_default`].
    pub fn mollified_default(grid: &TorusGrid, n: u32) -> Self {
        let cap = Self::classical_default(grid).max_band;
        Self::new(0, n.saturating_sub(2).min(cap))
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.min_band > self.max_band {
            return Err(LabError::EmptyBand(format!(
                "min band {} above max band {}",
                self.min_band, self.max_band
            )));
        }
        if (1u64 << (self.max_band + 1)) > (n / 2) as u64 {
            return Err(LabError::InvalidParameter(format!(
                "band {} exceeds the Nyquist range of N = {n}",
                self.max_band
            )));
        }
        Ok(())
    }
}

/// Which frequencies of a higher-order slice enter the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SliceMode {
    /// All frequencies in each band.
    Full,
    /// Frequencies with a single nonzero coordinate.
    Axes,
    /// Integer multiples of `count` random primitive directions.
    Directions { count: usize, seed: u64 },
    /// Slowest-decaying of the axis fit and every direction fit.
    Worst { count: usize, seed: u64 },
}

impl Default for SliceMode {
    fn default() -> Self {
        SliceMode::Worst { count: 8, seed: 0 }
    }
}

/// Power law `|c(ξ)| ≈ C (1+|ξ|)^{-exponent}` fitted to a band envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub constant: f64,
    pub residual: f64,
    pub window: FitWindow,
    pub quantile: f64,
    /// 0 for the classical spectrum, `j` for the slice of `Δ^j`.
    pub order: u32,
    /// Dimension estimate: `2·exponent/(order+1)` clamped to `[0, d]`.
    pub beta: f64,
    pub degenerate: bool,
    pub note: Option<String>,
    pub direction: String,
    /// `(band centre, envelope value)` pairs used in the regression.
    pub bands: Vec<(f64, f64)>,
}

fn quantile_of(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len();
    let rank = ((q * m as f64).ceil() as usize).clamp(1, m);
    values[rank - 1]
}

fn band_of(r: f64) -> Option<u32> {
    if r < 1.0 {
        None
    } else {
        Some(r.log2().floor() as u32)
    }
}

/// Fits the envelope of `(|ξ|, |c|)` samples.
#[allow(clippy::too_many_arguments)]
fn fit_envelope(
    samples: &[(f64, f64)],
    zero: f64,
    window: FitWindow,
    quantile: f64,
    order: u32,
    d: usize,
    direction: String,
) -> Result<DecayFit> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(LabError::InvalidParameter(format!("quantile {quantile}")));
    }
    let nb = (window.max_band - window.min_band + 1) as usize;
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); nb];
    for &(r, m) in samples {
        if let Some(b) = band_of(r) {
            if b >= window.min_band && b <= window.max_band {
                buckets[(b - window.min_band) as usize].push(m);
            }
        }
    }
    if buckets.iter().all(|b| b.is_empty()) {
        return Err(LabError::EmptyBand(format!(
            "no frequencies in bands {}..={} ({direction})",
            window.min_band, window.max_band
        )));
    }
    let envelopes = par::map_indexed(nb, |i| {
        let mut v = buckets[i].clone();
        if v.is_empty() {
            None
        } else {
            Some(quantile_of(&mut v, quantile))
        }
    });
    let floor = VANISHING * zero.abs().max(f64::MIN_POSITIVE);
    let beta_of = |exp: f64| (2.0 * exp / (order as f64 + 1.0)).clamp(0.0, d as f64);
    if envelopes.iter().flatten().all(|&e| e <= floor) {
        let exponent = d as f64 * (order as f64 + 1.0) / 2.0;
        return Ok(DecayFit {
            exponent,
            constant: 0.0,
            residual: 0.0,
            window,
            quantile,
            order,
            beta: d as f64,
            degenerate: true,
            note: Some("degenerate: all nonzero frequencies vanish".into()),
            direction,
            bands: Vec::new(),
        });
    }
    let bands: Vec<(f64, f64)> = envelopes
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            let b = window.min_band + i as u32;
            e.filter(|&e| e > floor)
                .map(|e| (2f64.powf(b as f64 + 0.5), e))
        })
        .collect();
    if bands.len() < 2 {
        return Err(LabError::TooFewPoints {
            needed: 2,
            got: bands.len(),
        });
    }
    let xs: Vec<f64> = bands.iter().map(|(c, _)| (1.0 + c).ln()).collect();
    let ys: Vec<f64> = bands.iter().map(|(_, e)| e.ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    let exponent = -fit.slope;
    Ok(DecayFit {
        exponent,
        constant: fit.intercept.exp(),
        residual: fit.rms,
        window,
        quantile,
        order,
        beta: beta_of(exponent),
        degenerate: false,
        note: None,
        direction,
        bands,
    })
}

/// Classical decay fit of `|μ̂(ξ)|`; `beta` is the Fourier-dimension estimate.
pub fn fourier_decay_fit(mu: &GridMeasure, window: FitWindow, quantile: f64) -> Result<DecayFit> {
    let grid = mu.grid();
    window.validate(grid.n())?;
    let spec = mu.dft();
    let samples = spec.magnitudes();
    fit_envelope(
        &samples,
        spec.zero_coefficient().norm(),
        window,
        quantile,
        0,
        grid.d(),
        "full".into(),
    )
}

/// Coefficients `c(0; η)` of `Δ^j f`, `η ∈ Z^{jd}`.
///
/// Computed from the marginal `S(u) = ∫ Δ^j f(x;u) dx`, whose transform is the
/// `ξ = 0` slice of the full `(j+1)d`-dimensional spectrum.
pub fn box_slice_spectrum(f: &GridFunction, j: u32, budget: MemoryBudget) -> Result<Spectrum> {
    if j == 0 || j > 3 {
        return Err(LabError::InvalidParameter(format!("slice order {j} outside 1..=3")));
    }
    let grid = *f.grid();
    let cells = grid.len();
    let slots = (cells as u128).pow(j);
    budget.check(slots * 16)?;
    let slots = slots as usize;
    let vol = grid.cell_volume();
    let marginal: Vec<Complex64> = par::map_indexed(slots, |u| {
        let s: f64 = (0..cells)
            .map(|x| box_value_direct_flat(f, j, x, u))
            .sum();
        Complex64::new(s * vol, 0.0)
    });
    let mut buf = marginal;
    let dims = vec![grid.n(); grid.d() * j as usize];
    fft_nd(&mut buf, &dims, false);
    let norm = 1.0 / slots as f64;
    buf.iter_mut().for_each(|c| *c *= norm);
    Ok(Spectrum::new(dims, buf))
}

fn primitive_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<i64>> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<i64>> = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 10_000 {
        attempts += 1;
        let v: Vec<i64> = (0..dim).map(|_| rng.random_range(-3i64..=3)).collect();
        let nz: Vec<i64> = v.iter().copied().filter(|&x| x != 0).collect();
        if nz.len() < 2 || nz.iter().fold(0, |g, &x| gcd(g, x)) != 1 {
            continue;
        }
        let neg: Vec<i64> = v.iter().map(|x| -x).collect();
        if !out.contains(&v) && !out.contains(&neg) {
            out.push(v);
        }
    }
    out
}

fn fit_slice(
    spec: &Spectrum,
    window: FitWindow,
    quantile: f64,
    order: u32,
    d: usize,
    mode: SliceMode,
) -> Result<DecayFit> {
    let n = spec.dims()[0] as i64;
    let zero = spec.zero_coefficient().norm();
    let radius = |eta: &[i64]| eta.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
    let axes = || {
        let dim = spec.dims().len();
        let mut s = Vec::new();
        for a in 0..dim {
            for k in (-n / 2)..(n / 2) {
                if k == 0 {
                    continue;
                }
                let mut eta = vec![0i64; dim];
                eta[a] = k;
                s.push((k.abs() as f64, spec.at(&eta).norm()));
            }
        }
        fit_envelope(&s, zero, window, quantile, order, d, "axes".into())
    };
    let along = |v: &[i64]| {
        let mut s = Vec::new();
        let vmax = v.iter().map(|x| x.abs()).max().unwrap_or(1);
        for m in 1..=((n / 2 - 1) / vmax) {
            let eta: Vec<i64> = v.iter().map(|x| m * x).collect();
            s.push((radius(&eta), spec.at(&eta).norm()));
        }
        let label = format!(
            "dir({})",
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        );
        fit_envelope(&s, zero, window, quantile, order, d, label)
    };
    match mode {
        SliceMode::Full => {
            let s = spec.magnitudes();
            fit_envelope(&s, zero, window, quantile, order, d, "full".into())
        }
        SliceMode::Axes => axes(),
        SliceMode::Directions { count, seed } => {
            let dirs = primitive_directions(spec.dims().len(), count, seed);
            dirs.iter()
                .filter_map(|v| along(v).ok())
                .min_by(|a, b| a.exponent.total_cmp(&b.exponent))
                .ok_or_else(|| LabError::EmptyBand("no usable direction".into()))
        }
        SliceMode::Worst { count, seed } => {
            let mut fits = vec![axes()?];
            for v in primitive_directions(spec.dims().len(), count, seed) {
                if let Ok(f) = along(&v) {
                    fits.push(f);
                }
            }
            Ok(fits
                .into_iter()
                .min_by(|a, b| a.exponent.total_cmp(&b.exponent))
                .expect("axis fit present"))
        }
    }
}

/// Decay of the slice `c(0; η)` of `Δ^j μ_n`; `beta = 2·exponent/(j+1)`.
#[allow(clippy::too_many_arguments)]
pub fn higher_order_decay_fit(
    mu: &GridMeasure,
    j: u32,
    n: u32,
    family: &MollifierFamily,
    window: FitWindow,
    quantile: f64,
    mode: SliceMode,
    budget: MemoryBudget,
) -> Result<DecayFit> {
    let grid = mu.grid();
    if j == 0 || j > 3 || (j as usize + 1) * grid.d() > 4 {
        return Err(LabError::InvalidParameter(format!(
            "order j = {j} with d = {} needs 1 <= j <= 3 and (j+1)d <= 4",
            grid.d()
        )));
    }
    window.validate(grid.n())?;
    let mu_n = mollify(mu, n, family)?;
    let spec = box_slice_spectrum(&mu_n, j, budget)?;
    fit_slice(&spec, window, quantile, j, grid.d(), mode)
}

/// Envelope fit over the full `(j+1)d`-dimensional spectrum of the
/// materialised box tensor `Δ^j μ_n`.
#[allow(clippy::too_many_arguments)]
pub fn full_tensor_decay_fit(
    mu: &GridMeasure,
    j: u32,
    n: u32,
    family: &MollifierFamily,
    window: FitWindow,
    quantile: f64,
    budget: MemoryBudget,
) -> Result<DecayFit> {
    let grid = mu.grid();
    window.validate(grid.n())?;
    let mu_n = mollify(mu, n, family)?;
    let tensor = box_tensor(&mu_n, j, budget)?;
    budget.check(tensor.values().len() as u128 * 16)?;
    let dims = vec![grid.n(); grid.d() * (j as usize + 1)];
    let mut buf: Vec<Complex64> = tensor
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_nd(&mut buf, &dims, false);
    let norm = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|c| *c *= norm);
    let spec = Spectrum::new(dims, buf);
    fit_slice(&spec, window, quantile, j, grid.d(), SliceMode::Full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::dft;
    use crate::grid_measure::{build_cantor, build_dirac, build_lebesgue, build_random_salem};
    use std::f64::consts::PI;

    #[test]
    fn dirac_has_no_decay() {
        let g = TorusGrid::line(1024).unwrap();
        let fit = fourier_decay_fit(&build_dirac(g), FitWindow::classical_default(&g), 1.0).unwrap();
        assert!(fit.beta <= 0.05, "{fit:?}");
        assert!(!fit.degenerate);
    }

    #[test]
    fn lebesgue_is_degenerate() {
        let g = TorusGrid::line(256).unwrap();
        let fit =
            fourier_decay_fit(&build_lebesgue(g), FitWindow::classical_default(&g), 1.0).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.beta, 1.0);
        assert!(fit.note.unwrap().contains("all nonzero frequencies vanish"));
    }

    /// Oracle: the transform at ξ = 3^m, evaluated by direct summation.
    #[test]
    fn cantor_triadic_frequencies_do_not_decay() {
        let g = TorusGrid::line(4096).unwrap();
        let mu = build_cantor(g, 1.0 / 3.0, 7).unwrap();
        let direct = |xi: f64| {
            let (re, im) = mu
                .weights()
                .iter()
                .enumerate()
                .fold((0.0, 0.0), |(re, im), (i, w)| {
                    let ph = -2.0 * PI * xi * i as f64 / 4096.0;
                    (re + w * ph.cos(), im + w * ph.sin())
                });
            (re * re + im * im).sqrt()
        };
        let base = direct(1.0);
        for m in 1..=5 {
            let v = direct(3f64.powi(m));
            // The grid's cell averaging contributes a sinc factor near 1.
            assert!((v / base - 1.0).abs() < 0.06, "m={m}: {v} vs {base}");
        }
        let fit = fourier_decay_fit(&mu, FitWindow::classical_default(&g), 1.0).unwrap();
        assert!(fit.beta <= 0.1, "{fit:?}");
    }

    #[test]
    fn window_validation() {
        let g = TorusGrid::line(64).unwrap();
        let mu = build_dirac(g);
        assert!(fourier_decay_fit(&mu, FitWindow::new(0, 5), 1.0).is_err());
        assert!(fourier_decay_fit(&mu, FitWindow::new(3, 2), 1.0).is_err());
        assert!(fourier_decay_fit(&mu, FitWindow::new(0, 3), 0.0).is_err());
    }

    #[test]
    fn quantile_nearest_rank() {
        let mut v = vec![5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile_of(&mut v, 1.0), 5.0);
        assert_eq!(quantile_of(&mut v, 0.5), 3.0);
        assert_eq!(quantile_of(&mut v, 0.01), 1.0);
    }

    #[test]
    fn first_order_slice_is_squared_modulus() {
        let g = TorusGrid::line(64).unwrap();
        let f = GridFunction::from_fn(g, |x| 1.0 + (2.0 * PI * 3.0 * x[0]).sin() + x[0] * x[0]);
        let slice = box_slice_spectrum(&f, 1, MemoryBudget::default()).unwrap();
        let s = dft(&f);
        for k in -32i64..32 {
            assert!((slice.at(&[k]).re - s.at(&[k]).norm_sqr()).abs() < 1e-12);
            assert!(slice.at(&[k]).im.abs() < 1e-12);
        }
    }

    #[test]
    fn higher_order_lebesgue_and_dirac() {
        let g = TorusGrid::line(64).unwrap();
        let fam = MollifierFamily::bump();
        let w = FitWindow::new(0, 3);
        let leb = higher_order_decay_fit(
            &build_lebesgue(g), 1, 4, &fam, w, 1.0, SliceMode::default(), MemoryBudget::default(),
        )
        .unwrap();
        assert!(leb.degenerate);
        assert_eq!(leb.beta, 1.0);
        // Unmollified Dirac (scale 5 = single-cell kernel): unimodular products.
        let dir = higher_order_decay_fit(
            &build_dirac(g), 1, 5, &fam, w, 1.0, SliceMode::default(), MemoryBudget::default(),
        )
        .unwrap();
        assert!(dir.beta <= 0.05, "{dir:?}");
    }

    #[test]
    fn higher_order_rejects_large_orders() {
        let g = TorusGrid::new(2, 16).unwrap();
        let r = higher_order_decay_fit(
            &build_dirac(g), 2, 2, &MollifierFamily::bump(), FitWindow::new(0, 1), 1.0,
            SliceMode::Full, MemoryBudget::default(),
        );
        assert!(r.is_err());
        let g = TorusGrid::line(256).unwrap();
        let r = higher_order_decay_fit(
            &build_dirac(g), 3, 2, &MollifierFamily::bump(), FitWindow::new(0, 1), 1.0,
            SliceMode::Full, MemoryBudget::new(1 << 20),
        );
        assert!(matches!(r, Err(LabError::MemoryBudget { .. })));
    }

    /// Slice coefficients on a single axis against a direct summation over the
    /// full box, at three random frequencies.
    #[test]
    fn slice_matches_direct_summation() {
        let g = TorusGrid::line(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = GridFunction::new(g, (0..16).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        for j in 1..=2u32 {
            let slice = box_slice_spectrum(&f, j, MemoryBudget::default()).unwrap();
            for _ in 0..3 {
                let eta: i64 = rng.random_range(-8..8);
                let axis = rng.random_range(0..j as usize);
                let slots = 16usize.pow(j);
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..16 {
                    for u in 0..slots {
                        let mut us = vec![0usize; j as usize];
                        let mut rest = u;
                        for a in (0..j as usize).rev() {
                            us[a] = rest % 16;
                            rest /= 16;
                        }
                        let mut prod = 1.0;
                        for iota in 0..(1usize << j) {
                            let mut pos = x as i64;
                            for (a, &ua) in us.iter().enumerate() {
                                if iota >> a & 1 == 1 {
                                    pos -= ua as i64;
                                }
                            }
                            prod *= f.values()[pos.rem_euclid(16) as usize];
                        }
                        let ph = -2.0 * PI * (eta * us[axis] as i64) as f64 / 16.0;
                        acc += prod * Complex64::from_polar(1.0, ph);
                    }
                }
                acc /= (16 * slots) as f64;
                let mut freq = vec![0i64; j as usize];
                freq[axis] = eta;
                let got = slice.at(&freq);
                assert!((got - acc).norm() <= 1e-8 * acc.norm().max(1e-12), "{got} vs {acc}");
            }
        }
    }

    #[test]
    fn full_tensor_fit_runs_on_small_grids() {
        let g = TorusGrid::line(32).unwrap();
        let mu = build_random_salem(g, 2, 4, 2, 1).unwrap();
        let fit = full_tensor_decay_fit(
            &mu, 1, 4, &MollifierFamily::bump(), FitWindow::new(0, 2), 1.0, MemoryBudget::default(),
        )
        .unwrap();
        assert!(fit.exponent.is_finite());
        assert_eq!(fit.direction, "full");
    }

    #[test]
    fn salem_first_order_tracks_classical() {
        let g = TorusGrid::line(1024).unwrap();
        let mu = build_random_salem(g, 2, 4, 5, 7).unwrap();
        let n = 5;
        let w = FitWindow::mollified_default(&g, n);
        let classical = fourier_decay_fit(&mu, w, 1.0).unwrap();
        let first = higher_order_decay_fit(
            &mu, 1, n, &MollifierFamily::bump(), w, 1.0, SliceMode::default(), MemoryBudget::default(),
        )
        .unwrap();
        assert!(
            (first.beta - classical.beta).abs() <= 0.2,
            "beta_1 = {} vs classical {}",
            first.beta,
            classical.beta
        );
    }
}
