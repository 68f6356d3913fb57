use serde::{Deserialize, Serialize};

use super::box_tensor::MemoryBudget;
use super::norms::{uk_norm_with, UkMethod};
use super::rate::{r_k, RateInputs};
use crate::error::{LabError, Result};
use crate::fourier::{higher_order_decay_fit, FitWindow, SliceMode};
use crate::grid_measure::{delta_mollify, GridMeasure, MollifierFamily};
use crate::regression::log2_slope;

/// Norms at or below this are treated as exactly zero.
const ZERO_NORM: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Prop1Config {
    pub k: u32,
    pub n_min: u32,
    pub n_max: u32,
    pub family: MollifierFamily,
    /// Added to the predicted slope before comparing.
    pub slack: f64,
    /// `β_fit` at or below this fails the decay hypothesis.
    pub beta_floor: f64,
    pub quantile: f64,
    pub slice_mode: SliceMode,
    /// Mollification scale of the `β` fits; `n_max + 1` when absent.
    pub fit_scale: Option<u32>,
    pub method: UkMethod,
}

impl Default for Prop1Config {
    fn default() -> Self {
        Self {
            k: 2,
            n_min: 2,
            n_max: 6,
            family: MollifierFamily::bump(),
            slack: 0.25,
            beta_floor: 0.05,
            quantile: 1.0,
            slice_mode: SliceMode::default(),
            fit_scale: None,
            method: UkMethod::Streaming,
        }
    }
}

/// Per-scale `‖μ_{n+1} - μ_n‖_{U^k}` and the fitted trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GowersReport {
    pub measure: String,
    pub k: u32,
    pub scales: Vec<u32>,
    pub norms: Vec<f64>,
    /// `C 2^{-r_k n / 2^k}` with the smallest `C` dominating every norm.
    pub bounds: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// `β_j` for `j = 1..k-1`.
    pub beta_by_order: Vec<f64>,
    pub beta_fit: f64,
    pub r_k: f64,
    pub predicted_slope: f64,
    pub slack: f64,
    pub hypothesis_met: bool,
    pub degenerate: bool,
    pub pass: bool,
    pub note: Option<String>,
}

impl GowersReport {
    /// `n,norm,bound` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,norm,bound\n");
        for ((n, v), b) in self.scales.iter().zip(&self.norms).zip(&self.bounds) {
            s.push_str(&format!("{n},{v},{b}\n"));
        }
        s
    }
}

/// Higher-order dimension estimates `β_j`, `j = 1..k-1`, of `μ` fitted at
/// mollification scale `fit_scale` on the default window below the cutoff.
pub(crate) fn fitted_betas(
    mu: &GridMeasure,
    k: u32,
    fit_scale: u32,
    family: &MollifierFamily,
    quantile: f64,
    mode: SliceMode,
    budget: MemoryBudget,
) -> Result<Vec<f64>> {
    let window = FitWindow::mollified_default(mu.grid(), fit_scale);
    (1..k)
        .map(|j| {
            higher_order_decay_fit(mu, j, fit_scale, family, window, quantile, mode, budget)
                .map(|fit| fit.beta)
        })
        .collect()
}

/// Measures the decay of `‖μ_{n+1} - μ_n‖_{U^k}` over `n_min..=n_max` and
/// compares the log2 slope against `-r_k(β_fit)/2^k + slack`.
pub fn prop1_decay_check(
    mu: &GridMeasure,
    config: &Prop1Config,
    budget: MemoryBudget,
) -> Result<GowersReport> {
    let grid = mu.grid();
    let k = config.k;
    if k < 2 {
        return Err(LabError::InvalidParameter(format!("k = {k} below 2")));
    }
    if config.n_min > config.n_max {
        return Err(LabError::InvalidParameter(format!(
            "n range {}..={} is empty",
            config.n_min, config.n_max
        )));
    }
    let max = MollifierFamily::max_scale(grid);
    if config.n_max + 1 > max {
        return Err(LabError::ScaleTooFine {
            n: config.n_max + 1,
            max,
        });
    }
    let fit_scale = config.fit_scale.unwrap_or(config.n_max + 1);

    let scales: Vec<u32> = (config.n_min..=config.n_max).collect();
    let mut norms = Vec::with_capacity(scales.len());
    for &n in &scales {
        let diff = delta_mollify(mu, n, &config.family)?;
        norms.push(uk_norm_with(&diff, k, config.method, budget)?);
    }

    let beta_by_order = fitted_betas(
        mu,
        k,
        fit_scale,
        &config.family,
        config.quantile,
        config.slice_mode,
        budget,
    )?;
    let beta_fit = beta_by_order.iter().copied().fold(f64::INFINITY, f64::min);
    let d = grid.d();
    // The rate formula needs β > 0; a vanishing fit is evaluated just above zero.
    let beta_eval = beta_fit.clamp(1e-9, d as f64);
    let rate = r_k(RateInputs::new(beta_eval, d, k))?;
    let predicted_slope = -rate / (1u64 << k) as f64;
    let hypothesis_met = beta_fit > config.beta_floor;

    let degenerate = norms.iter().all(|&v| v <= ZERO_NORM);
    let (slope, intercept, note) = if degenerate {
        (
            0.0,
            0.0,
            Some("degenerate: every mollification difference vanishes".to_string()),
        )
    } else {
        let ns: Vec<f64> = scales.iter().map(|&n| n as f64).collect();
        let fit = log2_slope(&ns, &norms)?;
        (fit.slope, fit.intercept, None)
    };

    let exps: Vec<f64> = scales
        .iter()
        .map(|&n| (predicted_slope * n as f64).exp2())
        .collect();
    let c = norms
        .iter()
        .zip(&exps)
        .map(|(v, e)| v / e)
        .fold(0.0, f64::max);
    let bounds = exps.iter().map(|e| c * e).collect();

    let pass = degenerate || (hypothesis_met && slope <= predicted_slope + config.slack);
    Ok(GowersReport {
        measure: mu.name().to_string(),
        k,
        scales,
        norms,
        bounds,
        slope,
        intercept,
        beta_by_order,
        beta_fit,
        r_k: rate,
        predicted_slope,
        slack: config.slack,
        hypothesis_met,
        degenerate,
        pass,
        note,
    })
}
