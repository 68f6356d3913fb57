use serde::{Deserialize, Serialize};

use super::omega::OmegaSet;
use super::operators::ScaleFunction;
use super::strong_type::{restricted_strong_type_split, McConfig};
use super::tangency::tangency_constant;
use crate::error::{LabError, Result};
use crate::fourier::SliceMode;
use crate::gowers::{fitted_betas, r_k, MemoryBudget, RateInputs};
use crate::grid_measure::{ball_condition_fit, default_radii, mollify, GridMeasure, MollifierFamily};
use crate::interp::Interpolation;
use crate::regression::log2_slope;

/// `‖μ_n‖_∞` over a range of scales and its log2 growth rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupGrowth {
    pub scales: Vec<u32>,
    pub sups: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

pub fn sup_growth(mu: &GridMeasure, scales: &[u32], family: &MollifierFamily) -> Result<SupGrowth> {
    let sups = scales
        .iter()
        .map(|&n| mollify(mu, n, family).map(|f| f.sup_norm()))
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = scales.iter().map(|&n| n as f64).collect();
    let fit = log2_slope(&ns, &sups)?;
    Ok(SupGrowth {
        scales: scales.to_vec(),
        sups,
        slope: fit.slope,
        intercept: fit.intercept,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct D11Config {
    pub k: usize,
    pub n_min: u32,
    pub n_max: u32,
    /// Tangency exponent; `d - α_fit + eps_margin` (capped at `d`) when absent.
    pub eps: Option<f64>,
    pub eps_margin: f64,
    pub slack: f64,
    pub mc: McConfig,
    pub interpolation: Interpolation,
    pub family: MollifierFamily,
    pub quantile: f64,
    pub slice_mode: SliceMode,
    /// Ball-condition radii; the default dyadic set when absent.
    pub radii: Option<Vec<f64>>,
    /// Mollification scale of the `β` fits; `n_max + 1` when absent.
    pub fit_scale: Option<u32>,
}

impl Default for D11Config {
    fn default() -> Self {
        Self {
            k: 2,
            n_min: 2,
            n_max: 5,
            eps: None,
            eps_margin: 0.25,
            slack: 0.3,
            mc: McConfig::default(),
            interpolation: Interpolation::Multilinear,
            family: MollifierFamily::bump(),
            quantile: 1.0,
            slice_mode: SliceMode::default(),
            radii: None,
            fit_scale: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D11Row {
    pub n: u32,
    pub delta: f64,
    pub sup_norm: f64,
    pub internal: f64,
    pub internal_se: f64,
    pub transverse: f64,
    pub transverse_se: f64,
    pub total: f64,
    pub total_se: f64,
    /// `k² d · δ · |Ω|^{k-1} · ‖μ_n‖_∞^k`.
    pub bound_internal: f64,
    /// `C · 2^{-n η_1} |Ω|^{k-1}` with the fitted constant `C`.
    pub bound_transverse: f64,
}

/// Per-scale internal and transverse pieces of the restricted strong-type
/// integral and the fitted decay against `η = min(η_0, η_1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub measure: String,
    pub omega: String,
    pub omega_volume: f64,
    /// `|Ω|^{k-1}`.
    pub omega_power: f64,
    pub k: usize,
    pub eps: f64,
    pub alpha_fit: f64,
    pub beta_fit: f64,
    pub r_k: f64,
    /// `k (ε - (d - α))`.
    pub eta0: f64,
    /// `r_k / 2^k - k (d - α)`.
    pub eta1: f64,
    pub eta: f64,
    pub eta_positive: bool,
    pub rows: Vec<D11Row>,
    pub slope: f64,
    pub intercept: f64,
    pub transverse_constant: f64,
    pub slack: f64,
    pub internal_ok: bool,
    pub pass: bool,
    pub note: Option<String>,
}

impl MaximalReport {
    /// `n,internal,transverse,bound_internal,bound_transverse` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,internal,transverse,bound_internal,bound_transverse\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n, r.internal, r.transverse, r.bound_internal, r.bound_transverse
            ));
        }
        s
    }
}

/// Estimates the restricted strong-type integral for `n_min..=n_max`,
/// split over the tangency set with `δ = 2^{-nkε}`, and compares its log2
/// slope with `-min(η_0, η_1) + slack` using fitted `α` and `β`.
pub fn theorem_d11_experiment(
    mu: &GridMeasure,
    omega: &OmegaSet,
    t: &ScaleFunction,
    config: &D11Config,
    budget: MemoryBudget,
) -> Result<MaximalReport> {
    let grid = *mu.grid();
    grid.check_same(omega.grid())?;
    let k = config.k;
    if !(2..=3).contains(&k) {
        return Err(LabError::InvalidParameter(format!("k = {k} outside {{2, 3}}")));
    }
    if config.n_min > config.n_max {
        return Err(LabError::InvalidParameter("empty n range".into()));
    }
    let d = grid.d() as f64;
    let radii = config.radii.clone().unwrap_or_else(|| default_radii(&grid));
    let alpha = ball_condition_fit(mu, &radii)?.alpha;
    let eps = config.eps.unwrap_or((d - alpha + config.eps_margin).min(d));
    if !(eps > 0.0 && eps <= d && eps > d - alpha) {
        return Err(LabError::Hypothesis(format!(
            "need d - α < ε <= d, got ε = {eps} with α_fit = {alpha}, d = {d}"
        )));
    }
    let fit_scale = config.fit_scale.unwrap_or(config.n_max + 1);
    let betas = fitted_betas(
        mu,
        k as u32,
        fit_scale,
        &config.family,
        config.quantile,
        config.slice_mode,
        budget,
    )?;
    let beta = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let rate = r_k(RateInputs::new(beta.clamp(1e-9, d), grid.d(), k as u32))?;
    let kf = k as f64;
    let eta0 = kf * (eps - (d - alpha));
    let eta1 = rate / (1u64 << k) as f64 - kf * (d - alpha);
    let eta = eta0.min(eta1);

    let vol = omega.volume();
    let omega_power = vol.powi(k as i32 - 1);
    let mut rows = Vec::new();
    for n in config.n_min..=config.n_max {
        let mu_n = mollify(mu, n, &config.family)?;
        let delta = (-(n as f64) * kf * eps).exp2();
        let mc = McConfig {
            stream: config.mc.stream.wrapping_add((n as u64) << 32),
            ..config.mc
        };
        let split =
            restricted_strong_type_split(omega, &mu_n, t, k, delta, mc, config.interpolation)?;
        let sup = mu_n.sup_norm();
        rows.push(D11Row {
            n,
            delta,
            sup_norm: sup,
            internal: split.internal.value,
            internal_se: split.internal.std_error,
            transverse: split.transverse.value,
            transverse_se: split.transverse.std_error,
            total: split.total.value,
            total_se: split.total.std_error,
            bound_internal: tangency_constant(k, grid.d()) * delta * omega_power * sup.powi(k as i32),
            bound_transverse: 0.0,
        });
    }
    let shape = |n: u32| (-(n as f64) * eta1).exp2() * omega_power;
    let c = rows
        .iter()
        .map(|r| r.transverse / shape(r.n))
        .fold(0.0, f64::max);
    for r in &mut rows {
        r.bound_transverse = c * shape(r.n);
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let totals: Vec<f64> = rows.iter().map(|r| r.total).collect();
    let fit = log2_slope(&ns, &totals)?;
    let internal_ok = rows
        .iter()
        .all(|r| r.internal <= r.bound_internal + 3.0 * r.internal_se);
    let pass = internal_ok && fit.slope <= -eta + config.slack;
    let note = (eta <= 0.0).then(|| {
        format!("η = {eta} is not positive at the fitted (α, β); no decay is predicted")
    });
    Ok(MaximalReport {
        measure: mu.name().to_string(),
        omega: omega.name().to_string(),
        omega_volume: vol,
        omega_power,
        k,
        eps,
        alpha_fit: alpha,
        beta_fit: beta,
        r_k: rate,
        eta0,
        eta1,
        eta,
        eta_positive: eta > 0.0,
        rows,
        slope: fit.slope,
        intercept: fit.intercept,
        transverse_constant: c,
        slack: config.slack,
        internal_ok,
        pass,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_measure::{build_cantor, build_dirac, build_lebesgue, TorusGrid};
    use crate::maximal::ScaleKind;

    #[test]
    fn dirac_is_refused() {
        let g = TorusGrid::line(256).unwrap();
        let omega = OmegaSet::interval(g, 0.0, 1.0).unwrap();
        let t = ScaleFunction::new(g, ScaleKind::Constant { value: 1.5 }).unwrap();
        let err = theorem_d11_experiment(&build_dirac(g), &omega, &t, &D11Config::default(), MemoryBudget::default());
        assert!(matches!(err, Err(LabError::Hypothesis(_))), "{err:?}");
    }

    #[test]
    fn lebesgue_internal_piece_decays() {
        let g = TorusGrid::line(64).unwrap();
        let omega = OmegaSet::random_dyadic_union(g, 3, 0.5, 2).unwrap();
        let t = ScaleFunction::new(g, ScaleKind::Random { seed: 1 }).unwrap();
        let cfg = D11Config {
            n_max: 4,
            eps: Some(0.5),
            mc: McConfig { samples: 4000, seed: 1, stream: 0 },
            ..Default::default()
        };
        let r = theorem_d11_experiment(&build_lebesgue(g), &omega, &t, &cfg, MemoryBudget::default())
            .unwrap();
        assert!((r.alpha_fit - 1.0).abs() < 0.02);
        assert!(r.internal_ok, "{r:?}");
        // α = d: the internal bound exponent is kε.
        assert!((r.eta0 - 2.0 * 0.5).abs() < 0.05);
        for row in &r.rows {
            assert!((row.total - 0.25).abs() < 1e-9);
        }
        assert!(r.to_csv().starts_with("n,internal,transverse,bound_internal,bound_transverse\n"));
    }

    #[test]
    fn cantor_sup_growth_tracks_codimension() {
        let g = TorusGrid::line(4096).unwrap();
        let mu = build_cantor(g, 1.0 / 3.0, 7).unwrap();
        let s = sup_growth(&mu, &[2, 3, 4, 5, 6], &MollifierFamily::bump()).unwrap();
        let target = 1.0 - 2f64.ln() / 3f64.ln();
        assert!((s.slope - target).abs() < 0.15, "{s:?}");
    }
}
