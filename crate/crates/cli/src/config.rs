use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gowerslab_core::fourier::SliceMode;
use gowerslab_core::grid_measure::{
    build_cantor, build_dirac, build_lebesgue, build_random_salem, Profile,
};
use gowerslab_core::interp::Interpolation;
use gowerslab_core::{GridMeasure, MollifierFamily, TorusGrid};

/// Largest number of grid cells accepted for the main grid.
const MAX_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Budget for materialised tensors and slice spectra.
    pub memory_budget_mib: u64,
    pub grid: GridSpec,
    pub measure: MeasureSpec,
    pub mollifier: MollifierSpec,
    pub fourier: FourierSpec,
    pub gowers: GowersSpec,
    pub prop1: Prop1Spec,
    pub maximal: MaximalSpec,
    pub lemmas: LemmaSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 2024,
            memory_budget_mib: 1024,
            grid: GridSpec::default(),
            measure: MeasureSpec::default(),
            mollifier: MollifierSpec::default(),
            fourier: FourierSpec::default(),
            gowers: GowersSpec::default(),
            prop1: Prop1Spec::default(),
            maximal: MaximalSpec::default(),
            lemmas: LemmaSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { d: 1, n: 256 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureFamily {
    Lebesgue,
    Dirac,
    Cantor,
    Salem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureSpec {
    pub family: MeasureFamily,
    /// Cantor contraction ratio.
    pub ratio: f64,
    pub depth: u32,
    /// Salem: children kept per split.
    pub keep: usize,
    pub split: usize,
    pub seed: u64,
}

impl Default for MeasureSpec {
    fn default() -> Self {
        Self {
            family: MeasureFamily::Salem,
            ratio: 1.0 / 3.0,
            depth: 6,
            keep: 2,
            split: 4,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Bump,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifierSpec {
    pub profile: ProfileKind,
    /// Gaussian width, in units of the profile radius 1/2.
    pub sigma: f64,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self {
            profile: ProfileKind::Bump,
            sigma: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceKind {
    Full,
    Axes,
    Directions,
    Worst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierSpec {
    pub quantile: f64,
    /// Highest slice order `j` fitted.
    pub max_order: u32,
    /// Mollification scale of the slice fits; the finest resolvable when absent.
    pub fit_scale: Option<u32>,
    pub slice: SliceKind,
    pub directions: usize,
}

impl Default for FourierSpec {
    fn default() -> Self {
        Self {
            quantile: 1.0,
            max_order: 1,
            fit_scale: None,
            slice: SliceKind::Worst,
            directions: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GowersSpec {
    pub k_max: u32,
    pub n_min: u32,
    pub n_max: u32,
    /// Random functions in the oracle suite.
    pub random_functions: usize,
    pub random_n: usize,
}

impl Default for GowersSpec {
    fn default() -> Self {
        Self {
            k_max: 3,
            n_min: 2,
            n_max: 6,
            random_functions: 20,
            random_n: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop1Spec {
    pub k: u32,
    pub n_min: u32,
    pub n_max: u32,
    pub slack: f64,
    pub beta_floor: f64,
}

impl Default for Prop1Spec {
    fn default() -> Self {
        Self {
            k: 2,
            n_min: 2,
            n_max: 6,
            slack: 0.25,
            beta_floor: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaKind {
    Interval,
    RandomDyadic,
    Cantor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleChoice {
    Constant,
    Random,
    Sawtooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximalSpec {
    pub k: usize,
    pub n_min: u32,
    pub n_max: u32,
    pub eps: Option<f64>,
    pub eps_margin: f64,
    pub slack: f64,
    pub samples: usize,
    pub omega: OmegaKind,
    /// Interval: length from 0. Random dyadic: target volume.
    pub omega_volume: f64,
    pub omega_level: u32,
    pub scale: ScaleChoice,
    /// Constant dilation, or sawtooth tooth count.
    pub scale_value: f64,
    pub interpolation: Interpolation,
}

impl Default for MaximalSpec {
    fn default() -> Self {
        Self {
            k: 2,
            n_min: 2,
            n_max: 5,
            eps: None,
            eps_margin: 0.25,
            slack: 0.3,
            samples: 20_000,
            omega: OmegaKind::RandomDyadic,
            omega_volume: 0.5,
            omega_level: 4,
            scale: ScaleChoice::Random,
            scale_value: 1.5,
            interpolation: Interpolation::Multilinear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSpec {
    pub transverse_instances: usize,
    pub transverse_n: usize,
    pub tangency_delta: f64,
    pub tangency_samples: usize,
    pub tangency_n: usize,
    /// Grid of the dyadic scale lemmas.
    pub scale_n: usize,
    pub scale1_functions: usize,
    pub scale1_points: usize,
    pub scale_s: u32,
    pub scale_k: u32,
    pub scale_c: f64,
    pub scale_p: f64,
    pub t_samples: usize,
    pub pairs: usize,
    pub tolerance: f64,
}

impl Default for LemmaSpec {
    fn default() -> Self {
        Self {
            transverse_instances: 100,
            transverse_n: 64,
            tangency_delta: 0.1,
            tangency_samples: 1_000_000,
            tangency_n: 64,
            scale_n: 1024,
            scale1_functions: 8,
            scale1_points: 32,
            scale_s: 9,
            scale_k: 3,
            scale_c: 1.0,
            scale_p: 2.0,
            t_samples: 16,
            pairs: 100,
            tolerance: 0.05,
        }
    }
}

fn is_pow2(n: usize) -> bool {
    n >= 2 && n.is_power_of_two()
}

fn log2(n: usize) -> u32 {
    n.trailing_zeros()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Hex SHA-256 of the canonical JSON form (keys sorted).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serialises");
        let bytes = serde_json::to_vec(&value).expect("value serialises");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Every offending field as `path: reason`.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut bad = |field: &str, msg: String| errs.push(format!("{field}: {msg}"));
        let g = &self.grid;
        if !(1..=3).contains(&g.d) {
            bad("grid.d", format!("{} outside 1..=3", g.d));
        }
        if !is_pow2(g.n) || g.n < 16 {
            bad("grid.n", format!("{} is not a power of two >= 16", g.n));
        } else if g.n.checked_pow(g.d as u32).is_none_or(|c| c > MAX_CELLS) {
            bad("grid.n", format!("N^d above {MAX_CELLS} cells"));
        }
        let max_scale = if is_pow2(g.n) { log2(g.n).saturating_sub(1) } else { 0 };
        let cells = g.n.saturating_pow(g.d as u32);

        let m = &self.measure;
        match m.family {
            MeasureFamily::Cantor => {
                if !(m.ratio > 0.0 && m.ratio < 0.5) {
                    bad("measure.ratio", format!("{} outside (0, 1/2)", m.ratio));
                }
                if m.depth == 0 {
                    bad("measure.depth", "must be positive".into());
                }
            }
            MeasureFamily::Salem => {
                if m.split < 2 {
                    bad("measure.split", format!("{} below 2", m.split));
                }
                let children = m.split.saturating_pow(g.d as u32);
                if m.keep == 0 || m.keep >= children {
                    bad("measure.keep", format!("{} outside 1..split^d = {children}", m.keep));
                }
                if m.depth == 0 {
                    bad("measure.depth", "must be positive".into());
                }
            }
            MeasureFamily::Lebesgue | MeasureFamily::Dirac => {}
        }
        if self.mollifier.profile == ProfileKind::Gaussian && !(self.mollifier.sigma > 0.0) {
            bad("mollifier.sigma", format!("{} not positive", self.mollifier.sigma));
        }
        if self.memory_budget_mib == 0 {
            bad("memory_budget_mib", "must be positive".into());
        }

        let f = &self.fourier;
        if !(f.quantile > 0.0 && f.quantile <= 1.0) {
            bad("fourier.quantile", format!("{} outside (0, 1]", f.quantile));
        }
        if f.max_order == 0 || (f.max_order as usize + 1) * g.d > 4 {
            bad("fourier.max_order", format!("{} needs 1 <= j and (j+1)d <= 4", f.max_order));
        }
        if let Some(s) = f.fit_scale {
            if s < 2 || s > max_scale {
                bad("fourier.fit_scale", format!("{s} outside 2..={max_scale}"));
            }
        }
        if matches!(f.slice, SliceKind::Directions | SliceKind::Worst) && f.directions == 0 {
            bad("fourier.directions", "must be positive".into());
        }

        let w = &self.gowers;
        if !(1..=3).contains(&w.k_max) {
            bad("gowers.k_max", format!("{} outside 1..=3", w.k_max));
        } else if (cells as f64).powi(w.k_max as i32) > 2f64.powi(32) {
            bad("gowers.k_max", format!("(N^d)^k = {cells}^{} too large", w.k_max));
        }
        if w.n_min > w.n_max || w.n_max + 1 > max_scale {
            bad("gowers.n_max", format!("range {}..={} needs n_max + 1 <= {max_scale}", w.n_min, w.n_max));
        }
        if !is_pow2(w.random_n) || w.random_n > 1024 {
            bad("gowers.random_n", format!("{} is not a power of two <= 1024", w.random_n));
        }

        let p = &self.prop1;
        if !(2..=3).contains(&p.k) {
            bad("prop1.k", format!("{} outside 2..=3", p.k));
        }
        if p.n_min > p.n_max || p.n_max + 1 > max_scale {
            bad("prop1.n_max", format!("range {}..={} needs n_max + 1 <= {max_scale}", p.n_min, p.n_max));
        }
        if !(p.slack >= 0.0) {
            bad("prop1.slack", format!("{} negative", p.slack));
        }
        if !(p.beta_floor >= 0.0) {
            bad("prop1.beta_floor", format!("{} negative", p.beta_floor));
        }

        let x = &self.maximal;
        if !(2..=3).contains(&x.k) {
            bad("maximal.k", format!("{} outside 2..=3", x.k));
        }
        if x.n_min > x.n_max || x.n_max + 1 > max_scale {
            bad("maximal.n_max", format!("range {}..={} needs n_max + 1 <= {max_scale}", x.n_min, x.n_max));
        }
        if let Some(e) = x.eps {
            if !(e > 0.0 && e <= g.d as f64) {
                bad("maximal.eps", format!("{e} outside (0, d]"));
            }
        }
        if !(x.eps_margin > 0.0) {
            bad("maximal.eps_margin", format!("{} not positive", x.eps_margin));
        }
        if !(x.slack >= 0.0) {
            bad("maximal.slack", format!("{} negative", x.slack));
        }
        if x.samples < 1000 {
            bad("maximal.samples", format!("{} below 1000", x.samples));
        }
        if !(x.omega_volume > 0.0 && x.omega_volume <= 1.0) {
            bad("maximal.omega_volume", format!("{} outside (0, 1]", x.omega_volume));
        }
        if is_pow2(g.n) && x.omega_level > log2(g.n) {
            bad("maximal.omega_level", format!("{} finer than the grid", x.omega_level));
        }
        if x.scale == ScaleChoice::Constant && !(1.0..=2.0).contains(&x.scale_value) {
            bad("maximal.scale_value", format!("{} outside [1, 2]", x.scale_value));
        }
        if x.scale == ScaleChoice::Sawtooth && !(x.scale_value >= 1.0 && x.scale_value.fract() == 0.0) {
            bad("maximal.scale_value", format!("{} is not a positive tooth count", x.scale_value));
        }

        let l = &self.lemmas;
        if l.transverse_instances == 0 {
            bad("lemmas.transverse_instances", "must be positive".into());
        }
        if !is_pow2(l.transverse_n) || l.transverse_n.saturating_pow(2 * g.d as u32) > 1 << 26 {
            bad("lemmas.transverse_n", format!("{} is not a power of two with N^(2d) <= 2^26", l.transverse_n));
        }
        if !(0.0..=0.5).contains(&l.tangency_delta) {
            bad("lemmas.tangency_delta", format!("{} outside [0, 1/2]", l.tangency_delta));
        }
        if l.tangency_samples < 10_000 {
            bad("lemmas.tangency_samples", format!("{} below 10^4", l.tangency_samples));
        }
        if !is_pow2(l.tangency_n) {
            bad("lemmas.tangency_n", format!("{} is not a power of two", l.tangency_n));
        }
        if !is_pow2(l.scale_n) || l.scale_n.saturating_pow(g.d as u32) > 4096 {
            bad("lemmas.scale_n", format!("{} is not a power of two with N^d <= 4096", l.scale_n));
        } else {
            let top = log2(l.scale_n);
            if l.scale_s >= top {
                bad("lemmas.scale_s", format!("{} must be below log2(scale_n) = {top}", l.scale_s));
            }
            if l.scale_k + 1 > top.saturating_sub(1) {
                bad("lemmas.scale_k", format!("{} too fine for scale_n", l.scale_k));
            }
        }
        if l.scale_k as f64 > l.scale_c * (l.scale_s as f64).sqrt() {
            bad("lemmas.scale_k", format!("k = {} exceeds c·√s", l.scale_k));
        }
        if !(l.scale_c > 0.0) {
            bad("lemmas.scale_c", format!("{} not positive", l.scale_c));
        }
        if !(l.scale_p >= 1.0) {
            bad("lemmas.scale_p", format!("{} below 1", l.scale_p));
        }
        if l.t_samples < 2 {
            bad("lemmas.t_samples", format!("{} below 2", l.t_samples));
        }
        if l.pairs == 0 || l.scale1_functions == 0 || l.scale1_points == 0 {
            bad("lemmas", "pairs, scale1_functions and scale1_points must be positive".into());
        }
        if !(l.tolerance >= 0.0) {
            bad("lemmas.tolerance", format!("{} negative", l.tolerance));
        }
        errs
    }

    pub fn torus(&self) -> TorusGrid {
        TorusGrid::new(self.grid.d, self.grid.n).expect("validated grid")
    }

    pub fn family(&self) -> MollifierFamily {
        MollifierFamily {
            profile: match self.mollifier.profile {
                ProfileKind::Bump => Profile::Bump,
                ProfileKind::Gaussian => Profile::Gaussian {
                    sigma: self.mollifier.sigma,
                },
            },
        }
    }

    pub fn slice_mode(&self, seed: u64) -> SliceMode {
        let count = self.fourier.directions;
        match self.fourier.slice {
            SliceKind::Full => SliceMode::Full,
            SliceKind::Axes => SliceMode::Axes,
            SliceKind::Directions => SliceMode::Directions { count, seed },
            SliceKind::Worst => SliceMode::Worst { count, seed },
        }
    }

    /// The configured measure on `grid`.
    pub fn build_measure(&self, grid: TorusGrid) -> gowerslab_core::Result<GridMeasure> {
        let m = &self.measure;
        match m.family {
            MeasureFamily::Lebesgue => Ok(build_lebesgue(grid)),
            MeasureFamily::Dirac => Ok(build_dirac(grid)),
            MeasureFamily::Cantor => build_cantor(grid, m.ratio, m.depth),
            MeasureFamily::Salem => build_random_salem(grid, m.keep, m.split, m.depth, m.seed),
        }
    }
}

/// Seed of experiment `name`: the first 8 bytes of `SHA-256(master ‖ name)`.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
