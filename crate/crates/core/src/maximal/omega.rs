use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::grid_measure::{build_cantor, GridFunction, TorusGrid};

/// A union of grid cells in `[0,1)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSet {
    grid: TorusGrid,
    indicator: Vec<bool>,
    name: String,
}

impl OmegaSet {
    pub fn from_indicator(grid: TorusGrid, indicator: Vec<bool>, name: impl Into<String>) -> Result<Self> {
        if indicator.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} indicator cells for {} grid cells",
                indicator.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            indicator,
            name: name.into(),
        })
    }

    /// The box `[start, start+len)^d`, snapped to cells.
    pub fn interval(grid: TorusGrid, start: f64, len: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&start) || !(len > 0.0) || start + len > 1.0 + 1e-12 {
            return Err(LabError::InvalidParameter(format!(
                "interval [{start}, {}) not inside [0, 1)",
                start + len
            )));
        }
        let nf = grid.n() as f64;
        let lo = (start * nf).round() as usize;
        let hi = ((start + len) * nf).round() as usize;
        let indicator = (0..grid.len())
            .map(|i| grid.unravel(i).iter().all(|&m| m >= lo && m < hi))
            .collect();
        Self::from_indicator(grid, indicator, format!("interval({start},{len})"))
    }

    /// A uniformly random selection of level-`level` dyadic cubes with total
    /// volume as close as possible to `volume`.
    pub fn random_dyadic_union(grid: TorusGrid, level: u32, volume: f64, seed: u64) -> Result<Self> {
        if level > grid.log2_n() {
            return Err(LabError::Unresolvable(format!("dyadic level {level} finer than grid")));
        }
        if !(volume > 0.0 && volume <= 1.0) {
            return Err(LabError::InvalidParameter(format!("volume {volume} outside (0, 1]")));
        }
        let side = 1usize << level;
        let cubes = side.pow(grid.d() as u32);
        let count = ((volume * cubes as f64).round() as usize).clamp(1, cubes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen = vec![false; cubes];
        for c in sample(&mut rng, cubes, count).into_iter() {
            chosen[c] = true;
        }
        let shift = grid.log2_n() - level;
        let indicator = (0..grid.len())
            .map(|i| {
                let cube = grid
                    .unravel(i)
                    .iter()
                    .fold(0usize, |acc, &m| acc * side + (m >> shift));
                chosen[cube]
            })
            .collect();
        Self::from_indicator(
            grid,
            indicator,
            format!("dyadic_union(level={level},volume={volume},seed={seed})"),
        )
    }

    /// Cells charged by the `depth`-level Cantor construction of `ratio`.
    pub fn cantor_like(grid: TorusGrid, ratio: f64, depth: u32) -> Result<Self> {
        let mu = build_cantor(grid, ratio, depth)?;
        let indicator = mu.weights().iter().map(|&w| w > 0.0).collect();
        Self::from_indicator(grid, indicator, format!("cantor(ratio={ratio},depth={depth})"))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.indicator[flat]
    }

    pub fn cells(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&i| self.indicator[i]).collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.indicator.iter().any(|&b| b)
    }

    /// `|Ω|` = cell count times cell volume.
    pub fn volume(&self) -> f64 {
        self.indicator.iter().filter(|&&b| b).count() as f64 * self.grid.cell_volume()
    }

    pub fn indicator(&self) -> GridFunction {
        let v = self.indicator.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        GridFunction::new(self.grid, v).expect("grid sizes agree")
    }
}
