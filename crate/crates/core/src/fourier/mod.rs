//! Discrete Fourier transforms of grid data and power-law decay fits.

mod decay;

pub use decay::{
    box_slice_spectrum, fourier_decay_fit, full_tensor_decay_fit, higher_order_decay_fit,
    DecayFit, FitWindow, SliceMode,
};

use num_complex::Complex64;

use crate::fft::{fft_nd, forward_real, signed_freq};
use crate::grid_measure::{GridFunction, GridMeasure, TorusGrid};

/// Fourier coefficients on a product of power-of-two axes, stored in FFT
/// order (bin `k` on an axis of length `n` is frequency `k` if `k < n/2`,
/// else `k - n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    dims: Vec<usize>,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(dims: Vec<usize>, coefficients: Vec<Complex64>) -> Self {
        assert_eq!(dims.iter().product::<usize>(), coefficients.len());
        Self { dims, coefficients }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Signed frequency vector of a flat index.
    pub fn freq_of(&self, mut flat: usize) -> Vec<i64> {
        let mut out = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            let n = self.dims[a];
            out[a] = signed_freq(flat % n, n);
            flat /= n;
        }
        out
    }

    pub fn flat_of(&self, freq: &[i64]) -> usize {
        freq.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&k, &n)| acc * n + k.rem_euclid(n as i64) as usize)
    }

    pub fn at(&self, freq: &[i64]) -> Complex64 {
        self.coefficients[self.flat_of(freq)]
    }

    pub fn zero_coefficient(&self) -> Complex64 {
        self.coefficients[0]
    }

    /// `(|ξ|, |c(ξ)|)` for every coefficient, `|ξ|` the Euclidean norm.
    pub fn magnitudes(&self) -> Vec<(f64, f64)> {
        (0..self.len())
            .map(|i| {
                let r = self
                    .freq_of(i)
                    .iter()
                    .map(|&k| (k * k) as f64)
                    .sum::<f64>()
                    .sqrt();
                (r, self.coefficients[i].norm())
            })
            .collect()
    }

    /// `Σ |c|^p`.
    pub fn power_sum(&self, p: f64) -> f64 {
        self.coefficients.iter().map(|c| c.norm().powf(p)).sum()
    }
}

/// Anything with a discrete Fourier transform on a torus grid.
pub trait Dft {
    fn dft(&self) -> Spectrum;
}

impl Dft for GridFunction {
    /// `c(ξ) = N^{-d} Σ_x f(x) e^{-2πi ξ·x}`.
    fn dft(&self) -> Spectrum {
        let grid = self.grid();
        let mut c = forward_real(self.values(), &grid.dims());
        let s = grid.cell_volume();
        c.iter_mut().for_each(|v| *v *= s);
        Spectrum::new(grid.dims(), c)
    }
}

impl Dft for GridMeasure {
    /// `c(ξ) = Σ_x w(x) e^{-2πi ξ·x}`.
    fn dft(&self) -> Spectrum {
        let grid = self.grid();
        Spectrum::new(grid.dims(), forward_real(self.weights(), &grid.dims()))
    }
}

pub fn dft<T: Dft + ?Sized>(x: &T) -> Spectrum {
    x.dft()
}

/// Inverse of [`Dft::dft`] for functions: returns the real part of
/// `Σ_ξ c(ξ) e^{2πi ξ·x}`.
pub fn inverse_dft(spec: &Spectrum, grid: TorusGrid) -> crate::Result<GridFunction> {
    let mut buf = spec.coefficients.clone();
    fft_nd(&mut buf, &spec.dims, true);
    GridFunction::new(grid, buf.into_iter().map(|c| c.re).collect())
}
