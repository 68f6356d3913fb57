//! Multi-dimensional complex FFT on row-major arrays, backed by `rustfft`.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place unnormalised DFT along every axis of a row-major array with the
/// given `dims`. Forward uses `e^{-2πi jk/n}`; inverse uses `e^{+2πi jk/n}`.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = data.len();
    for &n in dims {
        stride /= n;
        if n == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        if stride == 1 {
            fft.process(data);
            continue;
        }
        let block = n * stride;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride];
                }
                fft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}

/// Forward transform of a real array.
pub fn forward_real(values: &[f64], dims: &[usize]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, dims, false);
    buf
}

/// Signed frequency of FFT bin `k` on an axis of length `n`: `{-n/2, …, n/2-1}`.
pub fn signed_freq(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
