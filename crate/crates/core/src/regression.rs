//! Ordinary least squares for straight-line fits in log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Result of fitting `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(LabError::InvalidParameter(format!(
            "fit_line: {} abscissae vs {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(LabError::TooFewPoints { needed: 2, got: n });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(LabError::NonFinite("fit_line"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(LabError::InvalidParameter(
            "fit_line: abscissae are all equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        rms: (ss / nf).sqrt(),
        points: n,
    })
}

/// Slope of `log2(values)` against `ns`, skipping nonpositive values.
pub fn log2_slope(ns: &[f64], values: &[f64]) -> Result<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(n, v)| (*n, v.log2()))
        .unzip();
    fit_line(&xs, &ys)
}
