use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Inputs of the `U^k` decay rate: dimension estimate `beta`, ambient
/// dimension `d`, order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub beta: f64,
    pub d: usize,
    pub k: u32,
}

impl RateInputs {
    pub fn new(beta: f64, d: usize, k: u32) -> Self {
        Self { beta, d, k }
    }
}

/// `r_k = (Π_{j=3}^k [2 - 2^{3j-2} / (2^{3j-2} - (1 - (j+1)β/(jd)))]) · (2β - d)`.
///
/// Accepts `β ∈ (0, d]`; the endpoint `β = d` is the limiting case.
pub fn r_k(inputs: RateInputs) -> Result<f64> {
    let RateInputs { beta, d, k } = inputs;
    let df = d as f64;
    if d == 0 {
        return Err(LabError::InvalidParameter("d must be positive".into()));
    }
    if !(beta > 0.0 && beta <= df) {
        return Err(LabError::InvalidParameter(format!("beta {beta} outside (0, {d}]")));
    }
    if k < 2 {
        return Err(LabError::InvalidParameter(format!("k = {k} below 2")));
    }
    let mut product = 1.0;
    for j in 3..=k {
        let jf = j as f64;
        let p = 2f64.powi(3 * j as i32 - 2);
        let denom = p - (1.0 - (jf + 1.0) * beta / (jf * df));
        if denom == 0.0 {
            return Err(LabError::DenominatorZero { j });
        }
        product *= 2.0 - p / denom;
    }
    Ok(product * (2.0 * beta - df))
}

/// Smallest `β ∈ (0, d]` (to `tol`) above which `r_k(β) > 0`, scanning
/// downward from `d`; `None` when `r_k(d) <= 0`.
pub fn positivity_threshold(k: u32, d: usize, tol: f64) -> Result<Option<f64>> {
    let df = d as f64;
    let at = |b: f64| r_k(RateInputs::new(b, d, k));
    if at(df)? <= 0.0 {
        return Ok(None);
    }
    // Walk down until the sign flips, then bisect.
    let step = df / 1024.0;
    let mut hi = df;
    let mut lo = hi - step;
    while lo > 0.0 && at(lo)? > 0.0 {
        hi = lo;
        lo -= step;
    }
    if lo <= 0.0 {
        return Ok(Some(0.0));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if at(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_product_for_k2() {
        assert_eq!(r_k(RateInputs::new(0.75, 1, 2)).unwrap(), 0.5);
        assert!((r_k(RateInputs::new(0.4, 1, 2)).unwrap() + 0.2).abs() < 1e-15);
        assert_eq!(r_k(RateInputs::new(1.5, 2, 2)).unwrap(), 1.0);
    }

    /// Hand evaluation at β = d = 1, k = 3: 1 - 4/3 = -1/3, so the bracket is
    /// 2 - 128/(128 + 1/3) = 2 - 384/385 = 386/385.
    #[test]
    fn k3_at_full_dimension() {
        let got = r_k(RateInputs::new(1.0, 1, 3)).unwrap();
        assert!((got - 386.0 / 385.0).abs() < 1e-12);
        assert!((got - (2.0 - 384.0 / 385.0)).abs() < 1e-12);
    }

    #[test]
    fn k4_hand_value() {
        // j=3: 386/385; j=4: 2^10 = 1024, 1 - 5/4 = -1/4, 2 - 1024/(1024.25) = 1 + 1/4097.
        let got = r_k(RateInputs::new(1.0, 1, 4)).unwrap();
        let expected = 386.0 / 385.0 * (2.0 - 1024.0 / 1024.25);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn monotone_near_full_dimension() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=10 {
            let b = 0.9 + 0.01 * i as f64;
            let r = r_k(RateInputs::new(b, 1, 3)).unwrap();
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(r_k(RateInputs::new(0.0, 1, 2)).is_err());
        assert!(r_k(RateInputs::new(1.2, 1, 2)).is_err());
        assert!(r_k(RateInputs::new(0.5, 1, 1)).is_err());
    }

    #[test]
    fn threshold_for_k2_is_half_dimension() {
        let t = positivity_threshold(2, 1, 1e-10).unwrap().unwrap();
        assert!((t - 0.5).abs() < 1e-9);
        let t3 = positivity_threshold(3, 1, 1e-10).unwrap().unwrap();
        assert!(r_k(RateInputs::new(t3 + 1e-8, 1, 3)).unwrap() > 0.0);
        assert!(r_k(RateInputs::new(t3 - 1e-8, 1, 3)).unwrap() <= 0.0);
    }
}
