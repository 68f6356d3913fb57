use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::gowers::uk_norm;
use crate::grid_measure::GridFunction;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Compares `∫∫ Π_{i=0}^k f_i(x - b_i r) dx dr` (componentwise `b_i r`,
/// integer `b_i`, torus wrap) with `Π_{i<k} ‖f_i‖_∞ · ‖f_k‖_{U^{k+1}}`.
pub fn transverse_inequality_check(
    fs: &[GridFunction],
    bs: &[Vec<i64>],
    k: usize,
) -> Result<TransverseCheck> {
    if fs.len() != k + 1 || bs.len() != k + 1 {
        return Err(LabError::InvalidParameter(format!(
            "need {} functions and vectors, got {} and {}",
            k + 1,
            fs.len(),
            bs.len()
        )));
    }
    let grid = *fs[0].grid();
    for f in fs {
        grid.check_same(f.grid())?;
    }
    if bs.iter().any(|b| b.len() != grid.d()) {
        return Err(LabError::InvalidParameter("b_i must have d components".into()));
    }
    for i in 0..bs.len() {
        for j in 0..i {
            let min = bs[i].iter().zip(&bs[j]).map(|(a, b)| (a - b).abs()).min().unwrap_or(0);
            if min < 1 {
                return Err(LabError::SeparationViolated { i: j, j: i });
            }
        }
    }
    let n = grid.n() as i64;
    let len = grid.len();
    let total = par::sum_indexed(len, |x| {
        let xm = grid.unravel(x);
        let mut acc = 0.0;
        for r in 0..len {
            let rm = grid.unravel(r);
            let mut prod = 1.0;
            for (f, b) in fs.iter().zip(bs) {
                let idx = xm.iter().zip(&rm).zip(b).fold(0usize, |acc, ((&xa, &ra), &ba)| {
                    acc * grid.n() + (xa as i64 - ba * ra as i64).rem_euclid(n) as usize
                });
                prod *= f.values()[idx];
                if prod == 0.0 {
                    break;
                }
            }
            acc += prod;
        }
        acc
    });
    let lhs = total / (len as f64 * len as f64);
    let sup: f64 = fs[..k].iter().map(|f| f.sup_norm()).product();
    let rhs = sup * uk_norm(&fs[k], k as u32 + 1)?;
    Ok(TransverseCheck {
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_measure::TorusGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b3() -> Vec<Vec<i64>> {
        vec![vec![0], vec![1], vec![2]]
    }

    #[test]
    fn constants_and_zero() {
        let g = TorusGrid::line(32).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let c = transverse_inequality_check(&[one.clone(), one.clone(), one.clone()], &b3(), 2).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-12 && (c.rhs - 1.0).abs() < 1e-12 && c.ok);
        let zero = GridFunction::zeros(g);
        let c = transverse_inequality_check(&[one.clone(), one, zero], &b3(), 2).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.ok);
    }

    #[test]
    fn random_instances_hold() {
        let g = TorusGrid::line(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            let fs: Vec<GridFunction> = (0..3)
                .map(|_| {
                    let v = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
                    GridFunction::new(g, v).unwrap()
                })
                .collect();
            let c = transverse_inequality_check(&fs, &b3(), 2).unwrap();
            assert!(c.ok, "{c:?}");
        }
    }

    #[test]
    fn separation_enforced() {
        let g = TorusGrid::new(2, 8).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let fs = vec![one.clone(), one.clone(), one];
        let bs = vec![vec![0, 0], vec![1, 2], vec![2, 2]];
        assert_eq!(
            transverse_inequality_check(&fs, &bs, 2),
            Err(LabError::SeparationViolated { i: 1, j: 2 })
        );
    }
}
