use crate::grid_measure::{window_sum_axis, GridFunction, TorusGrid};

/// Half-widths `h` of the centred cubes `[x-h, x+h]^d` (in cells) used by
/// [`hl_maximal`]: `0` and the powers of two with `2h + 1 < N`.
pub fn hl_radii(grid: &TorusGrid) -> Vec<usize> {
    let mut out = vec![0];
    let mut h = 1;
    while 2 * h + 1 < grid.n() {
        out.push(h);
        h *= 2;
    }
    out
}

/// Discrete Hardy–Littlewood maximal function: the largest average of `|f|`
/// over the centred cubes of [`hl_radii`] and the whole torus.
pub fn hl_maximal(f: &GridFunction) -> GridFunction {
    let grid = *f.grid();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let mut best = abs.clone();
    for h in hl_radii(&grid).into_iter().skip(1) {
        let width = 2 * h + 1;
        let mut cur = abs.clone();
        for axis in 0..grid.d() {
            cur = window_sum_axis(&grid, &cur, axis, -(h as i64), width);
        }
        let vol = (width as f64).powi(grid.d() as i32);
        for (b, c) in best.iter_mut().zip(&cur) {
            *b = b.max(c / vol);
        }
    }
    let mean = abs.iter().sum::<f64>() / abs.len() as f64;
    best.iter_mut().for_each(|b| *b = b.max(mean));
    GridFunction::new(grid, best).expect("grid sizes agree")
}

/// `max_λ λ |{f* > λ}| / ‖f‖_1`, the empirical weak-(1,1) constant.
pub fn weak_type_constant(f: &GridFunction, lambdas: &[f64]) -> f64 {
    let l1 = f.lp_norm(1.0);
    if l1 == 0.0 {
        return 0.0;
    }
    let fstar = hl_maximal(f);
    let vol = f.grid().cell_volume();
    lambdas
        .iter()
        .map(|&lam| {
            let count = fstar.values().iter().filter(|&&v| v > lam).count();
            lam * count as f64 * vol / l1
        })
        .fold(0.0, f64::max)
}
