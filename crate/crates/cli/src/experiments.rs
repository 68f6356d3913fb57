use serde::Serialize;
use serde_json::{json, Value};

use gowerslab_core::dyadic::{lipschitz_bound_check, scale1_check, scale3_check, DyadicLevel, ScaleLemmaConfig};
use gowerslab_core::fourier::{fourier_decay_fit, higher_order_decay_fit, Dft, DecayFit, FitWindow};
use gowerslab_core::gowers::{prop1_decay_check, uk_norm, uk_norm_spectral_u2, MemoryBudget, Prop1Config};
use gowerslab_core::grid_measure::{ball_condition_fit, default_radii, delta_mollify, mollify};
use gowerslab_core::maximal::{
    internal_tangency_exact, internal_tangency_measure, sup_growth, tangency_constant,
    theorem_d11_experiment, transverse_inequality_check, D11Config, McConfig, OmegaSet,
    ScaleFunction, ScaleKind,
};
use gowerslab_core::{GridFunction, LabError, MollifierFamily, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{derive_seed, ExperimentConfig, OmegaKind, ScaleChoice};

/// Result of one experiment: artifacts, numeric details and the pass flag.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub name: String,
    pub seed: u64,
    pub pass: bool,
    #[serde(skip)]
    pub csvs: Vec<(String, String)>,
    pub details: Value,
    pub summary: Vec<String>,
    pub error: Option<String>,
}

/// Switches that change which checks run, not their numeric inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Run the exact enumeration oracles as well.
    pub exact: bool,
}

pub const EXPERIMENTS: [&str; 6] = [
    "build-measure",
    "fourier-fit",
    "gowers-norms",
    "prop1",
    "maximal-7p8",
    "verify-lemmas",
];

struct Draft {
    pass: bool,
    csvs: Vec<(String, String)>,
    details: Value,
    summary: Vec<String>,
}

type Step = Result<Draft, LabError>;

pub fn run_experiment(name: &str, cfg: &ExperimentConfig, opts: RunOptions) -> Outcome {
    let seed = derive_seed(cfg.master_seed, name);
    let result = match name {
        "build-measure" => build_measure(cfg),
        "fourier-fit" => fourier_fit(cfg, seed),
        "gowers-norms" => gowers_norms(cfg, seed),
        "prop1" => prop1(cfg, seed),
        "maximal-7p8" => maximal(cfg, seed),
        "verify-lemmas" => verify_lemmas(cfg, seed, opts),
        other => Err(LabError::InvalidParameter(format!("unknown experiment {other}"))),
    };
    match result {
        Ok(d) => Outcome {
            name: name.to_string(),
            seed,
            pass: d.pass,
            csvs: d.csvs,
            details: d.details,
            summary: d.summary,
            error: None,
        },
        Err(e) => Outcome {
            name: name.to_string(),
            seed,
            pass: false,
            csvs: Vec::new(),
            details: Value::Null,
            summary: vec![format!("error: {e}")],
            error: Some(e.to_string()),
        },
    }
}

fn budget(cfg: &ExperimentConfig) -> MemoryBudget {
    MemoryBudget::new(cfg.memory_budget_mib as u128 * (1 << 20))
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn random_functions(grid: TorusGrid, count: usize, seed: u64) -> Vec<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            GridFunction::new(grid, v).expect("sizes agree")
        })
        .collect()
}

fn coordinate_header(d: usize) -> String {
    if d == 1 {
        "x".into()
    } else {
        (1..=d).map(|a| format!("x{a}")).collect::<Vec<_>>().join(",")
    }
}

fn build_measure(cfg: &ExperimentConfig) -> Step {
    let grid = cfg.torus();
    let mu = cfg.build_measure(grid)?;
    let fam = cfg.family();
    let mut csv = format!("{},mass\n", coordinate_header(grid.d()));
    for (i, w) in mu.weights().iter().enumerate() {
        let x: Vec<String> = grid.coords(i).iter().map(|c| c.to_string()).collect();
        csv.push_str(&format!("{},{w}\n", x.join(",")));
    }

    let max = MollifierFamily::max_scale(&grid);
    let mut mass_err = 0.0f64;
    let mut min_value = f64::INFINITY;
    for n in 1..=max {
        let m = mollify(&mu, n, &fam)?;
        mass_err = mass_err.max((m.integral() - mu.mass()).abs());
        min_value = min_value.min(m.values().iter().cloned().fold(f64::INFINITY, f64::min));
    }
    let mass_ok = mass_err <= 1e-10;
    let nonneg_ok = min_value >= -1e-10;

    let fit = ball_condition_fit(&mu, &default_radii(&grid))?;
    let mut ball = String::from("radius,max_ball_mass\n");
    for (r, m) in fit.radii.iter().zip(&fit.max_masses) {
        ball.push_str(&format!("{r},{m}\n"));
    }
    let scales: Vec<u32> = (2..=max.min(6)).collect();
    let sups = sup_growth(&mu, &scales, &fam)?;
    let mut sup = String::from("n,sup_norm\n");
    for (n, s) in sups.scales.iter().zip(&sups.sups) {
        sup.push_str(&format!("{n},{s}\n"));
    }
    Ok(Draft {
        pass: mass_ok && nonneg_ok,
        summary: vec![
            format!("measure {} on d = {}, N = {}: mass {}", mu.name(), grid.d(), grid.n(), mu.mass()),
            format!("ball condition: α = {:.4}, C = {:.4}", fit.alpha, fit.c_h),
            format!("sup growth slope {:.4} (d - α = {:.4})", sups.slope, grid.d() as f64 - fit.alpha),
            format!("[{}] mass conservation, max error {mass_err:.3e}", flag(mass_ok)),
            format!("[{}] nonnegativity, min value {min_value:.3e}", flag(nonneg_ok)),
        ],
        details: json!({
            "measure": mu.name(),
            "mass": mu.mass(),
            "ball_fit": fit,
            "sup_growth": sups,
            "mass_error": mass_err,
            "min_mollified_value": min_value,
            "mass_ok": mass_ok,
            "nonnegative_ok": nonneg_ok,
        }),
        csvs: vec![
            ("measure.csv".into(), csv),
            ("ball_condition.csv".into(), ball),
            ("sup_growth.csv".into(), sup),
        ],
    })
}

fn push_bands(out: &mut String, fit: &DecayFit) {
    for (c, e) in &fit.bands {
        out.push_str(&format!("{},{c},{e},{}\n", fit.order, fit.direction));
    }
}

fn fourier_fit(cfg: &ExperimentConfig, seed: u64) -> Step {
    let grid = cfg.torus();
    let mu = cfg.build_measure(grid)?;
    let fam = cfg.family();
    let q = cfg.fourier.quantile;
    let classical = fourier_decay_fit(&mu, FitWindow::classical_default(&grid), q)?;

    let mut mags = mu.dft().magnitudes();
    mags.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut spectrum = String::from("frequency_radius,magnitude\n");
    for (r, m) in mags.iter().skip(1) {
        spectrum.push_str(&format!("{r},{m}\n"));
    }

    let fit_scale = cfg.fourier.fit_scale.unwrap_or(MollifierFamily::max_scale(&grid));
    let window = FitWindow::mollified_default(&grid, fit_scale);
    let mut bands = String::from("order,band_centre,envelope,direction\n");
    push_bands(&mut bands, &classical);
    let mut higher = Vec::new();
    for j in 1..=cfg.fourier.max_order {
        let fit = higher_order_decay_fit(&mu, j, fit_scale, &fam, window, q, cfg.slice_mode(seed), budget(cfg))?;
        push_bands(&mut bands, &fit);
        higher.push(fit);
    }

    let mu_n = mollify(&mu, fit_scale, &fam)?;
    let lhs = mu_n.dft().power_sum(2.0);
    let rhs = mu_n.lp_norm(2.0).powi(2);
    let parseval_err = (lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE);
    let parseval_ok = parseval_err <= 1e-8;

    let mut summary = vec![format!(
        "classical: exponent {:.4}, β = {:.4}{}",
        classical.exponent,
        classical.beta,
        if classical.degenerate { " (degenerate)" } else { "" }
    )];
    for f in &higher {
        summary.push(format!(
            "order {} at scale {fit_scale}: exponent {:.4}, β = {:.4} ({})",
            f.order, f.exponent, f.beta, f.direction
        ));
    }
    summary.push(format!("[{}] Parseval, relative error {parseval_err:.3e}", flag(parseval_ok)));
    Ok(Draft {
        pass: parseval_ok,
        details: json!({
            "classical": classical,
            "higher_order": higher,
            "fit_scale": fit_scale,
            "parseval_relative_error": parseval_err,
            "parseval_ok": parseval_ok,
        }),
        csvs: vec![("spectrum.csv".into(), spectrum), ("bands.csv".into(), bands)],
        summary,
    })
}

fn gowers_norms(cfg: &ExperimentConfig, seed: u64) -> Step {
    let grid = cfg.torus();
    let mu = cfg.build_measure(grid)?;
    let fam = cfg.family();
    let k_max = cfg.gowers.k_max;
    let mut csv = String::from("n,k,mollified_norm,difference_norm\n");
    let mut nesting_ok = true;
    let mut oracle_err = 0.0f64;
    let mut rows = Vec::new();
    for n in cfg.gowers.n_min..=cfg.gowers.n_max {
        let mu_n = mollify(&mu, n, &fam)?;
        let diff = delta_mollify(&mu, n, &fam)?;
        let mut prev = (0.0, 0.0);
        for k in 1..=k_max {
            let a = uk_norm(&mu_n, k)?;
            let b = uk_norm(&diff, k)?;
            if k > 1 {
                nesting_ok &= prev.0 <= a + 1e-9 * a.max(1.0) && prev.1 <= b + 1e-9 * b.max(1.0);
            }
            if k == 2 {
                for (f, v) in [(&mu_n, a), (&diff, b)] {
                    let o = uk_norm_spectral_u2(f);
                    oracle_err = oracle_err.max((v - o).abs() / o.max(1e-300));
                }
            }
            prev = (a, b);
            csv.push_str(&format!("{n},{k},{a},{b}\n"));
            rows.push(json!({"n": n, "k": k, "mollified": a, "difference": b}));
        }
    }

    let rg = TorusGrid::line(cfg.gowers.random_n)?;
    let mut suite = String::from("function,u1,abs_mean,u2,u2_fourier,u3\n");
    let mut identity_err = 0.0f64;
    for (i, f) in random_functions(rg, cfg.gowers.random_functions, seed).iter().enumerate() {
        let u: Vec<f64> = (1..=3).map(|k| uk_norm(f, k)).collect::<Result<_, _>>()?;
        let spec = uk_norm_spectral_u2(f);
        let mean = f.integral().abs();
        identity_err = identity_err.max((u[0] - mean).abs());
        oracle_err = oracle_err.max((u[1] - spec).abs() / spec.max(1e-300));
        nesting_ok &= u[0] <= u[1] + 1e-9 && u[1] <= u[2] + 1e-9;
        suite.push_str(&format!("{i},{},{mean},{},{spec},{}\n", u[0], u[1], u[2]));
    }
    let oracle_ok = oracle_err <= 1e-8;
    let identity_ok = identity_err <= 1e-10;
    Ok(Draft {
        pass: nesting_ok && oracle_ok && identity_ok,
        summary: vec![
            format!("U^k norms for k = 1..={k_max}, n = {}..={}", cfg.gowers.n_min, cfg.gowers.n_max),
            format!("[{}] nesting U1 <= U2 <= U3", flag(nesting_ok)),
            format!("[{}] U2 against Fourier fourth moment, max relative error {oracle_err:.3e}", flag(oracle_ok)),
            format!("[{}] U1 = |mean|, max error {identity_err:.3e}", flag(identity_ok)),
        ],
        details: json!({
            "norms": rows,
            "nesting_ok": nesting_ok,
            "u2_oracle_relative_error": oracle_err,
            "u1_identity_error": identity_err,
        }),
        csvs: vec![("norms.csv".into(), csv), ("random_suite.csv".into(), suite)],
    })
}

fn prop1(cfg: &ExperimentConfig, seed: u64) -> Step {
    let grid = cfg.torus();
    let mu = cfg.build_measure(grid)?;
    let p = &cfg.prop1;
    let config = Prop1Config {
        k: p.k,
        n_min: p.n_min,
        n_max: p.n_max,
        family: cfg.family(),
        slack: p.slack,
        beta_floor: p.beta_floor,
        quantile: cfg.fourier.quantile,
        slice_mode: cfg.slice_mode(seed),
        fit_scale: cfg.fourier.fit_scale,
        ..Default::default()
    };
    let r = prop1_decay_check(&mu, &config, budget(cfg))?;
    let mut summary = vec![
        format!(
            "slope {:.4} vs predicted {:.4} + slack {}; β_fit = {:.4}, r_{} = {:.4}",
            r.slope, r.predicted_slope, r.slack, r.beta_fit, r.k, r.r_k
        ),
        format!("[{}] decay hypothesis β_fit > {}", flag(r.hypothesis_met), p.beta_floor),
        format!("[{}] slope within the predicted rate", flag(r.pass)),
    ];
    if let Some(note) = &r.note {
        summary.push(note.clone());
    }
    Ok(Draft {
        pass: r.pass,
        csvs: vec![("norms.csv".into(), r.to_csv())],
        details: serde_json::to_value(&r).expect("report serialises"),
        summary,
    })
}

fn maximal(cfg: &ExperimentConfig, seed: u64) -> Step {
    let grid = cfg.torus();
    let mu = cfg.build_measure(grid)?;
    let x = &cfg.maximal;
    let omega = match x.omega {
        OmegaKind::Interval => OmegaSet::interval(grid, 0.0, x.omega_volume)?,
        OmegaKind::RandomDyadic => OmegaSet::random_dyadic_union(grid, x.omega_level, x.omega_volume, seed)?,
        OmegaKind::Cantor => OmegaSet::cantor_like(grid, 1.0 / 3.0, x.omega_level)?,
    };
    let kind = match x.scale {
        ScaleChoice::Constant => ScaleKind::Constant { value: x.scale_value },
        ScaleChoice::Random => ScaleKind::Random { seed: seed ^ 0x5eed },
        ScaleChoice::Sawtooth => ScaleKind::Sawtooth { teeth: x.scale_value as u32 },
    };
    let t = ScaleFunction::new(grid, kind)?;
    let config = D11Config {
        k: x.k,
        n_min: x.n_min,
        n_max: x.n_max,
        eps: x.eps,
        eps_margin: x.eps_margin,
        slack: x.slack,
        mc: McConfig { samples: x.samples, seed, stream: 0 },
        interpolation: x.interpolation,
        family: cfg.family(),
        quantile: cfg.fourier.quantile,
        slice_mode: cfg.slice_mode(seed),
        radii: None,
        fit_scale: cfg.fourier.fit_scale,
    };
    let r = theorem_d11_experiment(&mu, &omega, &t, &config, budget(cfg))?;
    let mut rows = String::from(
        "n,delta,sup_norm,internal,internal_se,transverse,transverse_se,total,total_se,bound_internal,bound_transverse\n",
    );
    for w in &r.rows {
        rows.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            w.n, w.delta, w.sup_norm, w.internal, w.internal_se, w.transverse, w.transverse_se,
            w.total, w.total_se, w.bound_internal, w.bound_transverse
        ));
    }
    let mut summary = vec![
        format!(
            "α = {:.4}, β = {:.4}, ε = {:.4}, η0 = {:.4}, η1 = {:.4}",
            r.alpha_fit, r.beta_fit, r.eps, r.eta0, r.eta1
        ),
        format!("combined slope {:.4} vs -η + slack = {:.4}", r.slope, -r.eta + r.slack),
        format!("[{}] internal piece within its bound", flag(r.internal_ok)),
        format!("[{}] decay trend", flag(r.pass)),
    ];
    if let Some(note) = &r.note {
        summary.push(note.clone());
    }
    Ok(Draft {
        pass: r.pass,
        csvs: vec![("estimates.csv".into(), r.to_csv()), ("rows.csv".into(), rows)],
        details: serde_json::to_value(&r).expect("report serialises"),
        summary,
    })
}

fn verify_lemmas(cfg: &ExperimentConfig, seed: u64, opts: RunOptions) -> Step {
    let l = &cfg.lemmas;
    let d = cfg.grid.d;
    let fam = cfg.family();
    let mut summary = Vec::new();
    let mut csvs = Vec::new();

    // Transverse inequality, k = 2, b_i = i·(1, …, 1).
    let tg = TorusGrid::new(d, l.transverse_n)?;
    let bs: Vec<Vec<i64>> = (0..3).map(|i| vec![i; d]).collect();
    let fs = random_functions(tg, 3 * l.transverse_instances, derive_seed(seed, "transverse"));
    let mut tcsv = String::from("instance,lhs,rhs\n");
    let mut t_viol = 0;
    for (i, triple) in fs.chunks(3).enumerate() {
        let c = transverse_inequality_check(triple, &bs, 2)?;
        t_viol += usize::from(!c.ok);
        tcsv.push_str(&format!("{i},{},{}\n", c.lhs, c.rhs));
    }
    summary.push(format!("[{}] transverse: {t_viol} violations in {} instances", flag(t_viol == 0), l.transverse_instances));
    csvs.push(("transverse.csv".into(), tcsv));

    // Internal tangency on Ω = [0,1]^d.
    let gg = TorusGrid::new(d, l.tangency_n)?;
    let omega = OmegaSet::interval(gg, 0.0, 1.0)?;
    let mc = internal_tangency_measure(
        &omega,
        l.tangency_delta,
        2,
        McConfig { samples: l.tangency_samples, seed: derive_seed(seed, "tangency"), stream: 0 },
    )?;
    let bound = tangency_constant(2, d) * l.tangency_delta * omega.volume();
    let mut tangency_ok = mc.value <= bound + 3.0 * mc.std_error;
    let exact = if opts.exact && d == 1 && l.tangency_n <= 64 {
        let e = internal_tangency_exact(&omega, l.tangency_delta)?;
        tangency_ok &= (mc.value - e).abs() <= 3.0 * mc.std_error;
        Some(e)
    } else {
        None
    };
    let exact_text = exact.map(|e| e.to_string()).unwrap_or_default();
    csvs.push((
        "tangency.csv".into(),
        format!("delta,estimate,std_error,exact,bound\n{},{},{},{exact_text},{bound}\n", l.tangency_delta, mc.value, mc.std_error),
    ));
    summary.push(format!(
        "[{}] internal tangency: {:.5} ± {:.5}{} <= {bound:.4}",
        flag(tangency_ok),
        mc.value,
        mc.std_error,
        exact.map(|e| format!(" (exact {e:.5})")).unwrap_or_default()
    ));

    // Dyadic scale lemmas.
    let sg = TorusGrid::new(d, l.scale_n)?;
    let mu = cfg.build_measure(sg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "scale1"));
    let top = sg.log2_n().min(6);
    let mut s1csv = String::from("function,s,r,point,lhs,rhs\n");
    let mut s1_viol = 0;
    for (i, f) in random_functions(sg, l.scale1_functions, derive_seed(seed, "scale1-f")).iter().enumerate() {
        let s = rng.random_range(0..=top);
        let r = (-(rng.random_range(s..=s + 3) as f64)).exp2();
        let xs: Vec<usize> = (0..l.scale1_points).map(|_| rng.random_range(0..sg.len())).collect();
        let rep = scale1_check(f, &mu, DyadicLevel::new(s, &sg)?, r, &xs)?;
        s1_viol += rep.violations;
        for smp in &rep.samples {
            s1csv.push_str(&format!("{i},{s},{r},{},{},{}\n", smp.sample, smp.lhs, smp.rhs));
        }
    }
    summary.push(format!("[{}] scale1: {s1_viol} violations", flag(s1_viol == 0)));
    csvs.push(("scale1.csv".into(), s1csv));

    let scfg = ScaleLemmaConfig {
        c: l.scale_c,
        t_samples: l.t_samples,
        pairs: l.pairs,
        seed: derive_seed(seed, "scale2"),
        tolerance: l.tolerance,
    };
    let r2 = lipschitz_bound_check(&mu, l.scale_k, l.scale_s, &fam, &scfg)?;
    let limit = 1.0 + l.tolerance;
    let s2_ok = r2.max_ratio <= limit;
    summary.push(format!("[{}] scale2: max ratio {:.4}", flag(s2_ok), r2.max_ratio));
    csvs.push(("scale2.csv".into(), r2.to_csv()));

    let f = random_functions(sg, 1, derive_seed(seed, "scale3")).remove(0);
    let r3 = scale3_check(&f, &mu, l.scale_k, DyadicLevel::new(l.scale_s, &sg)?, l.scale_p, &fam, &scfg)?;
    let s3_ok = r3.max_ratio <= limit && r3.lhs <= limit * r3.rhs;
    summary.push(format!("[{}] scale3: max ratio {:.4}, ‖M f‖_p = {:.4e} vs {:.4e}", flag(s3_ok), r3.max_ratio, r3.lhs, r3.rhs));
    csvs.push(("scale3.csv".into(), r3.to_csv()));

    Ok(Draft {
        pass: t_viol == 0 && tangency_ok && s1_viol == 0 && s2_ok && s3_ok,
        details: json!({
            "transverse_violations": t_viol,
            "tangency": {"estimate": mc, "exact": exact, "bound": bound, "ok": tangency_ok},
            "scale1_violations": s1_viol,
            "scale2": {"max_ratio": r2.max_ratio, "violations": r2.violations, "note": r2.note},
            "scale3": {"max_ratio": r3.max_ratio, "lhs": r3.lhs, "rhs": r3.rhs, "note": r3.note},
        }),
        csvs,
        summary,
    })
}
