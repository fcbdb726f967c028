//! Subcommand implementations. Every command writes its artifacts under the
//! output directory and returns the process exit status: 0 success,
//! 2 validation failure, 3 tolerance failure, 4 spectral hit.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use fracdelay::calculus::{conv_diff_identity_residual, Signal};
use fracdelay::error::Error;
use fracdelay::kernels::{h_sequence, kernel_semigroup_residual, kernel_sequence};
use fracdelay::mr::{
    build, operator_norm_lower_bound, operator_norm_p2_with_limit, regularity_trend, OperatorKind,
};
use fracdelay::resolvent::{resolvent_residual, resolvent_sequence, validate_contour};
use fracdelay::solver::{homogeneous_check, solve_convolution, solve_direct, Solution};
use fracdelay::symbol::{
    multiplier_scan, condition_c_check, h_transform, hilbert_mr_check, kernel_transform, omega_f,
    transform_residual_scalar,
};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    Validation = 2,
    Tolerance = 3,
    SpectralHit = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

pub fn exit_for_error(e: &Error) -> Exit {
    match e {
        Error::SpectralHit { .. } | Error::QuadratureSingular { .. } => Exit::SpectralHit,
        _ => Exit::Validation,
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(dir, name, &text)
}

fn fmt_c(z: Complex64) -> (f64, f64) {
    (z.re, z.im)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct MethodReport {
    method: String,
    residual_max: f64,
    overflow_risk: bool,
    sup_norm_u: f64,
}

#[derive(Serialize)]
struct SolveReport {
    config: RunConfig,
    methods: Vec<MethodReport>,
    cross_method_deviation: Option<f64>,
    tolerance: f64,
    pass: bool,
    artifacts: Vec<String>,
}

fn solution_csv(sol: &Solution, spec: &fracdelay::ProblemSpec) -> String {
    let d = sol.u.dim();
    let gamma = Complex64::new(spec.params().gamma, 0.0);
    let lambda = spec.params().lambda;
    let mut out = String::new();
    out.push('n');
    for i in 0..d {
        out.push_str(&format!(",u{i}_re,u{i}_im"));
    }
    out.push_str(",dalpha_u_norm,residual\n");
    for n in 0..=sol.u.horizon() {
        out.push_str(&format!("{n}"));
        for i in 0..d {
            let (re, im) = fmt_c(sol.u.get(n)[i]);
            out.push_str(&format!(",{re},{im}"));
        }
        if n <= sol.dalpha_u.horizon() {
            // pointwise equation defect at this index
            let mut r = sol.dalpha_u.get(n).clone();
            r -= &spec.params().a_matrix * sol.u.get(n);
            if n >= lambda {
                r -= sol.u.get(n - lambda) * gamma;
            }
            r -= spec.forcing().get(n);
            out.push_str(&format!(",{},{}", sol.dalpha_u.get(n).norm(), r.norm()));
        } else {
            out.push_str(",,");
        }
        out.push('\n');
    }
    out
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path, method: &str) -> Result<Exit, Error> {
    let spec = cfg.problem()?;
    let mut methods = Vec::new();
    let csv_source: Option<Solution>;
    let mut cross: Option<f64> = None;

    let run = |sol: Solution, label: &str, reports: &mut Vec<MethodReport>| -> Solution {
        reports.push(MethodReport {
            method: label.into(),
            residual_max: sol.residual_max,
            overflow_risk: sol.overflow_risk,
            sup_norm_u: sol.u.sup_norm(),
        });
        sol
    };

    match method {
        "conv" => {
            csv_source = Some(run(solve_convolution(&spec)?, "conv", &mut methods));
        }
        "direct" => {
            csv_source = Some(run(solve_direct(&spec)?, "direct", &mut methods));
        }
        "both" => {
            let a = run(solve_convolution(&spec)?, "conv", &mut methods);
            let b = run(solve_direct(&spec)?, "direct", &mut methods);
            let dev = (0..=a.u.horizon())
                .map(|n| (a.u.get(n) - b.u.get(n)).norm())
                .fold(0.0f64, f64::max);
            cross = Some(dev / b.u.sup_norm().max(1.0));
            csv_source = Some(a);
        }
        other => {
            return Err(Error::Domain(format!(
                "unknown method '{other}' (expected conv | direct | both)"
            )))
        }
    }

    let sol = csv_source.expect("one method ran");
    let tol = cfg.tolerances.residual;
    let pass = methods.iter().all(|m| m.residual_max <= tol)
        && cross.is_none_or(|c| c <= cfg.tolerances.equivalence);
    let report = SolveReport {
        config: cfg.clone(),
        methods,
        cross_method_deviation: cross,
        tolerance: tol,
        pass,
        artifacts: vec!["solution.csv".into()],
    };
    write_text(out, "solution.csv", &solution_csv(&sol, &spec)).map_err(io_err)?;
    write_json(out, "solve.json", &report).map_err(io_err)?;
    Ok(if pass { Exit::Ok } else { Exit::Tolerance })
}

fn io_err(e: std::io::Error) -> Error {
    Error::Capacity(format!("io error: {e}"))
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    config: RunConfig,
    seed: u64,
    checks: Vec<Check>,
    pass: bool,
}

pub fn cmd_verify(
    cfg: &RunConfig,
    out: &Path,
    seed: u64,
    tol_override: Option<f64>,
) -> Result<Exit, Error> {
    let tols = &cfg.tolerances;
    let t_id = tol_override.unwrap_or(tols.identity);
    let t_res = tol_override.unwrap_or(tols.residual);
    let t_eq = tol_override.unwrap_or(tols.equivalence);
    let t_tr = tol_override.unwrap_or(tols.transform);
    let alpha = cfg.alpha;
    let mut checks: Vec<Check> = Vec::new();
    let push = |name: String, value: f64, tolerance: f64, checks: &mut Vec<Check>| {
        checks.push(Check {
            name,
            value,
            tolerance,
            pass: value <= tolerance,
        });
    };

    // kernel algebra
    for (b, g) in [
        (0.3, 0.7),
        (0.7, 1.2),
        (alpha - 2.0, 3.0 - alpha),
        (1.0, 1.0),
    ] {
        let v = kernel_semigroup_residual(b, g, 200)?;
        push(
            format!("kernel_semigroup[{b:.3},{g:.3}]"),
            v,
            t_id,
            &mut checks,
        );
    }
    {
        let h = h_sequence(alpha, 200)?;
        let c = (alpha - 1.0) * (alpha - 2.0) / 2.0;
        let mut worst = 0.0f64;
        for n in 0..198 {
            let lhs = h.get(n + 3) + (1.0 - alpha) * h.get(n + 2) + c * h.get(n + 1);
            worst = worst.max(lhs.abs() / h.get(n + 3).abs().max(1.0));
        }
        push("h_recursion".into(), worst, t_id, &mut checks);
    }

    // convolution/difference exchange on seeded random data
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst_exchange = 0.0f64;
    for trial in 0..20 {
        let dim = if trial % 2 == 0 { 1 } else { 3 };
        let b: Vec<f64> = (0..65).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = Signal::from_fn(dim, 64, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        worst_exchange = worst_exchange.max(conv_diff_identity_residual(&b, &p, alpha)?);
    }
    push(
        "conv_diff_exchange".into(),
        worst_exchange,
        t_id,
        &mut checks,
    );

    // resolvent defining identity on the configured instance
    let params = cfg.params()?;
    let s = resolvent_sequence(&params, cfg.horizon.clamp(8, 200))?;
    push(
        "resolvent_identity".into(),
        resolvent_residual(&s)?,
        t_res,
        &mut checks,
    );

    // solver: method equivalence and residuals on the configured problem
    let spec = cfg.problem()?;
    let a = solve_convolution(&spec)?;
    let b = solve_direct(&spec)?;
    push(
        "solve_residual_conv".into(),
        a.residual_max,
        t_res,
        &mut checks,
    );
    push(
        "solve_residual_direct".into(),
        b.residual_max,
        t_res,
        &mut checks,
    );
    let dev = (0..=a.u.horizon())
        .map(|n| (a.u.get(n) - b.u.get(n)).norm())
        .fold(0.0f64, f64::max)
        / b.u.sup_norm().max(1.0);
    push("method_equivalence".into(), dev, t_eq, &mut checks);

    // uniqueness: homogeneous run must be exactly zero
    let hom = homogeneous_check(&params, cfg.horizon.clamp(8, 200))?;
    push("homogeneous_zero".into(), hom.sup_norm, 0.0, &mut checks);

    // transform identities
    let h = h_sequence(alpha, 200)?;
    let chk = transform_residual_scalar(h.values(), |z| h_transform(alpha, z), 2.0, 128)?;
    push("transform_h".into(), chk.max_rel_err, t_tr, &mut checks);
    let k = kernel_sequence(alpha - 2.0, 200)?;
    let chk =
        transform_residual_scalar(k.values(), |z| kernel_transform(alpha - 2.0, z), 1.5, 128)?;
    push(
        "transform_kernel".into(),
        chk.max_rel_err,
        t_tr,
        &mut checks,
    );

    let pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        config: cfg.clone(),
        seed,
        checks,
        pass,
    };
    write_json(out, "verify.json", &report).map_err(io_err)?;
    Ok(if pass { Exit::Ok } else { Exit::Tolerance })
}

// ---------------------------------------------------------------------------
// symbol-scan
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SymbolReport {
    config: RunConfig,
    sup_g1: f64,
    sup_g1_arg: f64,
    sup_g2: f64,
    sup_g2_arg: f64,
    sup_weighted_d1: f64,
    sup_weighted_d2: f64,
    min_abs_f_on_grid: f64,
    refine_rel_change: [f64; 4],
    max_closed_form_defect_g1: f64,
    max_closed_form_defect_g2: f64,
    spectral_hits: usize,
    omega_f: f64,
    omega_f_argmin: f64,
    condition_holds: bool,
    condition_margin_low: f64,
    condition_margin_high: f64,
    neumann_ok: bool,
    neumann_max_ratio: f64,
    hilbert_bounded: bool,
    hilbert_corner_ratios: Vec<Vec<f64>>,
}

pub fn cmd_symbol(cfg: &RunConfig, out: &Path) -> Result<Exit, Error> {
    let grid = cfg.circle_grid()?;
    let a = cfg.a_matrix();
    let scan = multiplier_scan(&a, cfg.alpha, cfg.gamma, cfg.lambda, &grid)?;
    let omega = omega_f(cfg.alpha, cfg.gamma, cfg.lambda, &grid)?;
    let cond = condition_c_check(&a, cfg.alpha, cfg.gamma, cfg.lambda, &grid)?;
    let hilbert = hilbert_mr_check(&a, cfg.alpha, cfg.gamma, cfg.lambda, &grid)?;

    let mut csv = String::from("t,abs_f,g1_norm,g2_norm,weighted_d1,weighted_d2,defect_g1,defect_g2\n");
    for node in &scan.nodes {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            node.t,
            node.f.norm(),
            node.g1_norm,
            node.g2_norm,
            node.weighted_d1,
            node.weighted_d2,
            node.closed_form_defect_g1,
            node.closed_form_defect_g2
        ));
    }
    write_text(out, "scan.csv", &csv).map_err(io_err)?;

    let s = &scan.summary;
    let report = SymbolReport {
        config: cfg.clone(),
        sup_g1: s.sup_g1.0,
        sup_g1_arg: s.sup_g1.1,
        sup_g2: s.sup_g2.0,
        sup_g2_arg: s.sup_g2.1,
        sup_weighted_d1: s.sup_weighted_d1.0,
        sup_weighted_d2: s.sup_weighted_d2.0,
        min_abs_f_on_grid: s.min_abs_f.0,
        refine_rel_change: s.refine_rel_change,
        max_closed_form_defect_g1: s.max_closed_form_defect_g1,
        max_closed_form_defect_g2: s.max_closed_form_defect_g2,
        spectral_hits: s.spectral_hits,
        omega_f: omega.omega,
        omega_f_argmin: omega.argmin,
        condition_holds: cond.holds,
        condition_margin_low: cond.margin_low,
        condition_margin_high: cond.margin_high,
        neumann_ok: cond.neumann_ok,
        neumann_max_ratio: cond.neumann_max_ratio,
        hilbert_bounded: hilbert.bounded,
        hilbert_corner_ratios: hilbert.corner_ratios.iter().map(|r| r.to_vec()).collect(),
    };
    write_json(out, "symbol.json", &report).map_err(io_err)?;
    Ok(if s.spectral_hits > 0 {
        Exit::SpectralHit
    } else {
        Exit::Ok
    })
}

// ---------------------------------------------------------------------------
// mr
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct MrEstimate {
    kind: String,
    horizon: usize,
    p: f64,
    estimate: f64,
    method: String,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct MrReport {
    config: RunConfig,
    estimates: Vec<MrEstimate>,
    trend_horizons: Vec<usize>,
    trend_e_norms: Vec<f64>,
    trend_f_norms: Vec<f64>,
    trend_ratios_e: Vec<f64>,
    trend_ratios_f: Vec<f64>,
    mr_consistent: bool,
    overflow_risk: bool,
    reconstruction_residual: f64,
    reconstruction_tolerance: f64,
    pass: bool,
}

pub fn cmd_mr(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Exit, Error> {
    let params = cfg.params()?;
    let n = *cfg.mr.horizons.last().expect("nonempty horizons");
    let e_op = build(OperatorKind::EAlpha, &params, n)?;
    let f_op = build(OperatorKind::FAlpha, &params, n)?;
    let p = cfg.mr.p;
    let mut estimates = Vec::new();
    for (op, label) in [(&e_op, "E"), (&f_op, "F")] {
        estimates.push(MrEstimate {
            kind: label.into(),
            horizon: n,
            p: 2.0,
            estimate: operator_norm_p2_with_limit(op, n, usize::MAX)?,
            method: "power-iteration".into(),
            seed: None,
        });
        if (p - 2.0).abs() > 1e-12 {
            estimates.push(MrEstimate {
                kind: label.into(),
                horizon: n,
                p,
                estimate: operator_norm_lower_bound(op, n, p, cfg.mr.trials, seed)?,
                method: "seeded-lower-bound".into(),
                seed: Some(seed),
            });
        }
    }

    let trend = regularity_trend(&params, &cfg.mr.horizons)?;

    // reconstruction against the stepping solver on the configured forcing
    let spec = cfg.problem()?;
    let sol = solve_direct(&spec)?;
    let horizon = cfg.horizon;
    let e_small = build(OperatorKind::EAlpha, &params, horizon)?;
    let f_small = build(OperatorKind::FAlpha, &params, horizon)?;
    let ef = fracdelay::mr::apply(&e_small, spec.forcing())?;
    let ff = fracdelay::mr::apply(&f_small, spec.forcing())?;
    let gamma = Complex64::new(cfg.gamma, 0.0);
    let scale = sol.dalpha_u.sup_norm().max(1.0);
    let mut recon = 0.0f64;
    for m in 3..=horizon {
        let rhs = ef.get(m - 3) + ff.get(m - 3) * gamma + spec.forcing().get(m);
        recon = recon.max((sol.dalpha_u.get(m) - rhs).norm() / scale);
    }
    let pass = recon <= cfg.tolerances.residual;

    let report = MrReport {
        config: cfg.clone(),
        estimates,
        trend_horizons: trend.rows.iter().map(|r| r.horizon).collect(),
        trend_e_norms: trend.rows.iter().map(|r| r.e_norm).collect(),
        trend_f_norms: trend.rows.iter().map(|r| r.f_norm).collect(),
        trend_ratios_e: trend.ratios_e.clone(),
        trend_ratios_f: trend.ratios_f.clone(),
        mr_consistent: trend.mr_consistent,
        overflow_risk: e_op.overflow_risk() || f_op.overflow_risk(),
        reconstruction_residual: recon,
        reconstruction_tolerance: cfg.tolerances.residual,
        pass,
    };
    write_json(out, "mr.json", &report).map_err(io_err)?;
    Ok(if pass { Exit::Ok } else { Exit::Tolerance })
}

// ---------------------------------------------------------------------------
// report (everything, plus kernels csv and the contour cross-check)
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ContourSection {
    primary_radius: f64,
    primary_error: f64,
    fallback_radius: f64,
    fallback_error: f64,
    validated_radius: Option<f64>,
    tolerance: f64,
    nodes: usize,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct FullReport {
    version: String,
    config: RunConfig,
    contour: ContourSection,
    exit_solve: i32,
    exit_verify: i32,
    exit_symbol: i32,
    exit_mr: i32,
}

fn kernels_csv(cfg: &RunConfig) -> Result<String, Error> {
    let n = cfg.horizon.min(512);
    let k_frac = kernel_sequence(cfg.alpha - 2.0, n)?;
    let k_comp = kernel_sequence(3.0 - cfg.alpha, n)?;
    let h = h_sequence(cfg.alpha, n)?;
    let mut out = String::from("n,k_alpha_minus_2,k_3_minus_alpha,h_alpha\n");
    for j in 0..=n {
        out.push_str(&format!(
            "{j},{},{},{}\n",
            k_frac.get(j),
            k_comp.get(j),
            h.get(j)
        ));
    }
    Ok(out)
}

pub fn cmd_report(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Exit, Error> {
    let exit_solve = cmd_solve(cfg, out, "both")?;
    let exit_verify = cmd_verify(cfg, out, seed, None)?;
    let exit_symbol = cmd_symbol(cfg, out)?;
    let exit_mr = cmd_mr(cfg, out, seed)?;

    write_text(out, "kernels.csv", &kernels_csv(cfg)?).map_err(io_err)?;

    let params = cfg.params()?;
    let contour = validate_contour(
        &params,
        cfg.contour.radius,
        cfg.contour.nodes,
        10,
        cfg.tolerances.contour,
    )?;
    let section = ContourSection {
        primary_radius: contour.primary_radius,
        primary_error: contour.primary_error,
        fallback_radius: contour.fallback_radius,
        fallback_error: contour.fallback_error,
        validated_radius: contour.validated_radius,
        tolerance: contour.tolerance,
        nodes: contour.nodes,
        notes: contour.discrepancy_lines(),
    };

    let report = FullReport {
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        contour: section,
        exit_solve: exit_solve.code(),
        exit_verify: exit_verify.code(),
        exit_symbol: exit_symbol.code(),
        exit_mr: exit_mr.code(),
    };
    write_json(out, "report.json", &report).map_err(io_err)?;
    Ok([exit_solve, exit_verify, exit_symbol, exit_mr]
        .into_iter()
        .max()
        .expect("nonempty"))
}
