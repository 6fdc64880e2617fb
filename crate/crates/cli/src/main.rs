//! `twfilm`: traveling-wave thin-film solver front end.
//!
//! Data goes to files (written atomically), a human summary to stdout.
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{Format, Invalid, RunConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use twfilm::matching::{k_grid, reconstruct_x, solve_and_match, sweep_k, with_pool, BEstimator};
use twfilm::model::near_resonance_warning;
use twfilm::series::{compute_g, g_pde_residual, g_residual_relative, solve_w, w_fixed_point_residual};
use twfilm::shoot::{shoot_b, FarField};
use twfilm::verify::{verify, VerifyOptions};
use twfilm::{bvp::picard_solve, normalize, resonance_class, validate_params, Params, ScaleRecord};

#[derive(Parser)]
#[command(name = "twfilm", version, about = "Traveling waves of the thin-film equation with partial wetting")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Shoot for the contact-line parameter and write the slope profile.
    Solve {
        #[command(flatten)]
        io: IoFlags,
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        shoot: ShootFlags,
    },
    /// Build the near-contact-line series and optionally check its residuals.
    Series {
        #[command(flatten)]
        io: IoFlags,
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long)]
        degree: Option<usize>,
        /// Verify the recursions in exact rational arithmetic.
        #[arg(long)]
        check_residual: bool,
    },
    /// Solve the truncated boundary-value problem by monotone iteration.
    Bvp {
        #[command(flatten)]
        io: IoFlags,
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        bvp: BvpFlags,
    },
    /// Solve, then extract the far-field constant B.
    Match {
        #[command(flatten)]
        io: IoFlags,
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        shoot: ShootFlags,
        #[command(flatten)]
        matching: MatchFlags,
    },
    /// Tabulate b and B over a uniform k grid.
    Sweep {
        #[command(flatten)]
        io: IoFlags,
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        shoot: ShootFlags,
        #[command(flatten)]
        matching: MatchFlags,
        #[arg(long)]
        k_min: Option<f64>,
        #[arg(long)]
        k_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Run the acceptance battery and write a pass/fail report.
    Verify {
        #[command(flatten)]
        io: IoFlags,
        /// Restrict to one group: series, dynsys, bvp, match, shoot, determinism.
        #[arg(long)]
        only: Option<String>,
        /// Inject the sign fault into the contact-line system (also TW_FAULT=1).
        #[arg(long)]
        fault: bool,
    },
}

#[derive(Args)]
struct IoFlags {
    /// Flat key=value or JSON file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Data output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary path (default: the data path with a .json extension).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct ParamFlags {
    #[arg(long)]
    n: Option<f64>,
    /// Microscopic contact angle.
    #[arg(long)]
    k: Option<f64>,
    /// Slip length.
    #[arg(long)]
    lambda: Option<f64>,
    /// Wave speed.
    #[arg(long)]
    v: Option<f64>,
}

#[derive(Args)]
struct ShootFlags {
    #[arg(long)]
    h0: Option<f64>,
    #[arg(long)]
    hmax: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    conv_tol: Option<f64>,
    #[arg(long)]
    tol_b: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    /// cox_voinov or flat.
    #[arg(long, value_parser = snake_enum::<FarField>)]
    far_field: Option<FarField>,
}

#[derive(Args)]
struct MatchFlags {
    /// cox_voinov or log_log.
    #[arg(long, value_parser = snake_enum::<BEstimator>)]
    estimator: Option<BEstimator>,
    #[arg(long)]
    fit_tol: Option<f64>,
    /// Skip the remainder-exponent fit.
    #[arg(long)]
    no_remainder: bool,
    /// Plot-ready CSV of (x, dH/dx cubed, ln x).
    #[arg(long)]
    plot_out: Option<PathBuf>,
}

#[derive(Args)]
struct BvpFlags {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

fn snake_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<Invalid> for Failure {
    fn from(e: Invalid) -> Self {
        Failure::Invalid(e.0)
    }
}

impl From<twfilm::Error> for Failure {
    fn from(e: twfilm::Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_pool(|| run(cli.cmd)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}

macro_rules! set {
    ($cfg:ident, $($field:ident <- $val:expr),+ $(,)?) => {
        $(if let Some(v) = $val { $cfg.$field = v; })+
    };
}

fn base(name: &str, io: &IoFlags) -> Result<RunConfig, Failure> {
    let mut cfg = match &io.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &cfg.command {
        if c != name {
            return Err(Failure::Invalid(format!("--config is for command '{c}', not '{name}'")));
        }
    }
    cfg.command = Some(name.to_string());
    set!(cfg, format <- io.format);
    if io.out.is_some() {
        cfg.out = io.out.clone();
    }
    if io.summary.is_some() {
        cfg.summary = io.summary.clone();
    }
    Ok(cfg)
}

fn apply_params(cfg: &mut RunConfig, f: &ParamFlags) {
    set!(cfg, n <- f.n, k <- f.k, lambda <- f.lambda, v <- f.v);
}

fn apply_shoot(cfg: &mut RunConfig, f: &ShootFlags) {
    set!(cfg, h0 <- f.h0, hmax <- f.hmax, rtol <- f.rtol, atol <- f.atol, conv_tol <- f.conv_tol,
        tol_b <- f.tol_b, degree <- f.degree, far_field <- f.far_field);
}

fn apply_match(cfg: &mut RunConfig, f: &MatchFlags) {
    set!(cfg, estimator <- f.estimator, fit_tol <- f.fit_tol);
    if f.no_remainder {
        cfg.remainder = false;
    }
    if f.plot_out.is_some() {
        cfg.plot_out = f.plot_out.clone();
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Solve { io, params, shoot } => {
            let mut cfg = base("solve", &io)?;
            apply_params(&mut cfg, &params);
            apply_shoot(&mut cfg, &shoot);
            cfg.check()?;
            solve(&cfg)
        }
        Cmd::Series { io, params, degree, check_residual } => {
            let mut cfg = base("series", &io)?;
            apply_params(&mut cfg, &params);
            set!(cfg, degree <- degree);
            cfg.check_residual |= check_residual;
            cfg.check()?;
            series(&cfg)
        }
        Cmd::Bvp { io, params, bvp } => {
            let mut cfg = base("bvp", &io)?;
            apply_params(&mut cfg, &params);
            set!(cfg, eps <- bvp.eps, grid <- bvp.grid, tol <- bvp.tol, max_iter <- bvp.max_iter);
            cfg.check()?;
            boundary_value(&cfg)
        }
        Cmd::Match { io, params, shoot, matching } => {
            let mut cfg = base("match", &io)?;
            apply_params(&mut cfg, &params);
            apply_shoot(&mut cfg, &shoot);
            apply_match(&mut cfg, &matching);
            cfg.check()?;
            match_b(&cfg)
        }
        Cmd::Sweep { io, params, shoot, matching, k_min, k_max, points } => {
            let mut cfg = base("sweep", &io)?;
            apply_params(&mut cfg, &params);
            apply_shoot(&mut cfg, &shoot);
            apply_match(&mut cfg, &matching);
            set!(cfg, k_min <- k_min, k_max <- k_max, points <- points);
            cfg.check()?;
            sweep(&cfg)
        }
        Cmd::Verify { io, only, fault } => {
            let mut cfg = base("verify", &io)?;
            if only.is_some() {
                cfg.only = only;
            }
            cfg.fault |= fault || VerifyOptions::fault_from_env();
            cfg.format = Format::Json;
            cfg.check()?;
            run_verify(&cfg)
        }
    }
}

/// Normalised parameters and the record that maps results back.
fn problem(cfg: &RunConfig) -> Result<(Params, ScaleRecord), Failure> {
    let p = validate_params(cfg.n, cfg.k, cfg.lambda, cfg.v)?;
    if let Some(w) = near_resonance_warning(p.n) {
        eprintln!("warning: {w}");
    }
    Ok(normalize(&p, cfg.k)?)
}

/// Write via a temporary sibling and rename, so readers never see partial files.
fn write_atomic(path: &Path, data: &str) -> Result<(), Failure> {
    let io_err = |e: std::io::Error| Failure::Invalid(format!("{}: {e}", path.display()));
    let name = path.file_name().ok_or_else(|| Failure::Invalid(format!("{}: not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, data).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io_err(e)
    })
}

fn json_text(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serialisable") + "\n"
}

/// Summary path: explicit, else the data path with a `.json` extension.
fn summary_path(cfg: &RunConfig) -> Option<PathBuf> {
    if cfg.summary.is_some() {
        return cfg.summary.clone();
    }
    let out = cfg.out.as_ref()?;
    let p = out.with_extension("json");
    Some(if &p == out { out.with_extension("summary.json") } else { p })
}

fn emit(cfg: &RunConfig, data: Option<String>, summary: Value) -> Result<(), Failure> {
    if let (Some(path), Some(d)) = (&cfg.out, data) {
        write_atomic(path, &d)?;
    }
    if let Some(path) = summary_path(cfg) {
        let mut full = json!({ "config": cfg });
        full.as_object_mut().unwrap().extend(summary.as_object().cloned().unwrap_or_default());
        write_atomic(&path, &json_text(&full))?;
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn solve(cfg: &RunConfig) -> Result<(), Failure> {
    let (p, rec) = problem(cfg)?;
    let r = shoot_b(&p, &cfg.shoot())?;
    let states = r.profile.unscale(&rec);
    let data = match cfg.format {
        Format::Csv => {
            let mut s = String::from("H,psi,dpsi\n");
            for st in &states {
                s.push_str(&format!("{},{},{}\n", fmt(st.h), fmt(st.psi), fmt(st.dpsi)));
            }
            s
        }
        Format::Json => json_text(&states),
    };
    let summary = json!({
        "n": p.n, "k": p.k, "b_cg": r.b_cg, "classification": r.profile.stats.class,
        "h_max": cfg.hmax, "tolerances": { "rtol": cfg.rtol, "atol": cfg.atol, "conv_tol": cfg.conv_tol, "tol_b": cfg.tol_b },
        "bracket": [r.bracket.0, r.bracket.1], "iterations": r.iterations, "bracket_only": r.bracket_only,
        "samples": states.len(), "scale": rec, "shape": r.profile.shape(),
    });
    println!("n = {}, k = {} (normalised): b_CG = {}", p.n, p.k, fmt(r.b_cg));
    println!("classification {:?} after {} bisection steps, {} samples", r.profile.stats.class, r.iterations, states.len());
    if r.bracket_only {
        println!("warning: no converged shot; b_CG is the bracket midpoint");
    }
    emit(cfg, Some(data), summary)
}

fn series(cfg: &RunConfig) -> Result<(), Failure> {
    let (p, _) = problem(cfg)?;
    let g = compute_g::<f64>(&p, cfg.degree)?;
    let w = solve_w::<f64>(&p, cfg.degree)?;
    let g_rel = g_residual_relative(&g);
    let w_rel = w_fixed_point_residual(&w)?.max_abs() / w.w.max_abs().max(f64::MIN_POSITIVE);
    let mut summary = json!({
        "n": p.n, "k": p.k, "degree": cfg.degree, "class": resonance_class(p.n),
        "g_float_relative": g_rel, "w_float_relative": w_rel,
        "g_radius": g.coeffs.empirical_radius(), "w_radius": w.w.as_series3().empirical_radius(),
    });
    println!("series for n = {}, k = {} at degree {} ({:?})", p.n, p.k, cfg.degree, resonance_class(p.n));
    println!("relative residuals: g {g_rel:.3e}, w {w_rel:.3e}");
    if cfg.check_residual {
        let gq = compute_g::<num::BigRational>(&p, cfg.degree)?;
        let wq = solve_w::<num::BigRational>(&p, cfg.degree)?;
        let g0 = g_pde_residual(&gq).is_zero();
        let w0 = w_fixed_point_residual(&wq)?.is_zero();
        summary["g_rational_zero"] = json!(g0);
        summary["w_rational_zero"] = json!(w0);
        println!("exact residuals: {}", if g0 && w0 { "all zero" } else { "NONZERO" });
        if !(g0 && w0) {
            emit(cfg, Some(g.coeffs.to_csv(["j", "l"])), summary)?;
            return Err(Failure::Numerical("rational residual is not zero".into()));
        }
    }
    emit(cfg, Some(g.coeffs.to_csv(["j", "l"])), summary)
}

fn boundary_value(cfg: &RunConfig) -> Result<(), Failure> {
    let (p, _) = problem(cfg)?;
    let g = picard_solve(&p, &cfg.bvp())?;
    let data = match cfg.format {
        Format::Csv => g.to_csv(),
        Format::Json => json_text(&json!({ "h": g.nodes, "psi": g.values })),
    };
    let summary = json!({ "iterations": g.iterations, "bracket_gap": g.bracket_gap, "eps": g.eps, "grid": g.nodes.len() });
    println!("Picard iteration on [{}, {}] with {} nodes: {} iterations, bracket gap {:.3e}", g.eps, 1.0 / g.eps, g.nodes.len(), g.iterations, g.bracket_gap);
    emit(cfg, Some(data), summary)
}

fn match_b(cfg: &RunConfig) -> Result<(), Failure> {
    let (p, _) = problem(cfg)?;
    let (m, prof) = solve_and_match(&p, &cfg.shoot(), &cfg.matching())?;
    let plot = || -> Result<String, Failure> { Ok(reconstruct_x(&prof, p.k, 4001)?.to_csv()) };
    if let Some(path) = &cfg.plot_out {
        write_atomic(path, &plot()?)?;
    }
    let data = match cfg.format {
        Format::Json => json_text(&m),
        Format::Csv => plot()?,
    };
    println!("n = {}, k = {}: b_CG = {}, B = {}, ln B = {} (+/- {:.1e})", m.n, m.k, fmt(m.b_cg), fmt(m.big_b), fmt(m.ln_b), m.ln_b_uncertainty);
    if let Some(r) = &m.remainder {
        println!("remainder exponent {:.4}", r.exponent);
    }
    emit(cfg, Some(data), json!({ "result": m }))
}

fn sweep(cfg: &RunConfig) -> Result<(), Failure> {
    let (p, rec) = problem(cfg)?;
    let ks: Vec<f64> = k_grid(cfg.k_min, cfg.k_max, cfg.points).iter().map(|k| k / rec.angle_scale).collect();
    let t = sweep_k(&p, &ks, &cfg.shoot(), &cfg.matching())?;
    let data = match cfg.format {
        Format::Csv => t.to_csv(),
        Format::Json => json_text(&t),
    };
    let failed = t.rows.iter().filter(|r| r.error.is_some()).count();
    println!("sweep over {} k values for n = {}: {} failed", t.rows.len(), t.n, failed);
    emit(cfg, Some(data), json!({ "n": t.n, "points": t.rows.len(), "failed": failed, "k_normalised": rec != ScaleRecord::identity() }))
}

fn run_verify(cfg: &RunConfig) -> Result<(), Failure> {
    let r = verify(&VerifyOptions { only: cfg.only.clone(), fault: cfg.fault })?;
    print!("{}", r.summary());
    if let Some(path) = &cfg.out {
        write_atomic(path, &r.to_json())?;
    }
    if let Some(path) = &cfg.summary {
        write_atomic(path, &json_text(&json!({ "config": cfg, "passed": r.passed, "failed": r.failed })))?;
    }
    Ok(())
}
