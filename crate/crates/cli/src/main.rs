//! `hmstab` command-line front end.
//!
//! Every artifact starts with a `# config: {...}` line holding the command
//! parameters (the worker count excluded), so identical configs give
//! byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hmstab::asymptotics::gram_entry_expansions;
use hmstab::counterexample::{self, build_u, p_vector, report_with, solve_c, ReportConfig, SweepRow, SWEEP_HEADER};
use hmstab::kernel_basis::{gram_matrix, gram_via_gradients, gram_weighted, upper_pairs, GramMatrix, ParamVec};
use hmstab::projector::{local_stability_probe, project, ProjectOptions};
use hmstab::{quadrature, Error, Map64, QuadScheme};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

const SWEEP_HELP: &str = "CSV columns: r, eps, deficit_eps2_coeff, dist2_eps2_coeff, ratio, ratio_over_lnr, conj_ratio, quad_err_bound.
deficit_eps2_coeff and dist2_eps2_coeff are Richardson-extrapolated ε² coefficients of 𝓔(u) − 8π and of the projected Ḣ¹ distance;
ratio is their quotient, conj_ratio = dist²/(deficit·(1 + |ln deficit|)) at the given ε.";

const ASYM_HELP: &str = "CSV columns: r, i, j, kind, quadrature, quad_err, prediction, abs_diff, band, status.
band = 4·|diff(5)|·(r/5)^q + 4·quad_err, with q the remainder exponent of the expansion and diff(5) measured at r = 5.";

const PROBE_HELP: &str = "CSV columns: trial, deficit, deficit_err, dist_sq, dist_sq_err, ratio, converged, iterations.";

#[derive(Parser, Debug)]
#[command(name = "hmstab", version, about = "Stability measurements for degree-2 harmonic maps from the plane to the sphere")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Dirichlet energy ½∫|∇u|² of the lift of a rational map.
    Energy {
        /// `json:{"p":[[re,im],...],"q":[[re,im],...]}` or a path to such a file; coefficients in ascending order.
        #[arg(long)]
        map: String,
    },
    /// Degree of the lift of a rational map, by quadrature.
    Degree {
        #[arg(long)]
        map: String,
    },
    /// Gram matrix 𝒥 at α_r.
    Gram {
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value_t = Method::Tabulated)]
        method: Method,
        /// Write the 10×10 matrix as CSV here and metadata next to it as `<path>.json`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Quadrature against the asymptotic expansion of each expanded Gram entry.
    #[command(after_help = ASYM_HELP)]
    AsymCheck {
        /// One or more values of r, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "10,20")]
        r: Vec<f64>,
    },
    /// One counterexample report.
    Counterexample {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = counterexample::DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Counterexample reports over several r.
    #[command(after_help = SWEEP_HELP)]
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        r_list: Vec<f64>,
        #[arg(long, default_value_t = counterexample::DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Nearest point of the degree-2 family.
    Project {
        /// `build:<r>,<eps>`: the counterexample field.
        #[arg(long)]
        field: String,
        /// `alpha_r` or `json:[α1,...,α10]`.
        #[arg(long, default_value = "alpha_r")]
        init: String,
        /// Print the result as JSON (to the path if given).
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        json: Option<String>,
        /// Gauss-Newton iteration limit.
        #[arg(long, default_value_t = hmstab::projector::DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Random tangent perturbations of 𝒮(ψ_r), projected back onto the family.
    #[command(after_help = PROBE_HELP)]
    StabilityProbe {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        /// Write CSV here instead of standard output.
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        csv: Option<String>,
    },
    /// Quick invariant checks.
    Selftest,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Tabulated,
    Weighted,
    Gradients,
}

enum Fail {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_) | Error::Json(_) | Error::InvalidIndex(_) => Fail::Usage(e.to_string()),
            _ => Fail::Numeric(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Fail>;

fn config_line(cmd: &str, tol: f64, params: serde_json::Value) -> String {
    format!("# config: {}\n", json!({ "command": cmd, "tol": tol, "params": params }))
}

fn emit(path: Option<&str>, text: &str) -> Result<(), Fail> {
    match path {
        None | Some("-") => {
            print!("{text}");
            Ok(())
        }
        Some(p) => fs::write(p, text).map_err(|e| Fail::Usage(format!("cannot write {p}: {e}"))),
    }
}

fn parse_map(spec: &str) -> Result<Map64, Fail> {
    let text = match spec.strip_prefix("json:") {
        Some(t) => t.to_string(),
        None => fs::read_to_string(spec).map_err(|e| Fail::Usage(format!("cannot read map {spec}: {e}")))?,
    };
    serde_json::from_str(&text).map_err(|e| Fail::Usage(format!("bad map: {e}")))
}

fn parse_build(spec: &str) -> Result<(f64, f64), Fail> {
    let bad = || Fail::Usage(format!("expected build:<r>,<eps>, got {spec}"));
    let rest = spec.strip_prefix("build:").ok_or_else(bad)?;
    let (a, b) = rest.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_alpha(spec: &str, r: f64) -> Result<ParamVec<f64>, Fail> {
    if spec == "alpha_r" {
        return Ok(ParamVec::alpha_r(r));
    }
    let text = spec.strip_prefix("json:").ok_or_else(|| Fail::Usage(format!("expected alpha_r or json:[...], got {spec}")))?;
    serde_json::from_str(text).map_err(|e| Fail::Usage(format!("bad alpha: {e}")))
}

fn cmd_energy(map: &str, tol: f64, degree: bool) -> Outcome {
    let m = parse_map(map)?;
    let s = QuadScheme::for_map(&m).with_rel_tol(tol);
    let mut out = config_line(if degree { "degree" } else { "energy" }, tol, json!({ "map": m }));
    if degree {
        let d = quadrature::degree(&hmstab::sphere_fields::lift(m), &s)?;
        writeln!(out, "degree {:.16e} ± {:.3e}", d.value, d.err).unwrap();
    } else {
        let e = quadrature::energy(&hmstab::sphere_fields::lift(m), &s)?;
        writeln!(out, "energy {:.16e} ± {:.3e}", e.value, e.err).unwrap();
        writeln!(out, "energy/pi {:.16e} ± {:.3e}", e.value / std::f64::consts::PI, e.err / std::f64::consts::PI).unwrap();
    }
    emit(None, &out)?;
    Ok(true)
}

fn gram_for(method: Method, r: f64, s: &QuadScheme<f64>) -> Result<GramMatrix<f64>, Fail> {
    let a = ParamVec::alpha_r(r);
    Ok(match method {
        Method::Tabulated => gram_matrix(&a, r, s)?,
        Method::Weighted => gram_weighted(&a, r, s)?,
        Method::Gradients => gram_via_gradients(&a, r, s)?,
    })
}

fn cmd_gram(r: f64, method: Method, csv: Option<PathBuf>, tol: f64) -> Outcome {
    let s = QuadScheme::bubble_pair(r).with_rel_tol(tol);
    let g = gram_for(method, r, &s)?;
    let cfg = config_line("gram", tol, json!({ "r": r, "method": method }));
    let mut out = cfg.clone();
    out.push_str("i,j,value,err\n");
    for (i, j) in upper_pairs() {
        writeln!(out, "{},{},{:.16e},{:.3e}", i + 1, j + 1, g.entries[i][j], g.err[i][j]).unwrap();
    }
    writeln!(out, "# min_eigenvalue {:.16e} ± {:.3e}", g.min_eigenvalue(), g.max_err()).unwrap();
    writeln!(out, "# det_r8 {:.16e} (entry error ≤ {:.3e})", g.det() * r.powi(8), g.max_err()).unwrap();
    emit(None, &out)?;
    if let Some(p) = csv {
        let ps = p.to_string_lossy().to_string();
        emit(Some(&ps), &(cfg + &g.to_csv()))?;
        let meta = serde_json::to_string_pretty(&g.metadata_json()).map_err(Error::from)?;
        emit(Some(&format!("{ps}.json")), &meta)?;
    }
    Ok(g.converged)
}

fn cmd_asym(r_list: &[f64], tol: f64) -> Outcome {
    let gram_at = |r: f64| gram_matrix(&ParamVec::alpha_r(r), r, &QuadScheme::bubble_pair(r).with_rel_tol(tol));
    let base = gram_at(5.0)?;
    let mut out = config_line("asym-check", tol, json!({ "r": r_list }));
    out.push_str("r,i,j,kind,quadrature,quad_err,prediction,abs_diff,band,status\n");
    let mut ok = base.converged;
    for &r in r_list {
        let g = gram_at(r)?;
        ok &= g.converged;
        for e in gram_entry_expansions() {
            let p = e.predict(r)?;
            let d5 = (base.get(e.i, e.j) - e.predict(5.0)?.value()).abs();
            let q = g.get(e.i, e.j);
            let diff = (q - p.value()).abs();
            let band = 4.0 * d5 * (r / 5.0).powf(p.remainder_exp) + 4.0 * g.err_at(e.i, e.j) + 8.0 * f64::EPSILON * q.abs();
            let pass = diff <= band;
            ok &= pass;
            let kind = serde_json::to_value(e.kind).map_err(Error::from)?;
            writeln!(
                out,
                "{:.16e},{},{},{},{:.16e},{:.3e},{:.16e},{:.16e},{:.16e},{}",
                r,
                e.i,
                e.j,
                kind.as_str().unwrap_or(""),
                q,
                g.err_at(e.i, e.j),
                p.value(),
                diff,
                band,
                if pass { "PASS" } else { "FAIL" }
            )
            .unwrap();
        }
    }
    emit(None, &out)?;
    Ok(ok)
}

fn report_cfg(r: f64, tol: f64) -> ReportConfig {
    let mut cfg = ReportConfig::new(r);
    cfg.scheme = cfg.scheme.with_rel_tol(tol);
    cfg
}

fn converged(x: &counterexample::CounterexampleReport) -> bool {
    x.diagnostics.samples.iter().all(|s| s.projection.converged)
}

fn cmd_counterexample(r: f64, eps: f64, path: Option<PathBuf>, tol: f64) -> Outcome {
    let x = report_with(r, eps, &report_cfg(r, tol))?;
    let d = &x.diagnostics;
    let e = d.quad_err_bound;
    let mut out = config_line("counterexample", tol, json!({ "r": r, "eps": eps }));
    writeln!(out, "deficit {:.16e} ± {:.3e}", x.deficit, d.samples[0].measurement.deficit_err).unwrap();
    writeln!(out, "dist_sq_formula {:.16e} ± {:.3e}", x.dist_sq_formula, d.samples[0].measurement.dist_sq_formula_err).unwrap();
    writeln!(out, "dist_sq_projected {:.16e} ± {:.3e}", x.dist_sq_projected, d.samples[0].projection.dist_sq_err).unwrap();
    writeln!(out, "deficit_eps2_coeff {:.16e} ± {:.3e}", d.deficit_eps2_coeff, e / (eps * eps)).unwrap();
    writeln!(out, "dist2_eps2_coeff {:.16e} ± {:.3e}", d.dist2_eps2_coeff, e / (eps * eps)).unwrap();
    writeln!(out, "ratio {:.16e} (quad_err_bound {:.3e})", x.ratio, e).unwrap();
    writeln!(out, "ratio_over_lnr {:.16e} (quad_err_bound {:.3e})", x.log_ratio, e).unwrap();
    writeln!(out, "conj_ratio {:.16e} (quad_err_bound {:.3e})", x.conj_ratio, e).unwrap();
    emit(None, &out)?;
    if let Some(p) = path {
        let doc = json!({ "config": { "command": "counterexample", "tol": tol, "params": { "r": r, "eps": eps } }, "report": x });
        let text = serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n";
        emit(Some(&p.to_string_lossy()), &text)?;
    }
    Ok(converged(&x))
}

fn cmd_sweep(r_list: &[f64], eps: f64, path: Option<PathBuf>, tol: f64) -> Outcome {
    let reports = r_list
        .par_iter()
        .map(|&r| report_with(r, eps, &report_cfg(r, tol)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = config_line("sweep", tol, json!({ "r_list": r_list, "eps": eps }));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for x in &reports {
        out.push_str(&SweepRow::from(x).to_csv());
        out.push('\n');
    }
    emit(path.as_ref().map(|p| p.to_str().unwrap_or("-")), &out)?;
    Ok(reports.iter().all(converged))
}

fn cmd_project(field: &str, init: &str, json_out: Option<String>, max_iter: usize, tol: f64) -> Outcome {
    let (r, eps) = parse_build(field)?;
    let alpha0 = parse_alpha(init, r)?;
    let s = QuadScheme::bubble_pair(r).with_rel_tol(tol);
    let a = ParamVec::alpha_r(r);
    let c = solve_c(&gram_matrix(&a, r, &s)?, &p_vector(r, &s)?.value)?;
    let u = build_u(r, eps, &c.c);
    let mut opts = ProjectOptions::new(r);
    opts.max_iter = max_iter;
    let res = project(&u, &alpha0, &s, &opts)?;
    let scaled = res.scaled_distance(&a, r);
    let cfg = json!({ "command": "project", "tol": tol, "params": { "field": field, "init": init, "max_iter": max_iter } });
    match json_out {
        Some(p) => {
            let doc = json!({ "config": cfg, "result": res, "scaled_distance_to_alpha_r": scaled });
            emit(Some(&p), &(serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n"))?;
        }
        None => {
            let mut out = format!("# config: {cfg}\n");
            writeln!(out, "dist_sq {:.16e} ± {:.3e}", res.dist_sq, res.dist_sq_err).unwrap();
            writeln!(out, "grad_norm {:.16e} ± {:.3e}", res.grad_norm, res.grad_norm_err).unwrap();
            writeln!(out, "scaled_distance_to_alpha_r {:.16e} (dist_sq_err {:.3e})", scaled, res.dist_sq_err).unwrap();
            writeln!(out, "iterations {}", res.iterations).unwrap();
            writeln!(out, "converged {}", res.converged).unwrap();
            writeln!(out, "alpha_star {}", serde_json::to_string(&res.alpha_star).map_err(Error::from)?).unwrap();
            emit(None, &out)?;
        }
    }
    Ok(res.converged)
}

fn cmd_probe(r: f64, trials: usize, seed: u64, eps: f64, csv: Option<String>, tol: f64) -> Outcome {
    let s = QuadScheme::bubble_pair(r).with_rel_tol(tol);
    let samples = local_stability_probe(&ParamVec::alpha_r(r), r, trials, eps, seed, &s)?;
    let mut out = config_line("stability-probe", tol, json!({ "r": r, "trials": trials, "seed": seed, "eps": eps }));
    out.push_str("trial,deficit,deficit_err,dist_sq,dist_sq_err,ratio,converged,iterations\n");
    for p in &samples {
        writeln!(
            out,
            "{},{:.16e},{:.3e},{:.16e},{:.3e},{:.16e},{},{}",
            p.trial, p.deficit, p.deficit_err, p.dist_sq, p.dist_sq_err, p.ratio, p.converged, p.iterations
        )
        .unwrap();
    }
    let max = samples.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max);
    let err = samples.iter().map(|p| p.deficit_err.max(p.dist_sq_err)).fold(0.0, f64::max);
    writeln!(out, "# max_ratio {max:.16e} (quad_err_bound {err:.3e})").unwrap();
    emit(csv.as_deref(), &out)?;
    Ok(samples.iter().all(|p| p.converged))
}

fn check(out: &mut String, name: &str, ok: bool, detail: String) -> bool {
    writeln!(out, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }).unwrap();
    ok
}

fn cmd_selftest(tol: f64) -> Outcome {
    use hmstab::counterexample::{script_k, CutoffField};
    use hmstab::sphere_fields::{hopf_differential, lift, Field};
    use hmstab::{Complex, ComplexPoly, Orientation, RationalMap};
    use std::f64::consts::PI;

    let c = |re: f64, im: f64| Complex::new(re, im);
    let mut out = config_line("selftest", tol, json!({}));
    let mut all = true;

    let id = RationalMap::holomorphic(ComplexPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]), ComplexPoly::new(vec![c(1.0, 0.0)]))?;
    let s = QuadScheme::for_map(&id).with_rel_tol(tol);
    let e = quadrature::energy(&lift(id.clone()), &s)?;
    all &= check(&mut out, "energy of lift(z) is 4π", (e.value - 4.0 * PI).abs() < 1e-8 * 4.0 * PI, format!("{:.16e} ± {:.3e}", e.value, e.err));
    let d = quadrature::degree(&lift(id), &s)?;
    all &= check(&mut out, "degree of lift(z) is 1", (d.value - 1.0).abs() < 1e-8, format!("{:.16e} ± {:.3e}", d.value, d.err));
    let anti = RationalMap::new(ComplexPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]), ComplexPoly::new(vec![c(1.0, 0.0)]), Orientation::AntiHolomorphic)?;
    let d = quadrature::degree(&lift(anti.clone()), &QuadScheme::for_map(&anti).with_rel_tol(tol))?;
    all &= check(&mut out, "degree of lift(z̄) is -1", (d.value + 1.0).abs() < 1e-8, format!("{:.16e} ± {:.3e}", d.value, d.err));

    let r = 5.0;
    let a = ParamVec::alpha_r(r);
    let m = a.to_map()?;
    let u = lift(m);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let t = k as f64;
        let z = c(12.0 * (0.7 * t).sin(), 12.0 * (1.3 * t).cos());
        let j = u.eval(z)?;
        worst = worst.max(hopf_differential(&j).norm() / j.grad_norm_sqr());
    }
    all &= check(&mut out, "Hopf differential of a harmonic map vanishes", worst < 1e-10, format!("max |H|/|∇u|² {worst:.3e}"));

    let f = CutoffField { r: 10.0 };
    let vals = [f.eval(c(10.0, 10.0)).value, f.eval(c(-10.0, -10.0)).value, f.eval(c(0.0, 0.0)).value];
    all &= check(&mut out, "cutoff takes 1, -1, 0 at the centers and the origin", vals == [1.0, -1.0, 0.0], format!("{vals:?}"));

    let k = script_k(10.0)?;
    let mut tang = 0.0f64;
    for n in 0..50 {
        let z = c(n as f64 - 25.0, 0.3 * n as f64);
        let (phi, kv) = k.with_base(z)?;
        tang = tang.max(kv.value().dot(&phi.value()).abs());
    }
    all &= check(&mut out, "𝒦 is tangent to Φ", tang < 1e-14, format!("max |𝒦·Φ| {tang:.3e}"));

    let g = gram_matrix(&a, r, &QuadScheme::bubble_pair(r).with_rel_tol(tol))?;
    let sym = (0..10).flat_map(|i| (0..10).map(move |j| (i, j))).all(|(i, j)| g.entries[i][j] == g.entries[j][i]);
    all &= check(&mut out, "Gram matrix is symmetric positive definite", sym && g.min_eigenvalue() > 0.0, format!("min eigenvalue {:.3e}", g.min_eigenvalue()));

    let u = build_u(10.0, 0.01, &[0.0; 10]);
    let mut unit = 0.0f64;
    for n in 0..50 {
        let z = c(0.8 * n as f64 - 20.0, 15.0 - 0.6 * n as f64);
        unit = unit.max((u.eval(z)?.value().norm_sqr() - 1.0).abs());
    }
    all &= check(&mut out, "perturbed map stays on the sphere", unit < 1e-14, format!("max ||u|² - 1| {unit:.3e}"));

    emit(None, &out)?;
    Ok(all)
}

fn run(cli: Cli) -> Outcome {
    let tol = cli.tol;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Fail::Usage(format!("--tol must be positive, got {tol}")));
    }
    match cli.cmd {
        Cmd::Energy { map } => cmd_energy(&map, tol, false),
        Cmd::Degree { map } => cmd_energy(&map, tol, true),
        Cmd::Gram { r, method, csv } => cmd_gram(r, method, csv, tol),
        Cmd::AsymCheck { r } => cmd_asym(&r, tol),
        Cmd::Counterexample { r, eps, json } => cmd_counterexample(r, eps, json, tol),
        Cmd::Sweep { r_list, eps, csv } => cmd_sweep(&r_list, eps, csv, tol),
        Cmd::Project { field, init, json, max_iter } => cmd_project(&field, &init, json, max_iter, tol),
        Cmd::StabilityProbe { r, trials, seed, eps, csv } => cmd_probe(r, trials, seed, eps, csv, tol),
        Cmd::Selftest => cmd_selftest(tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: tolerance not met or projection not converged; results above are flagged");
            ExitCode::from(2)
        }
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
