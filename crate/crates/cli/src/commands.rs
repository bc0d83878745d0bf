use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use spheig::cone::{
    approximation_pair, contraction_check, decay_exponent, deformation_family, nondegeneracy_check, sandwich_check,
    tau_lipschitz_check, ConeDomain, ConeGrid, ConeOptions, ContractionReport,
};
use spheig::exponent::{exponent_bracket, solve_exponent, ExponentOptions};
use spheig::geometry::{project_to_sphere, DomainSpec};
use spheig::verify::{run_suite, SuiteOptions};
use spheig::{Branch, DomainFamily, Error, PParams, Profile, Result, SphericalDomain};

use crate::grid::parse_grid;
use crate::svg::{line_plot, Series};
use crate::{ConeArgs, DomainArgs, DomainKind, ExponentArgs, Format, OutputArgs, SweepArgs, VerifyArgs};

/// First margin of the dyadic inner/outer families.
const DELTA0: f64 = 0.2;
/// Most eigenfunction samples written to a result file.
const MAX_SAMPLES: usize = 201;

fn emit(out: &OutputArgs, text: &str) -> Result<()> {
    write_file(out.out.as_deref(), text)
}

fn write_file(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::ConfigError(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv_text<R: Serialize>(rows: &[R], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fail = |e: csv::Error| Error::ConfigError(format!("csv output: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::ConfigError(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn json_text(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn read_vertices(path: &PathBuf) -> Result<SphericalDomain<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigError(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(spec) = DomainSpec::parse(&text) {
        return spec.build();
    }
    let mut verts = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if nums.len() != 3 {
            return Err(Error::Parse(format!("{}:{}: expected three coordinates", path.display(), n + 1)));
        }
        verts.push([nums[0], nums[1], nums[2]]);
    }
    SphericalDomain::polygon(project_to_sphere(&verts)?)
}

fn build_domain(d: &DomainArgs, alpha: Option<f64>) -> Result<SphericalDomain<f64>> {
    let need_alpha = || alpha.ok_or_else(|| Error::InvalidParams("--alpha is required for arcs and caps".into()));
    let domain = match d.domain {
        DomainKind::Arc => SphericalDomain::arc(need_alpha()?)?,
        DomainKind::Cap => SphericalDomain::cap(need_alpha()?, d.dim.unwrap_or(3))?,
        DomainKind::Polygon => {
            let path = d
                .vertices_file
                .as_ref()
                .ok_or_else(|| Error::InvalidParams("--vertices-file is required for polygons".into()))?;
            read_vertices(path)?
        }
    };
    if let Some(dim) = d.dim {
        if dim != domain.dim() {
            return Err(Error::InvalidDomain(format!("{:?} domains live in dimension {}, not {dim}", d.domain, domain.dim())));
        }
    }
    if !(d.tol > 0.0) {
        return Err(Error::InvalidParams(format!("--tol must be positive, got {}", d.tol)));
    }
    Ok(domain)
}

fn eigenfunction_samples(omega: &Profile<f64>) -> Value {
    let stride = |n: usize| n.div_ceil(MAX_SAMPLES).max(1);
    let pick = |n: usize| {
        let s = stride(n);
        let mut idx: Vec<usize> = (0..n).step_by(s).collect();
        if idx.last() != Some(&(n - 1)) {
            idx.push(n - 1);
        }
        idx
    };
    match omega {
        Profile::Colat(g) => {
            let idx = pick(g.len());
            json!({
                "theta": idx.iter().map(|&i| g.nodes()[i]).collect::<Vec<_>>(),
                "omega": idx.iter().map(|&i| g.values()[i]).collect::<Vec<_>>(),
            })
        }
        Profile::Mesh(f) => {
            let idx = pick(f.values().len());
            json!({
                "points": idx.iter().map(|&i| f.space().coords()[i]).collect::<Vec<_>>(),
                "omega": idx.iter().map(|&i| f.values()[i]).collect::<Vec<_>>(),
            })
        }
    }
}

#[derive(Serialize)]
struct ExponentRow {
    p: f64,
    dim: usize,
    domain: String,
    alpha: Option<f64>,
    branch: &'static str,
    beta: f64,
    residual: f64,
    iterations: usize,
    normalization: f64,
    beta_in_limit: Option<f64>,
    beta_out_limit: Option<f64>,
    gap: Option<f64>,
    tol: f64,
}

pub fn exponent(args: &ExponentArgs) -> Result<bool> {
    let domain = build_domain(&args.domain, args.alpha)?;
    let params = PParams::new(args.p, domain.dim())?;
    let branch = args.domain.branch;
    let opts = ExponentOptions::with_tol(args.domain.tol);
    let pair = solve_exponent(&params, &domain, branch, &opts)?;
    let bracket = if args.steps > 0 {
        Some(exponent_bracket(&domain, &params, branch, &DomainFamily::dyadic_steps(DELTA0, args.steps), &opts)?)
    } else {
        None
    };
    let normalization = pair.omega.integral_abs(domain.dim());
    let spec = DomainSpec::from_domain(&domain);
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            let bracket = bracket.as_ref().map(|b| {
                json!({
                    "steps": b.steps,
                    "inner": b.beta_inner,
                    "outer": b.beta_outer,
                    "inner_limit": b.inner_limit,
                    "outer_limit": b.outer_limit,
                    "gap": b.gap,
                    "final_gap": b.final_gap(),
                })
            });
            json_text(&json!({
                "p": args.p,
                "dim": domain.dim(),
                "domain": spec,
                "branch": branch.name(),
                "tol": args.domain.tol,
                "beta": pair.beta,
                "beta_bracket": bracket,
                "residual": pair.residual_norm,
                "iterations": pair.iterations,
                "normalization": normalization,
                "eigenfunction": eigenfunction_samples(&pair.omega),
            }))
        }
        Format::Csv => {
            let row = ExponentRow {
                p: args.p,
                dim: domain.dim(),
                domain: format!("{:?}", spec.kind).to_lowercase(),
                alpha: domain.alpha(),
                branch: branch.name(),
                beta: pair.beta,
                residual: pair.residual_norm,
                iterations: pair.iterations,
                normalization,
                beta_in_limit: bracket.as_ref().map(|b| b.beta_in_limit),
                beta_out_limit: bracket.as_ref().map(|b| b.beta_out_limit),
                gap: bracket.as_ref().map(|b| b.gap),
                tol: args.domain.tol,
            };
            csv_text(
                &[row],
                &[
                    "p", "dim", "domain", "alpha", "branch", "beta", "residual", "iterations", "normalization",
                    "beta_in_limit", "beta_out_limit", "gap", "tol",
                ],
            )?
        }
    };
    emit(&args.output, &text)?;
    Ok(true)
}

#[derive(Serialize, Clone)]
struct SweepRow {
    p: f64,
    alpha: Option<f64>,
    dim: usize,
    branch: &'static str,
    beta: Option<f64>,
    residual: Option<f64>,
    iterations: Option<usize>,
    wall_ms: f64,
    tol: f64,
    error: String,
}

const SWEEP_HEADER: [&str; 10] = ["p", "alpha", "dim", "branch", "beta", "residual", "iterations", "wall_ms", "tol", "error"];

pub fn sweep(args: &SweepArgs) -> Result<bool> {
    let ps = parse_grid(&args.p).map_err(Error::InvalidParams)?;
    let alphas: Vec<Option<f64>> = if args.domain.domain == DomainKind::Polygon {
        vec![None]
    } else {
        parse_grid(&args.alpha).map_err(Error::InvalidParams)?.into_iter().map(Some).collect()
    };
    let polygon = if args.domain.domain == DomainKind::Polygon {
        Some(build_domain(&args.domain, None)?)
    } else {
        None
    };
    let branch = args.domain.branch;
    let tol = args.domain.tol;
    let cases: Vec<(Option<f64>, f64)> = alphas.iter().flat_map(|&a| ps.iter().map(move |&p| (a, p))).collect();
    let mut rows: Vec<SweepRow> = cases
        .par_iter()
        .map(|&(alpha, p)| {
            let start = Instant::now();
            let dim_guess = args.domain.dim.unwrap_or(if args.domain.domain == DomainKind::Arc { 2 } else { 3 });
            let solved = match &polygon {
                Some(d) => Ok(d.clone()),
                None => build_domain(&args.domain, alpha),
            }
            .and_then(|d| {
                let params = PParams::new(p, d.dim())?;
                solve_exponent(&params, &d, branch, &ExponentOptions::with_tol(tol)).map(|e| (d.dim(), e))
            });
            let wall_ms = if args.no_timing { 0.0 } else { start.elapsed().as_secs_f64() * 1e3 };
            match solved {
                Ok((dim, e)) => SweepRow {
                    p,
                    alpha,
                    dim,
                    branch: branch.name(),
                    beta: Some(e.beta),
                    residual: Some(e.residual_norm),
                    iterations: Some(e.iterations),
                    wall_ms,
                    tol,
                    error: String::new(),
                },
                Err(err) => SweepRow {
                    p,
                    alpha,
                    dim: dim_guess,
                    branch: branch.name(),
                    beta: None,
                    residual: None,
                    iterations: None,
                    wall_ms,
                    tol,
                    error: format!("{}: {err}", err.kind()),
                },
            }
        })
        .collect();
    rows.sort_by(|x, y| {
        let key = |r: &SweepRow| (r.alpha.unwrap_or(0.0), r.p);
        key(x).partial_cmp(&key(y)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_text(&rows, &SWEEP_HEADER)?,
        Format::Json => json_text(&rows),
    };
    emit(&args.output, &text)?;
    if let Some(path) = &args.svg {
        let series: Vec<Series> = alphas
            .iter()
            .map(|&a| Series {
                label: a.map_or("polygon".into(), |a| format!("alpha = {a:.4}")),
                points: rows
                    .iter()
                    .filter(|r| r.alpha == a)
                    .filter_map(|r| r.beta.map(|b| (r.p, b)))
                    .collect(),
            })
            .collect();
        write_file(Some(path), &line_plot("Exponent against p", "p", "beta", &series, false))?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct ShellRow {
    t: f64,
    sup: f64,
    inf: f64,
    osc: f64,
    beta_fit: f64,
    beta: f64,
    delta1: f64,
    c_hat: f64,
    theta_fit: f64,
    bound: f64,
    n_theta: usize,
    tol: f64,
}

/// Largest relative error of the decay fit against the profile exponent.
const DECAY_TOL: f64 = 0.02;
/// Admissible negative slack in the τ-Lipschitz bounds.
const LIPSCHITZ_TOL: f64 = 1e-8;
/// Admissible `max/min` of the boundary band.
const BAND_FACTOR: f64 = 50.0;

pub fn cone(args: &ConeArgs) -> Result<bool> {
    if args.domain.branch != Branch::Singular {
        return Err(Error::InvalidParams("cone diagnostics use the singular branch".into()));
    }
    let section = build_domain(&args.domain, Some(args.alpha))?;
    let params = PParams::new(args.p, section.dim())?;
    let taus = parse_grid(&args.tau_grid).map_err(Error::InvalidParams)?;
    let cone = ConeDomain::new(section, args.a, args.b)?;
    let grid = std::sync::Arc::new(ConeGrid::new(cone, params, args.n_theta)?);
    let delta = DELTA0 * 0.5f64.powi(args.steps as i32);
    let opts = ConeOptions::default();
    let pair = approximation_pair(&grid, Branch::Singular, delta, args.domain.tol)?;
    let beta = pair.beta;
    let scale = args.a.powf(-beta);
    let data: Vec<f64> = pair.base.iter().map(|v| scale * v).collect();
    let decay = decay_exponent(&grid, &data, grid.cone().incenter_angle(), &opts);
    let rel = decay.as_ref().map(|d| (d.fit.beta_fit - beta).abs() / beta.abs());
    let mut checks = vec![Check {
        name: "decay-fit",
        passed: rel.as_ref().is_ok_and(|&r| r <= DECAY_TOL),
        detail: match (&decay, &rel) {
            (Ok(d), Ok(r)) => format!("beta_fit = {:.6}, beta = {beta:.6}, relative error {r:.2e}", d.fit.beta_fit),
            (Err(e), _) => e.to_string(),
            (_, Err(e)) => e.to_string(),
        },
    }];
    let band = decay.as_ref().map_err(Clone::clone).and_then(|d| nondegeneracy_check(&d.field, args.kappa, BAND_FACTOR));
    checks.push(Check {
        name: "nondegeneracy",
        passed: band.is_ok(),
        detail: match &band {
            Ok(b) => format!("max/min of the band = {:.4} over {} nodes", b.ratio, b.nodes),
            Err(e) => e.to_string(),
        },
    });
    let family = deformation_family(&grid, beta, &pair.omega, &pair.omega_prime, &taus, &opts)?;
    let r_max = (args.a * args.b).sqrt();
    let sandwich = (0..taus.len()).map(|k| sandwich_check(&family, k, r_max)).collect::<Result<Vec<_>>>()?;
    let worst = sandwich.iter().fold(0.0f64, |m, s| m.max(s.max_violation));
    checks.push(Check {
        name: "sandwich",
        passed: sandwich.iter().all(|s| s.passed),
        detail: format!("largest violation {worst:.3e}, allowed {:.3e}", sandwich[0].allowed),
    });
    let lipschitz = tau_lipschitz_check(&family, LIPSCHITZ_TOL);
    checks.push(Check {
        name: "tau-lipschitz",
        passed: lipschitz.passed,
        detail: format!(
            "lower slack {:.3e}, upper slack {:.3e}, {} violations",
            lipschitz.lower_slack, lipschitz.upper_slack, lipschitz.violations
        ),
    });
    let contraction: std::result::Result<ContractionReport<f64>, Error> = contraction_check(&family, family.pair_near(0.5));
    if let Err(e @ Error::ConfigError(_)) = &contraction {
        return Err(e.clone());
    }
    checks.push(Check {
        name: "contraction",
        passed: contraction.as_ref().is_ok_and(|c| c.passed && c.shells.len() >= 4),
        detail: match &contraction {
            Ok(c) => format!(
                "theta_fit = {:.4}, bound = {:.4}, c_hat = {:.4} (shifted quotients {}), {} shells",
                c.theta_fit,
                c.bound,
                c.c_hat,
                c.c_hat_shifted.map_or("unresolved".to_string(), |v| format!("{v:.4}")),
                c.shells.len()
            ),
            Err(e) => e.to_string(),
        },
    });
    let passed = checks.iter().all(|c| c.passed);

    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => json_text(&json!({
            "p": args.p,
            "dim": grid.cone().dim(),
            "domain": DomainSpec::from_domain(grid.cone().section()),
            "a": args.a,
            "b": args.b,
            "n_theta": args.n_theta,
            "h": grid.h(),
            "tol": args.domain.tol,
            "solver_tol": opts.tol,
            "delta": delta,
            "beta": beta,
            "beta_inner": pair.beta_inner,
            "beta_outer": pair.beta_outer,
            "decay": decay.as_ref().ok().map(|d| json!({
                "beta_fit": d.fit.beta_fit,
                "zero_outer_beta_fit": d.zero_outer.beta_fit,
                "relative_error": rel.as_ref().ok(),
                "r_range": d.fit.r_range,
                "mismatch": d.mismatch,
                "iterations": d.iterations,
            })),
            "band": band.as_ref().ok(),
            "delta1": family.delta1,
            "taus": taus,
            "sandwich": sandwich,
            "lipschitz": lipschitz,
            "contraction": contraction.as_ref().ok(),
            "checks": checks,
            "passed": passed,
        })),
        Format::Csv => {
            let rows: Vec<ShellRow> = contraction
                .as_ref()
                .map(|c| {
                    c.shells
                        .iter()
                        .map(|s| ShellRow {
                            t: s.t,
                            sup: s.sup,
                            inf: s.inf,
                            osc: s.osc,
                            beta_fit: decay.as_ref().map_or(f64::NAN, |d| d.fit.beta_fit),
                            beta,
                            delta1: family.delta1,
                            c_hat: c.c_hat,
                            theta_fit: c.theta_fit,
                            bound: c.bound,
                            n_theta: args.n_theta,
                            tol: args.domain.tol,
                        })
                        .collect()
                })
                .unwrap_or_default();
            csv_text(
                &rows,
                &["t", "M", "m", "osc", "beta_fit", "beta", "delta1", "c_hat", "theta_fit", "bound", "n_theta", "tol"],
            )?
        }
    };
    emit(&args.output, &text)?;
    if let (Some(path), Ok(c)) = (&args.svg, &contraction) {
        let series = [Series {
            label: "osc(t)".into(),
            points: c.shells.iter().map(|s| (s.t, s.osc)).collect(),
        }];
        write_file(Some(path), &line_plot("Quotient oscillation beyond radius t", "t", "osc", &series, true))?;
    }
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(passed)
}

pub fn verify(args: &VerifyArgs) -> Result<bool> {
    let report = run_suite(&SuiteOptions {
        seed: args.seed,
        trials: args.trials,
        only: args.only.clone(),
    })?;
    let text = match args.output.format {
        None => report.to_text(),
        Some(Format::Json) => json_text(&report),
        Some(Format::Csv) => csv_text(
            &report.checks,
            &["name", "anchor", "passed", "worst_slack", "samples", "violations", "detail"],
        )?,
    };
    emit(&args.output, &text)?;
    Ok(report.passed())
}
