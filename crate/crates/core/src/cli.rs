//! Command dispatch for the `gibc` binary.
//!
//! Every command writes its artifacts into `output_dir` and prints a short
//! summary; the exit status is 0 on success, 1 when a validation fails or a
//! computation errors, and 2 for usage and configuration errors.

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{flag_overrides, parse_config, Command, FieldKind, RadialChoice, RunConfig, Sweep};
use crate::error::{GibcError, Result};
use crate::meshio::{load_mesh, summarize};
use crate::output::{
    coefficients_csv, fmt_real, polar_svg, rcs_csv, solve_report_text, table_csv, write_artifact,
};
use crate::scatter::{far_field_rcs, incident_trace, solve_coefficients, solve_surface};
use crate::special::{ModeIndex, Polarization};
use crate::spectral::{helmholtz_decompose_spectral, modes, surface_gradient, SpectralTangentField};
use crate::surface::{
    curlvec_gamma, grad_gamma, hodge_decompose_mesh, project_tangent, ScalarFieldP1, TangentFieldP0,
};
use crate::validation::run_suite;
use crate::volume::{
    l2_error, solve_mode_exact, solve_mode_fem, volume_surface_equivalence, RadialGrid, RadialSolver,
};

#[derive(Debug, Parser)]
#[command(
    name = "gibc",
    version,
    about = "Scattering by a sphere with a generalized impedance boundary condition",
    after_help = "Any configuration key can be given as `--key value` after the command, \
                  e.g. `gibc solve --omega 1 --a 1 --model \"scalar lambda=1+0.5i\"`."
)]
struct Cli {
    /// solve | rcs | validate | decompose | equivalence | convergence
    command: String,
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Configuration overrides `--key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

fn ok(summary: String, artifacts: Vec<PathBuf>) -> Outcome {
    Outcome {
        passed: true,
        summary,
        artifacts,
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Solve => run_solve(cfg),
        Command::Rcs => run_rcs(cfg),
        Command::Validate => run_validate(cfg),
        Command::Decompose => run_decompose(cfg),
        Command::Equivalence => run_equivalence(cfg),
        Command::Convergence => run_convergence(cfg),
    }
}

fn run_solve(cfg: &RunConfig) -> Result<Outcome> {
    let nmax = cfg.resolved_nmax();
    let inc = cfg.incident_field()?;
    let f = incident_trace(&inc, &cfg.model, cfg.a, nmax)?;
    let rep = solve_surface(&f, &cfg.model, cfg.omega, cfg.a, nmax)?;
    let report = write_artifact(&cfg.output_dir, "report.txt", &solve_report_text(&rep, cfg.a))?;
    let coeffs = write_artifact(&cfg.output_dir, "coefficients.csv", &coefficients_csv(&rep.u)?)?;
    let worst = rep.mode_condition_numbers.iter().cloned().fold(0.0, f64::max);
    Ok(ok(
        format!(
            "solved {} modes (N_max = {}), energy residual {:.2e}, worst mode condition {:.2e}, route {}",
            2 * rep.u.alpha.len(),
            rep.u.nmax,
            rep.energy_residual,
            worst,
            rep.hypothesis.existence_route.as_str()
        ),
        vec![report, coeffs],
    ))
}

fn run_rcs(cfg: &RunConfig) -> Result<Outcome> {
    let nmax = cfg.resolved_nmax();
    let inc = cfg.incident_field()?;
    let f = incident_trace(&inc, &cfg.model, cfg.a, nmax)?;
    let (u, _, _) = solve_coefficients(&f, &cfg.model, cfg.omega, cfg.a, nmax)?;
    let count = cfg.theta_points;
    let thetas: Vec<f64> = (0..count)
        .map(|k| std::f64::consts::PI * k as f64 / (count - 1) as f64)
        .collect();
    let dirs: Vec<[f64; 3]> = thetas
        .iter()
        .map(|t| [t.sin() * cfg.phi.cos(), t.sin() * cfg.phi.sin(), t.cos()])
        .collect();
    let sig = far_field_rcs(&u, cfg.omega, &dirs, inc.amplitude())?;
    let rows: Vec<(f64, f64, f64)> = thetas.iter().zip(&sig).map(|(t, s)| (*t, cfg.phi, s.1)).collect();
    let mut artifacts = vec![write_artifact(&cfg.output_dir, "rcs.csv", &rcs_csv(&rows)?)?];
    if cfg.svg {
        let sigma: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let title = format!("RCS, omega = {}, a = {}, model {}", cfg.omega, cfg.a, cfg.model.name());
        artifacts.push(write_artifact(&cfg.output_dir, "rcs.svg", &polar_svg(&thetas, &sigma, &title))?);
    }
    Ok(ok(
        format!("{count} directions, backscatter sigma = {:.6e}", rows.last().map(|r| r.2).unwrap_or(0.0)),
        artifacts,
    ))
}

fn run_validate(cfg: &RunConfig) -> Result<Outcome> {
    let checks = run_suite(cfg)?;
    let mut summary = format!("{:<12} {:<52} {:>12} {:>10}  result\n", "suite", "check", "value", "threshold");
    let mut rows = Vec::new();
    for ch in &checks {
        let value = ch.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        let thr = if ch.threshold.is_nan() { "-".into() } else { format!("{:.0e}", ch.threshold) };
        let verdict = match (ch.value, ch.passed) {
            (None, _) => "skip",
            (_, true) => "PASS",
            _ => "FAIL",
        };
        summary.push_str(&format!("{:<12} {:<52} {:>12} {:>10}  {verdict}\n", ch.suite, ch.name, value, thr));
        rows.push(vec![
            ch.suite.to_string(),
            ch.name.clone(),
            ch.value.map(fmt_real).unwrap_or_default(),
            if ch.threshold.is_nan() { String::new() } else { fmt_real(ch.threshold) },
            verdict.to_string(),
        ]);
    }
    let path = write_artifact(
        &cfg.output_dir,
        "validate.csv",
        &table_csv(&["suite", "check", "value", "threshold", "result"], &rows)?,
    )?;
    Ok(Outcome {
        passed: checks.iter().all(|c| c.passed),
        summary,
        artifacts: vec![path],
    })
}

fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn run_decompose(cfg: &RunConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if let Some(path) = &cfg.mesh_path {
        let mesh = load_mesh(path)?;
        let info = summarize(&mesh);
        let potential = ScalarFieldP1 {
            values: (0..mesh.vertices.len()).map(|_| random_complex(&mut rng)).collect(),
        };
        let v = match cfg.field {
            FieldKind::Gradient => grad_gamma(&mesh, &potential)?,
            FieldKind::Curl => curlvec_gamma(&mesh, &potential)?,
            FieldKind::Random => TangentFieldP0 {
                vectors: mesh
                    .face_normals
                    .iter()
                    .map(|n| {
                        let w = [random_complex(&mut rng), random_complex(&mut rng), random_complex(&mut rng)];
                        project_tangent(n, &w)
                    })
                    .collect(),
            },
        };
        let d = hodge_decompose_mesh(&mesh, &v)?;
        let g = grad_gamma(&mesh, &d.p)?;
        let c = curlvec_gamma(&mesh, &d.q)?;
        let norm = |z: &[Complex64; 3]| z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let mut worst: f64 = 0.0;
        let rows: Vec<Vec<String>> = (0..mesh.faces.len())
            .map(|f| {
                let rec = [0, 1, 2].map(|k| v.vectors[f][k] - g.vectors[f][k] - c.vectors[f][k]);
                let err = norm(&rec);
                worst = worst.max(err);
                vec![
                    f.to_string(),
                    fmt_real(norm(&v.vectors[f])),
                    fmt_real(norm(&g.vectors[f])),
                    fmt_real(norm(&c.vectors[f])),
                    fmt_real(err),
                ]
            })
            .collect();
        let csv = table_csv(&["face", "field", "gradient_part", "curl_part", "reconstruction_error"], &rows)?;
        let path = write_artifact(&cfg.output_dir, "decompose.csv", &csv)?;
        return Ok(ok(
            format!(
                "mesh: V = {}, E = {}, F = {}, chi = {}, genus {}; max reconstruction error {:.3e}, solver residual {:.3e}",
                info.vertices,
                info.edges,
                info.faces,
                info.euler_characteristic,
                info.genus.map(|g| g.to_string()).unwrap_or_else(|| "n/a".into()),
                worst,
                d.residual_norm
            ),
            vec![path],
        ));
    }
    let nmax = cfg.resolved_nmax();
    let u = match cfg.field {
        FieldKind::Random => SpectralTangentField::random(nmax, cfg.a, &mut rng),
        FieldKind::Gradient | FieldKind::Curl => {
            let mut u = SpectralTangentField::random(nmax, cfg.a, &mut rng);
            let kill = if cfg.field == FieldKind::Gradient { &mut u.beta } else { &mut u.alpha };
            kill.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            u
        }
    };
    let split = helmholtz_decompose_spectral(&u, &cfg.model, cfg.omega)?;
    let grad = surface_gradient(&split.p);
    let mut worst: f64 = 0.0;
    let rows: Vec<Vec<String>> = modes(nmax)
        .map(|(n, m, k)| {
            let err = (grad.alpha[k] + split.w.alpha[k] - u.alpha[k])
                .norm()
                .max((grad.beta[k] + split.w.beta[k] - u.beta[k]).norm());
            worst = worst.max(err);
            vec![
                n.to_string(),
                m.to_string(),
                fmt_real(split.p.values[k].re),
                fmt_real(split.p.values[k].im),
                fmt_real(split.w.alpha[k].re),
                fmt_real(split.w.alpha[k].im),
                fmt_real(split.w.beta[k].re),
                fmt_real(split.w.beta[k].im),
                fmt_real(err),
            ]
        })
        .collect();
    let csv = table_csv(
        &["n", "m", "p_re", "p_im", "w_u_re", "w_u_im", "w_v_re", "w_v_im", "reconstruction_error"],
        &rows,
    )?;
    let path = write_artifact(&cfg.output_dir, "decompose.csv", &csv)?;
    Ok(ok(
        format!(
            "spectral split at N_max = {nmax}: max reconstruction error {worst:.3e}, X residual {:.3e}, continuity constant {:.4}",
            split.x_residual, split.continuity_constant
        ),
        vec![path],
    ))
}

fn pol_name(p: Polarization) -> &'static str {
    match p {
        Polarization::GradType => "U",
        Polarization::CurlType => "V",
    }
}

fn fem_grid(cfg: &RunConfig) -> Result<RadialGrid> {
    let g = RadialGrid::default_for_degree(cfg.omega, cfg.a, cfg.r_outer, cfg.resolved_nmax())?;
    RadialGrid::new(g.nodes, cfg.order)
}

fn run_equivalence(cfg: &RunConfig) -> Result<Outcome> {
    let inc = cfg.incident_field()?;
    let (solver, default_tol) = match cfg.radial_solver {
        RadialChoice::Exact => (RadialSolver::Exact { r_outer: cfg.r_outer }, 1e-10),
        RadialChoice::Fem => (RadialSolver::Fem(fem_grid(cfg)?), 1e-4),
    };
    let tol = cfg.tolerance.unwrap_or(default_tol);
    let rep = volume_surface_equivalence(&cfg.model, cfg.omega, cfg.a, &inc, cfg.resolved_nmax(), &solver)?;
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                pol_name(r.pol).to_string(),
                fmt_real(r.surface.re),
                fmt_real(r.surface.im),
                fmt_real(r.volume.re),
                fmt_real(r.volume.im),
                fmt_real(r.rel_diff),
            ]
        })
        .collect();
    let csv = table_csv(
        &["n", "m", "family", "surface_re", "surface_im", "volume_re", "volume_im", "rel_diff"],
        &rows,
    )?;
    let path = write_artifact(&cfg.output_dir, "equivalence.csv", &csv)?;
    Ok(Outcome {
        passed: rep.max_rel_diff <= tol,
        summary: format!(
            "{} mode comparisons, max relative difference {:.3e} (tolerance {tol:.0e})",
            rep.rows.len(),
            rep.max_rel_diff
        ),
        artifacts: vec![path],
    })
}

fn run_convergence(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.sweep {
        Sweep::Fem => {
            let mode = ModeIndex::new(cfg.degree, 0)?;
            let f = Complex64::new(1.0, 0.0);
            let mut rows = Vec::new();
            let mut summary = String::new();
            for pol in [Polarization::GradType, Polarization::CurlType] {
                let exact = solve_mode_exact(mode, pol, &cfg.model, cfg.omega, cfg.a, cfg.r_outer, f)?;
                let mut prev: Option<(f64, f64)> = None;
                let mut rate = f64::NAN;
                for ne in [4usize, 8, 16, 32, 64, 128] {
                    let grid = RadialGrid::uniform(cfg.a, cfg.r_outer, ne, cfg.order)?;
                    let fem = solve_mode_fem(mode, pol, &cfg.model, cfg.omega, &grid, f)?;
                    let err = l2_error(&fem, &exact)?;
                    let trace = (fem.trace_coeff - exact.trace_coeff).norm() / exact.trace_coeff.norm();
                    let h = grid.max_h();
                    if let Some((h0, e0)) = prev {
                        rate = (e0 / err).ln() / (h0 / h).ln();
                    }
                    prev = Some((h, err));
                    rows.push(vec![
                        pol_name(pol).to_string(),
                        ne.to_string(),
                        fmt_real(h),
                        fmt_real(err),
                        fmt_real(trace),
                    ]);
                }
                summary.push_str(&format!("{}: observed L2 rate {rate:.3} (order {})\n", pol_name(pol), cfg.order));
            }
            let csv = table_csv(&["family", "elements", "h", "l2_error", "trace_rel_error"], &rows)?;
            let path = write_artifact(&cfg.output_dir, "convergence.csv", &csv)?;
            Ok(ok(summary, vec![path]))
        }
        Sweep::Nmax => {
            let inc = cfg.incident_field()?;
            let top = cfg.resolved_nmax();
            let reference_n = top + 10;
            let f = incident_trace(&inc, &cfg.model, cfg.a, reference_n)?;
            let back = [[0.0, 0.0, -1.0]];
            let (uref, _, _) = solve_coefficients(&f, &cfg.model, cfg.omega, cfg.a, reference_n)?;
            let sref = far_field_rcs(&uref, cfg.omega, &back, inc.amplitude())?[0].1;
            let mut rows = Vec::new();
            for n in 1..=top {
                let (u, _, _) = solve_coefficients(&f, &cfg.model, cfg.omega, cfg.a, n)?;
                let s = far_field_rcs(&u, cfg.omega, &back, inc.amplitude())?[0].1;
                rows.push(vec![n.to_string(), fmt_real(s), fmt_real((s - sref).abs() / sref)]);
            }
            let csv = table_csv(&["N_max", "backscatter_sigma", "rel_diff_to_reference"], &rows)?;
            let path = write_artifact(&cfg.output_dir, "convergence.csv", &csv)?;
            Ok(ok(format!("swept N_max = 1..={top} against N_max = {reference_n}"), vec![path]))
        }
    }
}

fn exit_code(err: &GibcError) -> i32 {
    match err {
        GibcError::Parse { .. } | GibcError::Config(_) => 2,
        _ => 1,
    }
}

/// Entry point shared by the binary: parses `args` (program name first),
/// runs the command and returns the process exit status.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = (|| -> Result<Outcome> {
        cli.command.parse::<Command>()?;
        let mut overrides = flag_overrides(&cli.overrides)?;
        let mut config_path = cli.config.clone();
        if let Some(pos) = overrides.iter().position(|(k, _)| k == "config") {
            config_path = Some(PathBuf::from(overrides.remove(pos).1));
        }
        let text = match &config_path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| GibcError::io(p, e))?,
            None => String::new(),
        };
        overrides.push(("command".into(), cli.command.clone()));
        let cfg = parse_config(&text, &overrides).map_err(|e| match (&config_path, e) {
            (Some(p), GibcError::Parse { line, column, message }) => GibcError::Parse {
                line,
                column,
                message: format!("{}: {message}", p.display()),
            },
            (_, e) => e,
        })?;
        run(&cfg)
    })();
    match result {
        Ok(outcome) => {
            // a closed pipe (e.g. `| head`) must not turn success into a panic
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", outcome.summary.trim_end_matches('\n'));
            for a in &outcome.artifacts {
                let _ = writeln!(out, "wrote {}", a.display());
            }
            if outcome.passed {
                0
            } else {
                eprintln!("validation failed");
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
