//! Executes the CLI subcommands against a loaded configuration and writes
//! the run artifacts (CSV tables, JSON summary, optional VTK field and
//! MatrixMarket system). All outputs are deterministic functions of the
//! configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::assembly::{
    apply_dirichlet, assemble_stiffness, h1_seminorm, l2_norm, AdmissibleField, DirichletData,
};
use crate::coefficient::{certify_ellipticity, EllipticityCertificate, DEFAULT_Z_SAMPLES};
use crate::config::{ExperimentConfig, RunConfig};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::picard::{solve_fixed_point, PicardReport};
use crate::sparse::{cg_solve, Preconditioner};
use crate::verification::{
    boundary_dependence_experiment, coefficient_dependence_experiment, convergence_study,
    flux_functional, ConvergenceStudy, DependenceReport,
};

/// Outcome of a run mapped to the process exit code: 0 for a converged
/// solve / completed experiment, 2 for honest non-convergence (artifacts
/// are still written). Configuration and validation failures surface as
/// errors and exit 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::NotConverged => 2,
        }
    }
}

#[derive(Serialize)]
struct SolutionStats {
    min: f64,
    max: f64,
    l2_norm: f64,
    h1_seminorm: f64,
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    config: &'a RunConfig,
    certificate: EllipticityCertificate,
    report: &'a PicardReport,
    solution: SolutionStats,
}

#[derive(Serialize)]
struct ExperimentSummary<'a, T: Serialize> {
    config: &'a RunConfig,
    experiment: &'a T,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("summary serialization failed: {e}")))?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

fn resolve_output_dir(config: &RunConfig, cli_override: Option<&Path>) -> Result<PathBuf> {
    let dir = match cli_override {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(config.output.directory.as_deref().unwrap_or(".")),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

struct Problem {
    mesh: Mesh,
    model: crate::coefficient::CoefficientModel,
    dirichlet: DirichletData,
    picard: crate::picard::PicardConfig,
    certificate: EllipticityCertificate,
}

/// Builds every problem object and runs the ellipticity certification and
/// boundary-range checks that gate any solve.
fn prepare(config: &RunConfig) -> Result<Problem> {
    let mesh = config.build_mesh()?;
    let model = config.build_model(&mesh)?;
    let certificate = certify_ellipticity(&model, &mesh, DEFAULT_Z_SAMPLES, mesh.n_elements())?;
    let dirichlet = config.build_dirichlet(&mesh)?;
    dirichlet.validate_range(&mesh, model.range())?;
    let picard = config.build_picard()?;
    Ok(Problem {
        mesh,
        model,
        dirichlet,
        picard,
        certificate,
    })
}

/// `validate`: certification and range checks only, certificate printed.
pub fn run_validate(config: &RunConfig, quiet: bool) -> Result<Outcome> {
    let problem = prepare(config)?;
    if !quiet {
        let c = &problem.certificate;
        println!(
            "ellipticity certificate: lambda_min={:.16e} lambda_max={:.16e} (z_samples={}, x_samples={})",
            c.lambda_min, c.lambda_max, c.samples_z, c.samples_x
        );
        let range = problem.model.range();
        println!(
            "boundary data within [{}, {}]: ok",
            range.t_min(),
            range.t_max()
        );
    }
    Ok(Outcome::Completed)
}

/// `solve`: fixed-point solve with artifacts.
pub fn run_solve(
    config: &RunConfig,
    output_dir: Option<&Path>,
    quiet: bool,
) -> Result<Outcome> {
    let problem = prepare(config)?;
    let dir = resolve_output_dir(config, output_dir)?;
    let (u, report) = solve_fixed_point(
        &problem.mesh,
        &problem.model,
        &problem.dirichlet,
        &problem.picard,
    )?;

    let mut history = create(&dir, "iterations.csv")?;
    report.write_history_csv(&mut history)?;

    let (min, max) = u.min_max();
    let summary = SolveSummary {
        config,
        certificate: problem.certificate,
        report: &report,
        solution: SolutionStats {
            min,
            max,
            l2_norm: l2_norm(&problem.mesh, u.values())?,
            h1_seminorm: h1_seminorm(&problem.mesh, u.values())?,
        },
    };
    write_json(&dir, "summary.json", &summary)?;

    if config.wants_format("vtk") {
        let mut vtk = create(&dir, "solution.vtk")?;
        problem.mesh.write_vtk(&mut vtk, &[("u", u.values())])?;
    }
    if config.wants_format("mtx") {
        let stiffness = assemble_stiffness(&problem.mesh, &problem.model, &u)?;
        let mut mtx = create(&dir, "system.mtx")?;
        stiffness.write_matrix_market(&mut mtx)?;
    }

    if !quiet {
        println!(
            "solve: converged={} iterations={} final_increment={:.3e}",
            report.converged,
            report.iterations_used,
            report.increments_l2.last().copied().unwrap_or(0.0)
        );
    }
    Ok(if report.converged {
        Outcome::Completed
    } else {
        Outcome::NotConverged
    })
}

/// `experiment`: dispatches on the configured experiment kind.
pub fn run_experiment(
    config: &RunConfig,
    output_dir: Option<&Path>,
    quiet: bool,
) -> Result<Outcome> {
    let experiment = config.experiment.as_ref().ok_or_else(|| {
        Error::Config("experiment mode requires an [experiment] section".into())
    })?;
    let dir = resolve_output_dir(config, output_dir)?;
    match experiment {
        ExperimentConfig::Convergence { levels } => {
            let oracle = config.build_oracle()?;
            let study = convergence_study(&oracle, config.dim(), levels, &config.build_picard()?)?;
            let mut csv = create(&dir, "convergence.csv")?;
            study.write_csv(&mut csv)?;
            write_json(&dir, "summary.json", &ExperimentSummary {
                config,
                experiment: &study,
            })?;
            if !quiet {
                print_convergence_summary(&study);
            }
            Ok(if study.completed {
                Outcome::Completed
            } else {
                Outcome::NotConverged
            })
        }
        ExperimentConfig::CoeffDependence { epsilons } => {
            let problem = prepare(config)?;
            let report = coefficient_dependence_experiment(
                &problem.mesh,
                &problem.model,
                &problem.dirichlet,
                epsilons,
                &problem.picard,
            )?;
            let mut csv = create(&dir, "coeff_dependence.csv")?;
            report.write_csv(&mut csv)?;
            write_json(&dir, "summary.json", &ExperimentSummary {
                config,
                experiment: &report,
            })?;
            if !quiet {
                print_dependence_summary("coeff-dependence", &report);
            }
            Ok(Outcome::Completed)
        }
        ExperimentConfig::BoundaryDependence { epsilons, profile } => {
            let problem = prepare(config)?;
            let trace = profile.trace(config.dim())?;
            let g = DirichletData::from_trace_fn(&problem.mesh, trace);
            let report = boundary_dependence_experiment(
                &problem.mesh,
                &problem.model,
                &problem.dirichlet,
                &g,
                epsilons,
                &problem.picard,
            )?;
            let mut csv = create(&dir, "boundary_dependence.csv")?;
            report.write_csv(&mut csv)?;
            write_json(&dir, "summary.json", &ExperimentSummary {
                config,
                experiment: &report,
            })?;
            if !quiet {
                print_dependence_summary("boundary-dependence", &report);
            }
            Ok(Outcome::Completed)
        }
        ExperimentConfig::Flux => run_flux_experiment(config, &dir, quiet),
    }
}

#[derive(Serialize)]
struct FluxRow {
    eta: String,
    flux: f64,
    bound: f64,
    within_bound: bool,
}

#[derive(Serialize)]
struct FluxExperiment {
    converged: bool,
    lambda_max: f64,
    grad_norm: f64,
    rows: Vec<FluxRow>,
}

/// Solves the configured problem and evaluates the flux functional against
/// a family of P1 test fields, checking |flux| <= Lambda |z|_1 |eta|_1.
fn run_flux_experiment(config: &RunConfig, dir: &Path, quiet: bool) -> Result<Outcome> {
    let problem = prepare(config)?;
    let (u, report) = solve_fixed_point(
        &problem.mesh,
        &problem.model,
        &problem.dirichlet,
        &problem.picard,
    )?;
    let mesh = &problem.mesh;
    let grad_norm = h1_seminorm(mesh, u.values())?;
    let lambda_max = problem.certificate.lambda_max;

    let profiles: Vec<(&str, Vec<f64>)> = vec![
        ("affine", coordinate_field(mesh, |x| x[0] + if x.len() > 1 { x[1] } else { 0.0 })),
        ("bump", coordinate_field(mesh, |x| {
            x.iter().map(|&c| c * (1.0 - c)).product()
        })),
        ("oscillation", coordinate_field(mesh, |x| {
            (3.0 * x[0]).cos() * if x.len() > 1 { (2.0 * x[1]).cos() } else { 1.0 }
        })),
    ];
    let mut rows = Vec::new();
    for (name, eta) in &profiles {
        let flux = flux_functional(mesh, &problem.model, &u, eta)?;
        let bound = lambda_max * grad_norm * h1_seminorm(mesh, eta)?;
        rows.push(FluxRow {
            eta: name.to_string(),
            flux,
            bound,
            within_bound: flux.abs() <= bound * (1.0 + 1e-12),
        });
    }

    let result = FluxExperiment {
        converged: report.converged,
        lambda_max,
        grad_norm,
        rows,
    };
    let mut csv = create(dir, "flux.csv")?;
    writeln!(csv, "eta,flux,bound,within_bound")?;
    for row in &result.rows {
        writeln!(
            csv,
            "{},{:.16e},{:.16e},{}",
            row.eta, row.flux, row.bound, row.within_bound
        )?;
    }
    write_json(dir, "summary.json", &ExperimentSummary {
        config,
        experiment: &result,
    })?;
    if !quiet {
        println!(
            "experiment flux: converged={} profiles={} all_within_bound={}",
            result.converged,
            result.rows.len(),
            result.rows.iter().all(|r| r.within_bound)
        );
    }
    Ok(if result.converged {
        Outcome::Completed
    } else {
        Outcome::NotConverged
    })
}

fn coordinate_field<F: Fn(&[f64]) -> f64>(mesh: &Mesh, f: F) -> Vec<f64> {
    (0..mesh.n_nodes()).map(|i| f(mesh.node(i))).collect()
}

fn print_convergence_summary(study: &ConvergenceStudy) {
    let fmt = |s: Option<f64>| s.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
    println!(
        "experiment convergence: levels={} completed={} l2_slope={} h1_slope={}",
        study.rows.len(),
        study.completed,
        fmt(study.l2_slope),
        fmt(study.h1_slope)
    );
}

fn print_dependence_summary(kind: &str, report: &DependenceReport) {
    let fmt = |s: Option<f64>| s.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
    println!(
        "experiment {kind}: members={} monotone={} slope={}",
        report.epsilons.len(),
        report.monotone,
        fmt(report.slope)
    );
}

/// Smoke utility used by tests: solves the reduced linear system assembled
/// at a frozen field, bypassing the fixed-point loop.
pub fn solve_linear_at(
    mesh: &Mesh,
    model: &crate::coefficient::CoefficientModel,
    dirichlet: &DirichletData,
    z: &AdmissibleField,
) -> Result<Vec<f64>> {
    let stiffness = assemble_stiffness(mesh, model, z)?;
    let reduced = apply_dirichlet(&stiffness, dirichlet, mesh)?;
    let n = reduced.matrix.nrows();
    let (v, report) = cg_solve(
        &reduced.matrix,
        &reduced.rhs,
        1e-12,
        (10 * n).max(50),
        Preconditioner::Jacobi,
    )?;
    if !report.converged {
        return Err(Error::LinearSolve("direct frozen solve stalled".into()));
    }
    Ok(reduced.expand(&v, dirichlet))
}
