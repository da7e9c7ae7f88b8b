//! The frozen-coefficient linear map and its damped fixed-point iteration.
//!
//! One application of the map freezes the coefficient at an admissible
//! field z, solves the resulting linear Dirichlet problem and returns the
//! solution projected back into the admissible range. The continuous theory
//! guarantees the exact solution already lies in the range (the maximum
//! principle); discrete overshoot is a quadrature/mesh artifact, so it is
//! measured and recorded rather than treated as fatal, unless the reject
//! policy is selected.
//!
//! The fixed point is approached by damped iteration
//! z_{k+1} = theta * map(z_k) + (1 - theta) * z_k, stopping on the L2
//! increment. Existence of the fixed point comes from compactness, not
//! contraction, so the iteration may stall; stalls trigger a one-time
//! damping fallback and honest non-convergence reporting.

use std::io::Write;

use serde::Serialize;

use crate::assembly::{
    apply_dirichlet, assemble_stiffness, h1_distance, h1_norm, l2_distance, AdmissibleField,
    DirichletData,
};
use crate::coefficient::{CoefficientModel, EllipticityCertificate};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::{cg_solve, CgReport, Preconditioner};

/// What to do when the linear solution oversteps the admissible range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ClampPolicy {
    /// Clamp into the range and record the violation.
    Clamp,
    /// Fail when the violation exceeds `tol`.
    Reject { tol: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub enum InitialGuess {
    /// Zero-interior extension of the boundary data, clamped to the range.
    BoundaryExtension,
    Constant(f64),
    Given(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardConfig {
    /// Stopping threshold on the L2 increment between iterates.
    pub tol_l2: f64,
    pub max_iterations: usize,
    /// Relaxation factor theta in (0, 1].
    pub damping: f64,
    pub clamp_policy: ClampPolicy,
    pub initial_guess: InitialGuess,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol_l2: 1e-10,
            max_iterations: 50,
            damping: 1.0,
            clamp_policy: ClampPolicy::Clamp,
            initial_guess: InitialGuess::BoundaryExtension,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_l2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol_l2 must be positive, got {}",
                self.tol_l2
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidArgument(
                "max_iterations must be >= 1".into(),
            ));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Per-iteration record of a fixed-point run.
#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub iterations_used: usize,
    /// ||z_{k+1} - z_k||_2 per iteration.
    pub increments_l2: Vec<f64>,
    pub increments_h1: Vec<f64>,
    /// Largest pre-clamp distance outside the range per iteration.
    pub clamp_violation_linf: Vec<f64>,
    pub converged: bool,
    pub linear_solves: Vec<CgReport>,
    /// Damping factor in effect at the end of the run.
    pub damping_final: f64,
    /// Iteration at which the stagnation fallback halved the damping.
    pub damping_fallback_at: Option<usize>,
    /// Relative residual of the nonlinear Galerkin system at the returned
    /// field (computed on convergence).
    pub nonlinear_residual: Option<f64>,
}

impl PicardReport {
    /// Iteration history as CSV: one row per map application.
    pub fn write_history_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "iteration,increment_l2,increment_h1,clamp_violation,cg_iterations"
        )?;
        for i in 0..self.increments_l2.len() {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{}",
                i + 1,
                self.increments_l2[i],
                self.increments_h1[i],
                self.clamp_violation_linf[i],
                self.linear_solves[i].iterations
            )?;
        }
        Ok(())
    }
}

/// One application of the frozen-coefficient map.
#[derive(Debug, Clone)]
pub struct LinearizedOutput {
    pub field: AdmissibleField,
    /// Largest distance of the raw linear solution outside the range.
    pub clamp_violation: f64,
    pub cg: CgReport,
}

const CG_TOL_DEFAULT: f64 = 1e-12;

/// Solves the linear Dirichlet problem with the coefficient frozen at `z`
/// and projects the result into the admissible range per `policy`.
pub fn linearized_map(
    mesh: &Mesh,
    model: &CoefficientModel,
    dirichlet: &DirichletData,
    z: &AdmissibleField,
    policy: ClampPolicy,
) -> Result<LinearizedOutput> {
    linearized_map_with_tol(mesh, model, dirichlet, z, policy, CG_TOL_DEFAULT)
}

fn linearized_map_with_tol(
    mesh: &Mesh,
    model: &CoefficientModel,
    dirichlet: &DirichletData,
    z: &AdmissibleField,
    policy: ClampPolicy,
    cg_tol: f64,
) -> Result<LinearizedOutput> {
    let range = model.range();
    dirichlet.validate_range(mesh, range)?;
    let stiffness = assemble_stiffness(mesh, model, z)?;
    let reduced = apply_dirichlet(&stiffness, dirichlet, mesh)?;
    let n = reduced.matrix.nrows();
    let (v, cg) = cg_solve(
        &reduced.matrix,
        &reduced.rhs,
        cg_tol,
        (10 * n).max(50),
        Preconditioner::Jacobi,
    )?;
    if !cg.converged {
        return Err(Error::LinearSolve(format!(
            "conjugate gradient stalled after {} iterations, residual {:e}",
            cg.iterations, cg.final_residual_norm
        )));
    }
    let full = reduced.expand(&v, dirichlet);
    let (field, violation) = AdmissibleField::clamped(full, range);
    if let ClampPolicy::Reject { tol } = policy {
        if violation > tol {
            return Err(Error::MaxPrincipleViolation {
                violation,
                tol,
            });
        }
    }
    Ok(LinearizedOutput {
        field,
        clamp_violation: violation,
        cg,
    })
}

/// Result of checking the energy estimate
/// ||w||_H1 <= C(Omega) Lambda ||u_b||_H1 / lambda + ||u_b||_H1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyBoundCheck {
    pub h1_norm_w: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks the a-priori energy bound of the frozen-coefficient solution
/// against the discrete H1 norms; a test oracle, not a runtime gate.
pub fn energy_bound_check(
    mesh: &Mesh,
    w: &[f64],
    dirichlet: &DirichletData,
    certificate: &EllipticityCertificate,
    domain_constant: f64,
) -> Result<EnergyBoundCheck> {
    let h1_w = h1_norm(mesh, w)?;
    let h1_ub = h1_norm(mesh, dirichlet.nodal())?;
    let bound =
        domain_constant * certificate.lambda_max * h1_ub / certificate.lambda_min + h1_ub;
    Ok(EnergyBoundCheck {
        h1_norm_w: h1_w,
        bound,
        holds: h1_w <= bound,
    })
}

fn initial_field(
    mesh: &Mesh,
    dirichlet: &DirichletData,
    config: &PicardConfig,
    model: &CoefficientModel,
) -> Result<AdmissibleField> {
    let range = model.range();
    match &config.initial_guess {
        InitialGuess::BoundaryExtension => {
            let (field, _) = AdmissibleField::clamped(dirichlet.nodal().to_vec(), range);
            Ok(field)
        }
        InitialGuess::Constant(c) => AdmissibleField::constant(mesh.n_nodes(), *c, range),
        InitialGuess::Given(values) => AdmissibleField::new(values.clone(), range),
    }
}

/// Damped fixed-point iteration of the frozen-coefficient map. Returns the
/// final field with the full iteration record; non-convergence is reported
/// in the record, solver and ellipticity failures propagate as errors.
pub fn solve_fixed_point(
    mesh: &Mesh,
    model: &CoefficientModel,
    dirichlet: &DirichletData,
    config: &PicardConfig,
) -> Result<(AdmissibleField, PicardReport)> {
    config.validate()?;
    dirichlet.validate_range(mesh, model.range())?;
    let range = model.range();
    let cg_tol = (config.tol_l2 * 1e-3).clamp(1e-15, CG_TOL_DEFAULT);

    let mut z = initial_field(mesh, dirichlet, config, model)?;
    let mut report = PicardReport {
        iterations_used: 0,
        increments_l2: Vec::new(),
        increments_h1: Vec::new(),
        clamp_violation_linf: Vec::new(),
        converged: false,
        linear_solves: Vec::new(),
        damping_final: config.damping,
        damping_fallback_at: None,
        nonlinear_residual: None,
    };
    let mut theta = config.damping;
    let mut stagnant = 0usize;

    for iteration in 1..=config.max_iterations {
        let out = linearized_map_with_tol(
            mesh,
            model,
            dirichlet,
            &z,
            config.clamp_policy,
            cg_tol,
        )?;
        let next_values: Vec<f64> = out
            .field
            .values()
            .iter()
            .zip(z.values())
            .map(|(&w, &zk)| range.clamp(theta * w + (1.0 - theta) * zk))
            .collect();
        let inc_l2 = l2_distance(mesh, &next_values, z.values())?;
        let inc_h1 = h1_distance(mesh, &next_values, z.values())?;
        z = AdmissibleField::new(next_values, range)?;

        report.iterations_used = iteration;
        report.increments_l2.push(inc_l2);
        report.increments_h1.push(inc_h1);
        report.clamp_violation_linf.push(out.clamp_violation);
        report.linear_solves.push(out.cg);

        if !inc_l2.is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "non-finite increment at iteration {iteration}"
            )));
        }
        if inc_l2 <= config.tol_l2 {
            report.converged = true;
            break;
        }

        // stagnation fallback: halve the damping once after half the
        // iteration budget has been spent on steps that failed to shrink
        // the increment by at least 1% (oscillating iterations alternate
        // up and down, so the count is cumulative, not consecutive)
        let prev = if report.increments_l2.len() >= 2 {
            report.increments_l2[report.increments_l2.len() - 2]
        } else {
            f64::INFINITY
        };
        if inc_l2 >= 0.99 * prev {
            stagnant += 1;
        }
        if stagnant > 0 && stagnant >= config.max_iterations / 2 && theta > 0.5 {
            theta = 0.5;
            report.damping_final = theta;
            report.damping_fallback_at = Some(iteration);
            stagnant = 0;
        }
    }

    if report.converged {
        report.nonlinear_residual = Some(nonlinear_residual(mesh, model, dirichlet, &z)?);
    }
    Ok((z, report))
}

/// Relative residual of the nonlinear Galerkin system assembled at `u`.
pub fn nonlinear_residual(
    mesh: &Mesh,
    model: &CoefficientModel,
    dirichlet: &DirichletData,
    u: &AdmissibleField,
) -> Result<f64> {
    let stiffness = assemble_stiffness(mesh, model, u)?;
    let reduced = apply_dirichlet(&stiffness, dirichlet, mesh)?;
    if reduced.matrix.nrows() == 0 {
        return Ok(0.0);
    }
    let v: Vec<f64> = reduced.interior.iter().map(|&i| u.values()[i]).collect();
    let av = reduced.matrix.spmv(&v)?;
    let res: f64 = av
        .iter()
        .zip(&reduced.rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let rhs_norm: f64 = reduced.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    if rhs_norm > 0.0 {
        Ok(res / rhs_norm)
    } else {
        Ok(res)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{
        certify_ellipticity, AdmissibleRange, CoeffMatrix, CoefficientModel, MatrixField,
    };

    fn rosseland_1d(range: AdmissibleRange) -> CoefficientModel {
        CoefficientModel::rosseland(
            1,
            MatrixField::constant_scalar(1, 1.0),
            MatrixField::constant_scalar(1, 1.0),
            range,
        )
        .unwrap()
    }

    #[test]
    fn frozen_map_is_constant_for_linear_models() {
        let range = AdmissibleRange::new(0.0, 2.0).unwrap();
        let model = CoefficientModel::linear(
            1,
            MatrixField::constant_scalar(1, 3.0),
            range,
        )
        .unwrap();
        let mesh = Mesh::unit_interval(16).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 1.0 + x[0]);
        let z1 = AdmissibleField::constant(mesh.n_nodes(), 0.25, range).unwrap();
        let z2 = AdmissibleField::constant(mesh.n_nodes(), 1.75, range).unwrap();
        let w1 = linearized_map(&mesh, &model, &dirichlet, &z1, ClampPolicy::Clamp).unwrap();
        let w2 = linearized_map(&mesh, &model, &dirichlet, &z2, ClampPolicy::Clamp).unwrap();
        assert_eq!(w1.field.values(), w2.field.values());
    }

    #[test]
    fn constant_boundary_data_maps_to_constant() {
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(32).unwrap();
        let dirichlet = DirichletData::constant(&mesh, 1.5);
        let z = AdmissibleField::constant(mesh.n_nodes(), 1.0, range).unwrap();
        let out = linearized_map(&mesh, &model, &dirichlet, &z, ClampPolicy::Clamp).unwrap();
        assert_eq!(out.clamp_violation, 0.0);
        for &w in out.field.values() {
            assert!((w - 1.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn frozen_constant_coefficient_is_nodally_exact() {
        // z = 1 freezes a(1) = 2, so the solution is the linear interpolant
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(8).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 1.0 + x[0]);
        let z = AdmissibleField::constant(mesh.n_nodes(), 1.0, range).unwrap();
        let out = linearized_map(&mesh, &model, &dirichlet, &z, ClampPolicy::Clamp).unwrap();
        for i in 0..mesh.n_nodes() {
            let expected = 1.0 + mesh.node(i)[0];
            assert!(
                (out.field.values()[i] - expected).abs() <= 1e-10,
                "node {i}: {} vs {expected}",
                out.field.values()[i]
            );
        }
    }

    #[test]
    fn energy_bound_on_interpolant_and_adversarial_field() {
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(64).unwrap();
        let cert = certify_ellipticity(&model, &mesh, 64, mesh.n_elements()).unwrap();

        // constant data: ||w||_H1 = |c| on the unit domain, bound holds wide
        let constant = DirichletData::constant(&mesh, 1.5);
        let w_const =
            linearized_map(&mesh, &model, &constant, &AdmissibleField::constant(
                mesh.n_nodes(),
                1.0,
                range,
            )
            .unwrap(), ClampPolicy::Clamp)
            .unwrap();
        let check = energy_bound_check(&mesh, w_const.field.values(), &constant, &cert, 1.0)
            .unwrap();
        assert!(check.holds);
        assert!((check.h1_norm_w - 1.5).abs() <= 1e-9);
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 1.0 + x[0]);
        let z = AdmissibleField::constant(mesh.n_nodes(), 1.0, range).unwrap();
        let out = linearized_map(&mesh, &model, &dirichlet, &z, ClampPolicy::Clamp).unwrap();
        let check =
            energy_bound_check(&mesh, out.field.values(), &dirichlet, &cert, 1.0).unwrap();
        assert!(check.holds, "{check:?}");
        // the interpolant has unit H1 seminorm
        let semi = crate::assembly::h1_seminorm(&mesh, out.field.values()).unwrap();
        assert!((semi - 1.0).abs() <= 1e-9);

        let scale = 10.0 * check.bound / check.h1_norm_w;
        let blown: Vec<f64> = out.field.values().iter().map(|v| v * scale).collect();
        let bad = energy_bound_check(&mesh, &blown, &dirichlet, &cert, 1.0).unwrap();
        assert!(!bad.holds);
    }

    #[test]
    fn constant_data_fixed_point_in_one_iteration() {
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(32).unwrap();
        let dirichlet = DirichletData::constant(&mesh, 1.5);
        let config = PicardConfig::default();
        let (u, report) = solve_fixed_point(&mesh, &model, &dirichlet, &config).unwrap();
        assert!(report.converged);
        // the first map application lands on the fixed point; the second
        // confirms it with a negligible increment
        assert!(report.iterations_used <= 2);
        if report.iterations_used == 2 {
            assert!(report.increments_l2[1] <= 1e-11);
        }
        for &v in u.values() {
            assert!((v - 1.5).abs() <= 1e-10);
        }
    }

    #[test]
    fn linear_model_fixed_point_in_one_iteration() {
        let range = AdmissibleRange::new(0.0, 2.0).unwrap();
        let model = CoefficientModel::linear(
            1,
            MatrixField::constant_scalar(1, 1.0),
            range,
        )
        .unwrap();
        let mesh = Mesh::unit_interval(16).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 2.0 * x[0]);
        let (u, report) = solve_fixed_point(&mesh, &model, &dirichlet, &PicardConfig::default())
            .unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations_used, 2);
        // identical frozen systems: the confirming increment is exactly zero
        assert_eq!(report.increments_l2[1], 0.0);
        for i in 0..mesh.n_nodes() {
            assert!((u.values()[i] - 2.0 * mesh.node(i)[0]).abs() <= 1e-10);
        }
    }

    #[test]
    fn rosseland_benchmark_converges_and_stays_admissible() {
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(64).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 1.0 + x[0]);
        let config = PicardConfig::default();
        let (u, report) = solve_fixed_point(&mesh, &model, &dirichlet, &config).unwrap();
        assert!(report.converged, "increments: {:?}", report.increments_l2);
        assert!(report.iterations_used <= 50);
        let (lo, hi) = u.min_max();
        assert!(lo >= 1.0 && hi <= 2.0);
        for &v in &report.clamp_violation_linf {
            assert!(v <= 1e-10, "pre-clamp violation {v}");
        }
        assert!(report.nonlinear_residual.unwrap() <= 10.0 * config.tol_l2);

        // re-applying the map moves the converged field by at most 10 tol
        let out = linearized_map(&mesh, &model, &dirichlet, &u, ClampPolicy::Clamp).unwrap();
        let drift = l2_distance(&mesh, out.field.values(), u.values()).unwrap();
        assert!(drift <= 10.0 * config.tol_l2, "drift {drift}");
    }

    #[test]
    fn damped_iterations_share_the_fixed_point() {
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(32).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 1.0 + x[0]);
        let mut full = PicardConfig::default();
        full.damping = 1.0;
        let mut damped = PicardConfig::default();
        damped.damping = 0.5;
        damped.max_iterations = 200;
        let (u_full, r1) = solve_fixed_point(&mesh, &model, &dirichlet, &full).unwrap();
        let (u_damped, r2) = solve_fixed_point(&mesh, &model, &dirichlet, &damped).unwrap();
        assert!(r1.converged && r2.converged);
        let dist = l2_distance(&mesh, u_full.values(), u_damped.values()).unwrap();
        assert!(dist <= 10.0 * full.tol_l2, "limits differ by {dist}");
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(64).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 1.0 + x[0]);
        let mut config = PicardConfig::default();
        config.max_iterations = 2;
        config.tol_l2 = 1e-14;
        let (_, report) = solve_fixed_point(&mesh, &model, &dirichlet, &config).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations_used, 2);
        assert!(report.increments_l2.iter().all(|v| v.is_finite()));
        assert!(report.nonlinear_residual.is_none());
    }

    #[test]
    fn reject_policy_raises_on_overshoot() {
        // strongly anisotropic coefficient rotated against the mesh
        // diagonal produces positive off-diagonal stiffness entries, which
        // breaks the discrete maximum principle
        let range = AdmissibleRange::new(0.0, 1.0).unwrap();
        let k = CoeffMatrix::from_rows(2, &[vec![50.5, -49.5], vec![-49.5, 50.5]]).unwrap();
        let model =
            CoefficientModel::linear(2, MatrixField::Constant(k), range).unwrap();
        let mesh = Mesh::unit_square(4).unwrap();
        certify_ellipticity(&model, &mesh, 8, mesh.n_elements()).unwrap();
        // checkerboard-extreme boundary data excites the overshoot
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| {
            let parity = ((4.0 * (x[0] + x[1])).round() as i64) % 2;
            if parity == 0 {
                0.0
            } else {
                1.0
            }
        });
        let z = AdmissibleField::constant(mesh.n_nodes(), 0.5, range).unwrap();
        let clamped =
            linearized_map(&mesh, &model, &dirichlet, &z, ClampPolicy::Clamp).unwrap();
        assert!(
            clamped.clamp_violation > 1e-6,
            "expected a genuine overshoot, got {}",
            clamped.clamp_violation
        );
        let err = linearized_map(
            &mesh,
            &model,
            &dirichlet,
            &z,
            ClampPolicy::Reject { tol: 1e-8 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::MaxPrincipleViolation { .. }));
    }

    #[test]
    fn stagnation_triggers_damping_fallback() {
        // wildly oscillating dependence on z keeps the map from settling,
        // so the stagnation counter must fire the one-time fallback
        let range = AdmissibleRange::new(0.0, 1.0).unwrap();
        let model = CoefficientModel::custom(1, range, |z, _x, _e| {
            Ok(CoeffMatrix::scalar(1, 5.5 + 4.5 * (1.0e4 * z).cos()))
        });
        let mesh = Mesh::unit_interval(32).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| x[0]);
        let mut config = PicardConfig::default();
        config.max_iterations = 30;
        let (_, report) = solve_fixed_point(&mesh, &model, &dirichlet, &config).unwrap();
        assert!(!report.converged);
        let at = report
            .damping_fallback_at
            .expect("fallback should have fired");
        assert!(at <= config.max_iterations);
        assert_eq!(report.damping_final, 0.5);
        assert!(report.increments_l2.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn history_csv_has_one_row_per_iteration() {
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(16).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 1.0 + x[0]);
        let (_, report) =
            solve_fixed_point(&mesh, &model, &dirichlet, &PicardConfig::default()).unwrap();
        let mut buf = Vec::new();
        report.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + report.iterations_used);
        assert!(text.starts_with("iteration,increment_l2,increment_h1,clamp_violation,cg_iterations"));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut config = PicardConfig::default();
        config.damping = 0.0;
        assert!(config.validate().is_err());
        config.damping = 1.5;
        assert!(config.validate().is_err());
        config.damping = 1.0;
        config.tol_l2 = -1.0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn initial_guess_variants() {
        let range = AdmissibleRange::new(1.0, 2.0).unwrap();
        let model = rosseland_1d(range);
        let mesh = Mesh::unit_interval(8).unwrap();
        let dirichlet = DirichletData::from_trace_fn(&mesh, |x| 1.0 + x[0]);

        let mut config = PicardConfig::default();
        config.initial_guess = InitialGuess::Constant(1.25);
        let (u1, r1) = solve_fixed_point(&mesh, &model, &dirichlet, &config).unwrap();
        assert!(r1.converged);

        config.initial_guess = InitialGuess::Constant(5.0); // outside the range
        assert!(solve_fixed_point(&mesh, &model, &dirichlet, &config).is_err());

        config.initial_guess = InitialGuess::Given(u1.values().to_vec());
        let (_, r2) = solve_fixed_point(&mesh, &model, &dirichlet, &config).unwrap();
        assert!(r2.converged);
        assert!(r2.iterations_used <= 2);
    }
}
