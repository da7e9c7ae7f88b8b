//! Desk-scale verification machinery: an exact-solution oracle built on the
//! Kirchhoff transform, mesh-refinement convergence studies, continuous
//! dependence experiments for coefficient and boundary perturbations, and
//! the flux functional with its Lipschitz-dual bound.
//!
//! For a scalar coefficient a(z) = k + b z^3 the primitive
//! G(z) = k z + b z^4 / 4 turns the nonlinear equation into Laplace's
//! equation: u solves -div[a(u) grad u] = 0 exactly when G(u) is harmonic.
//! Choosing an affine G(u) = w*(x) and inverting by bisection yields exact
//! reference solutions without any discretization, which is the only
//! independent oracle this problem class admits.

use std::io::Write;

use serde::Serialize;

use crate::assembly::{h1_distance, l2_distance, AdmissibleField, DirichletData};
use crate::coefficient::{
    certify_ellipticity, AdmissibleRange, CoefficientModel, MatrixField, DEFAULT_Z_SAMPLES,
};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::picard::{solve_fixed_point, PicardConfig};

/// Exact solution oracle for the scalar coefficient a(z) = k + b z^3 with an
/// affine harmonic target w*(x) = c0 + c1 x + c2 y.
#[derive(Debug, Clone, Copy)]
pub struct KirchhoffOracle {
    k: f64,
    b: f64,
    range: AdmissibleRange,
    w_coeffs: [f64; 3],
}

impl KirchhoffOracle {
    pub fn new(k: f64, b: f64, range: AdmissibleRange, w_coeffs: [f64; 3]) -> Result<Self> {
        if !(k > 0.0) || b < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "oracle requires k > 0 and b >= 0, got k={k}, b={b}"
            )));
        }
        let oracle = Self {
            k,
            b,
            range,
            w_coeffs,
        };
        if oracle.coefficient(range.t_min()) <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "coefficient not positive at t_min={}",
                range.t_min()
            )));
        }
        Ok(oracle)
    }

    /// Oracle whose exact solution ramps from `z_left` at x=0 to `z_right`
    /// at x=1 (w* affine in x only; works on intervals and squares).
    pub fn from_boundary_temps(
        k: f64,
        b: f64,
        range: AdmissibleRange,
        z_left: f64,
        z_right: f64,
    ) -> Result<Self> {
        for z in [z_left, z_right] {
            if !range.contains(z) {
                return Err(Error::InvalidArgument(format!(
                    "boundary temperature {z} outside admissible range"
                )));
            }
        }
        let probe = Self::new(k, b, range, [0.0; 3])?;
        let w0 = probe.primitive(z_left);
        let w1 = probe.primitive(z_right);
        Self::new(k, b, range, [w0, w1 - w0, 0.0])
    }

    /// The scalar coefficient a(z) = k + b z^3.
    pub fn coefficient(&self, z: f64) -> f64 {
        self.k + self.b * z * z * z
    }

    /// The Kirchhoff primitive G(z) = k z + b z^4 / 4.
    pub fn primitive(&self, z: f64) -> f64 {
        self.k * z + 0.25 * self.b * z * z * z * z
    }

    pub fn w_star(&self, x: &[f64]) -> f64 {
        let y = if x.len() > 1 { x[1] } else { 0.0 };
        self.w_coeffs[0] + self.w_coeffs[1] * x[0] + self.w_coeffs[2] * y
    }

    pub fn range(&self) -> AdmissibleRange {
        self.range
    }

    /// The exact solution at `x`: the unique admissible root of
    /// G(z) = w*(x), found by bisection (G is strictly increasing since
    /// a > 0 on the range).
    pub fn exact(&self, x: &[f64]) -> Result<f64> {
        let target = self.w_star(x);
        let mut lo = self.range.t_min();
        let mut hi = self.range.t_max();
        let (glo, ghi) = (self.primitive(lo), self.primitive(hi));
        let slack = 1e-12 * (1.0 + ghi.abs().max(glo.abs()));
        if target < glo - slack || target > ghi + slack {
            return Err(Error::OracleDomain {
                target,
                lo: glo,
                hi: ghi,
            });
        }
        for _ in 0..200 {
            if hi - lo <= 1e-15 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.primitive(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Exact gradient of the solution: grad u = grad w* / a(u(x)).
    pub fn exact_gradient(&self, x: &[f64]) -> Result<[f64; 2]> {
        let u = self.exact(x)?;
        let a = self.coefficient(u);
        Ok([self.w_coeffs[1] / a, self.w_coeffs[2] / a])
    }

    /// The coefficient model K = k I, B = b I matching the oracle.
    pub fn coefficient_model(&self, dim: usize) -> Result<CoefficientModel> {
        CoefficientModel::rosseland(
            dim,
            MatrixField::constant_scalar(dim, self.k),
            MatrixField::constant_scalar(dim, self.b),
            self.range,
        )
    }

    /// Dirichlet data sampling the exact solution on the boundary.
    pub fn dirichlet(&self, mesh: &Mesh) -> Result<DirichletData> {
        let values: Result<Vec<f64>> = mesh
            .boundary_nodes()
            .iter()
            .map(|&b| self.exact(mesh.node(b)))
            .collect();
        DirichletData::from_boundary_values(mesh, &values?)
    }

    /// Max residual |G(z(x)) - w*(x)| of the inverted solution over the
    /// mesh nodes; the oracle's own consistency check.
    pub fn self_check(&self, mesh: &Mesh) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..mesh.n_nodes() {
            let x = mesh.node(i);
            let z = self.exact(x)?;
            worst = worst.max((self.primitive(z) - self.w_star(x)).abs());
        }
        Ok(worst)
    }
}

/// L2 and H1-seminorm errors of a P1 field against the oracle, integrated
/// with per-element Gauss quadrature (2 points on segments, 3 on triangles)
/// so the H1 rate of the true error is visible rather than the
/// superconvergent nodal difference.
pub fn oracle_error_norms(
    mesh: &Mesh,
    values: &[f64],
    oracle: &KirchhoffOracle,
) -> Result<(f64, f64)> {
    if values.len() != mesh.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field length {} does not match mesh nodes {}",
            values.len(),
            mesh.n_nodes()
        )));
    }
    let mut l2_sq = 0.0;
    let mut h1_sq = 0.0;
    for e in 0..mesh.n_elements() {
        let verts = mesh.element(e);
        let (grads, measure) = mesh.element_gradients(e)?;
        let vv: Vec<f64> = verts.iter().map(|&v| values[v]).collect();
        let gh = grads.field_gradient(&vv);

        // barycentric quadrature points and weights
        let points: Vec<(Vec<f64>, f64)> = if mesh.dim() == 1 {
            let s = 1.0 / 3.0_f64.sqrt();
            [0.5 * (1.0 - s), 0.5 * (1.0 + s)]
                .iter()
                .map(|&t| (vec![1.0 - t, t], 0.5 * measure))
                .collect()
        } else {
            [
                [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            ]
            .iter()
            .map(|bary| (bary.to_vec(), measure / 3.0))
            .collect()
        };

        for (bary, weight) in points {
            let mut x = [0.0; 2];
            let mut uh = 0.0;
            for (local, &lambda) in bary.iter().enumerate() {
                let p = mesh.node(verts[local]);
                for d in 0..mesh.dim() {
                    x[d] += lambda * p[d];
                }
                uh += lambda * vv[local];
            }
            let xs = &x[..mesh.dim()];
            let u = oracle.exact(xs)?;
            let gu = oracle.exact_gradient(xs)?;
            l2_sq += weight * (uh - u) * (uh - u);
            let dx = gh[0] - gu[0];
            let dy = gh[1] - gu[1];
            h1_sq += weight * (dx * dx + dy * dy);
        }
    }
    Ok((l2_sq.sqrt(), h1_sq.sqrt()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub l2_error: f64,
    pub h1_error: f64,
    pub l2_order: Option<f64>,
    pub h1_order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log least-squares slopes of the errors against h.
    pub l2_slope: Option<f64>,
    pub h1_slope: Option<f64>,
    /// False when some level failed to converge (rows hold the completed
    /// levels).
    pub completed: bool,
}

impl ConvergenceStudy {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "n,h,l2_error,h1_error,l2_order,h1_order")?;
        for row in &self.rows {
            let fmt_order =
                |o: Option<f64>| o.map(|v| format!("{v:.16e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{},{}",
                row.n,
                row.h,
                row.l2_error,
                row.h1_error,
                fmt_order(row.l2_order),
                fmt_order(row.h1_order)
            )?;
        }
        Ok(())
    }
}

/// Least-squares slope of ln(y) against ln(x) over positive pairs.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() <= f64::EPSILON * sxx.abs() {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Solves the benchmark on a refinement sequence and tabulates errors
/// against the oracle. A non-converging level aborts the study and returns
/// the partial table with `completed = false`.
pub fn convergence_study(
    oracle: &KirchhoffOracle,
    dim: usize,
    levels: &[usize],
    config: &PicardConfig,
) -> Result<ConvergenceStudy> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument(
            "convergence study needs at least one level".into(),
        ));
    }
    let mut study = ConvergenceStudy {
        rows: Vec::new(),
        l2_slope: None,
        h1_slope: None,
        completed: true,
    };
    for &n in levels {
        let mesh = match dim {
            1 => Mesh::unit_interval(n)?,
            2 => Mesh::unit_square(n)?,
            d => {
                return Err(Error::InvalidArgument(format!(
                    "convergence study supports dim 1 or 2, got {d}"
                )))
            }
        };
        let model = oracle.coefficient_model(dim)?;
        certify_ellipticity(&model, &mesh, DEFAULT_Z_SAMPLES, mesh.n_elements())?;
        let dirichlet = oracle.dirichlet(&mesh)?;
        let (u, report) = solve_fixed_point(&mesh, &model, &dirichlet, config)?;
        if !report.converged {
            study.completed = false;
            break;
        }
        let (l2_error, h1_error) = oracle_error_norms(&mesh, u.values(), oracle)?;
        let h = 1.0 / n as f64;
        let (l2_order, h1_order) = match study.rows.last() {
            Some(prev) => {
                let ratio = (prev.h / h).ln();
                let ord = |e_prev: f64, e: f64| {
                    if e > 0.0 && e_prev > 0.0 {
                        Some((e_prev / e).ln() / ratio)
                    } else {
                        None
                    }
                };
                (ord(prev.l2_error, l2_error), ord(prev.h1_error, h1_error))
            }
            None => (None, None),
        };
        study.rows.push(ConvergenceRow {
            n,
            h,
            l2_error,
            h1_error,
            l2_order,
            h1_order,
        });
    }
    let hs: Vec<f64> = study.rows.iter().map(|r| r.h).collect();
    let l2s: Vec<f64> = study.rows.iter().map(|r| r.l2_error).collect();
    let h1s: Vec<f64> = study.rows.iter().map(|r| r.h1_error).collect();
    study.l2_slope = loglog_slope(&hs, &l2s);
    study.h1_slope = loglog_slope(&hs, &h1s);
    Ok(study)
}

/// Perturbation sizes against solution distances, with the fitted log-log
/// slope and a strict-monotonicity flag.
#[derive(Debug, Clone, Serialize)]
pub struct DependenceReport {
    /// Perturbation sizes, sorted descending.
    pub epsilons: Vec<f64>,
    pub distances: Vec<f64>,
    pub slope: Option<f64>,
    /// Distances strictly decrease along decreasing epsilon.
    pub monotone: bool,
}

impl DependenceReport {
    fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let epsilons: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let distances: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let monotone = distances.windows(2).all(|w| w[1] < w[0]);
        let slope = loglog_slope(&epsilons, &distances);
        DependenceReport {
            epsilons,
            distances,
            slope,
            monotone,
        }
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "epsilon,distance")?;
        for (eps, dist) in self.epsilons.iter().zip(&self.distances) {
            writeln!(w, "{eps:.16e},{dist:.16e}")?;
        }
        Ok(())
    }
}

fn converged_solution(
    mesh: &Mesh,
    model: &CoefficientModel,
    dirichlet: &DirichletData,
    config: &PicardConfig,
    what: &str,
) -> Result<AdmissibleField> {
    let (u, report) = solve_fixed_point(mesh, model, dirichlet, config)?;
    if !report.converged {
        return Err(Error::Experiment(format!(
            "{what}: fixed-point iteration did not converge within {} iterations",
            report.iterations_used
        )));
    }
    Ok(u)
}

/// Measures ||u_eps - u_0||_2 for the shifted family A + eps I. Every
/// member is re-certified before its solve.
pub fn coefficient_dependence_experiment(
    mesh: &Mesh,
    model: &CoefficientModel,
    dirichlet: &DirichletData,
    epsilons: &[f64],
    config: &PicardConfig,
) -> Result<DependenceReport> {
    let u0 = converged_solution(mesh, model, dirichlet, config, "base model")?;
    let mut pairs = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let shifted = model.shifted(eps);
        certify_ellipticity(&shifted, mesh, DEFAULT_Z_SAMPLES, mesh.n_elements()).map_err(
            |e| Error::Experiment(format!("member eps={eps} failed certification: {e}")),
        )?;
        let u_eps = converged_solution(
            mesh,
            &shifted,
            dirichlet,
            config,
            &format!("member eps={eps}"),
        )?;
        pairs.push((eps, l2_distance(mesh, u_eps.values(), u0.values())?));
    }
    Ok(DependenceReport::from_pairs(pairs))
}

/// Measures ||u_eps - u_0||_2 for perturbed boundary data
/// u_b + eps g. Perturbed traces must stay admissible.
pub fn boundary_dependence_experiment(
    mesh: &Mesh,
    model: &CoefficientModel,
    base: &DirichletData,
    profile: &DirichletData,
    epsilons: &[f64],
    config: &PicardConfig,
) -> Result<DependenceReport> {
    let u0 = converged_solution(mesh, model, base, config, "base boundary data")?;
    let mut pairs = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let perturbed = base.perturbed(eps, profile)?;
        perturbed.validate_range(mesh, model.range()).map_err(|e| {
            Error::InvalidArgument(format!("perturbed trace at eps={eps} leaves the range: {e}"))
        })?;
        let u_eps = converged_solution(
            mesh,
            model,
            &perturbed,
            config,
            &format!("boundary member eps={eps}"),
        )?;
        pairs.push((eps, l2_distance(mesh, u_eps.values(), u0.values())?));
    }
    Ok(DependenceReport::from_pairs(pairs))
}

/// H1 distance of the frozen-coefficient map outputs under sup-norm
/// perturbations of the input field: the empirical H1-continuity check.
pub fn map_continuity_experiment(
    mesh: &Mesh,
    model: &CoefficientModel,
    dirichlet: &DirichletData,
    base: &AdmissibleField,
    profile: &[f64],
    deltas: &[f64],
) -> Result<DependenceReport> {
    if profile.len() != mesh.n_nodes() {
        return Err(Error::InvalidArgument(
            "perturbation profile lives on a different mesh".into(),
        ));
    }
    let range = model.range();
    let policy = crate::picard::ClampPolicy::Clamp;
    let w0 = crate::picard::linearized_map(mesh, model, dirichlet, base, policy)?;
    let mut pairs = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let values: Vec<f64> = base
            .values()
            .iter()
            .zip(profile)
            .map(|(&z, &p)| range.clamp(z + delta * p))
            .collect();
        let z_delta = AdmissibleField::new(values, range)?;
        let w_delta = crate::picard::linearized_map(mesh, model, dirichlet, &z_delta, policy)?;
        pairs.push((
            delta,
            h1_distance(mesh, w_delta.field.values(), w0.field.values())?,
        ));
    }
    Ok(DependenceReport::from_pairs(pairs))
}

/// The flux functional <A(z, x) grad z, eta> = int A(z) grad z . grad eta
/// by centroid quadrature; `eta` is a P1 test field.
pub fn flux_functional(
    mesh: &Mesh,
    model: &CoefficientModel,
    z: &AdmissibleField,
    eta: &[f64],
) -> Result<f64> {
    if z.len() != mesh.n_nodes() || eta.len() != mesh.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field lengths ({}, {}) do not match mesh nodes ({})",
            z.len(),
            eta.len(),
            mesh.n_nodes()
        )));
    }
    let range = model.range();
    for (node, &v) in z.values().iter().enumerate() {
        if !range.contains(v) {
            return Err(Error::RangeViolation {
                node,
                value: v,
                t_min: range.t_min(),
                t_max: range.t_max(),
            });
        }
    }
    let dim = mesh.dim();
    let mut acc = 0.0;
    for e in 0..mesh.n_elements() {
        let verts = mesh.element(e);
        let (grads, measure) = mesh.element_gradients(e)?;
        let zv: Vec<f64> = verts.iter().map(|&v| z.values()[v]).collect();
        let ev: Vec<f64> = verts.iter().map(|&v| eta[v]).collect();
        let gz = grads.field_gradient(&zv);
        let ge = grads.field_gradient(&ev);
        let z_c = zv.iter().sum::<f64>() / zv.len() as f64;
        let centroid = mesh.element_centroid(e);
        let a = model.eval(z_c, &centroid[..dim], Some(e))?;
        let agz = a.apply(gz);
        acc += measure * (agz[0] * ge[0] + agz[1] * ge[1]);
    }
    Ok(acc)
}
