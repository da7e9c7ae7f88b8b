//! Galerkin assembly for the frozen-coefficient weak form
//! int_Omega A(z(x), x) grad w . grad phi = 0 with P1 elements.
//!
//! The stiffness matrix uses one-point centroid quadrature with the field
//! value averaged over the element vertices; the average of admissible
//! nodal values stays admissible, so the frozen coefficient is always
//! evaluated inside the certified range. Dirichlet conditions are imposed
//! by row/column elimination into the right-hand side, which keeps the
//! reduced system symmetric positive definite.
//!
//! Field norms (L2, H1 seminorm) are exact for P1 functions.

use crate::coefficient::{AdmissibleRange, CoefficientModel};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

/// Nodal scalar field constrained to an admissible range: the discrete
/// member of the closed convex set of bounded fields.
#[derive(Debug, Clone)]
pub struct AdmissibleField {
    values: Vec<f64>,
    range: AdmissibleRange,
}

impl AdmissibleField {
    /// Validates that every nodal value lies in `range`.
    pub fn new(values: Vec<f64>, range: AdmissibleRange) -> Result<Self> {
        for (node, &v) in values.iter().enumerate() {
            if !range.contains(v) {
                return Err(Error::RangeViolation {
                    node,
                    value: v,
                    t_min: range.t_min(),
                    t_max: range.t_max(),
                });
            }
        }
        Ok(Self { values, range })
    }

    /// Clamps the values into `range`, returning the field and the largest
    /// distance any input value sat outside the range.
    pub fn clamped(values: Vec<f64>, range: AdmissibleRange) -> (Self, f64) {
        let mut violation: f64 = 0.0;
        let clamped: Vec<f64> = values
            .into_iter()
            .map(|v| {
                violation = violation.max(range.violation(v));
                range.clamp(v)
            })
            .collect();
        (
            Self {
                values: clamped,
                range,
            },
            violation,
        )
    }

    pub fn constant(n_nodes: usize, value: f64, range: AdmissibleRange) -> Result<Self> {
        Self::new(vec![value; n_nodes], range)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn range(&self) -> AdmissibleRange {
        self.range
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Dirichlet boundary data as a nodal lifting: boundary nodes carry the
/// trace, interior nodes the H1 extension (zero by default).
#[derive(Debug, Clone)]
pub struct DirichletData {
    nodal: Vec<f64>,
}

impl DirichletData {
    /// Interpolates `trace` at the boundary nodes, zero extension inside.
    pub fn from_trace_fn<F: Fn(&[f64]) -> f64>(mesh: &Mesh, trace: F) -> Self {
        let mut nodal = vec![0.0; mesh.n_nodes()];
        for &b in mesh.boundary_nodes() {
            nodal[b] = trace(mesh.node(b));
        }
        Self { nodal }
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Self::from_trace_fn(mesh, |_| value)
    }

    /// Boundary values listed in the order of `mesh.boundary_nodes()`.
    pub fn from_boundary_values(mesh: &Mesh, values: &[f64]) -> Result<Self> {
        if values.len() != mesh.boundary_nodes().len() {
            return Err(Error::InvalidArgument(format!(
                "{} boundary values for {} boundary nodes",
                values.len(),
                mesh.boundary_nodes().len()
            )));
        }
        let mut nodal = vec![0.0; mesh.n_nodes()];
        for (&b, &v) in mesh.boundary_nodes().iter().zip(values) {
            nodal[b] = v;
        }
        Ok(Self { nodal })
    }

    /// The nodal lifting vector (trace on the boundary, extension inside).
    pub fn nodal(&self) -> &[f64] {
        &self.nodal
    }

    /// Checks that the boundary trace stays within the admissible range.
    pub fn validate_range(&self, mesh: &Mesh, range: AdmissibleRange) -> Result<()> {
        for &b in mesh.boundary_nodes() {
            if !range.contains(self.nodal[b]) {
                return Err(Error::RangeViolation {
                    node: b,
                    value: self.nodal[b],
                    t_min: range.t_min(),
                    t_max: range.t_max(),
                });
            }
        }
        Ok(())
    }

    /// Min and max of the trace over boundary nodes.
    pub fn trace_min_max(&self, mesh: &Mesh) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &b in mesh.boundary_nodes() {
            lo = lo.min(self.nodal[b]);
            hi = hi.max(self.nodal[b]);
        }
        (lo, hi)
    }

    /// The perturbed data u_b + eps g.
    pub fn perturbed(&self, eps: f64, profile: &DirichletData) -> Result<DirichletData> {
        if profile.nodal.len() != self.nodal.len() {
            return Err(Error::InvalidArgument(
                "perturbation profile lives on a different mesh".into(),
            ));
        }
        Ok(DirichletData {
            nodal: self
                .nodal
                .iter()
                .zip(&profile.nodal)
                .map(|(&u, &g)| u + eps * g)
                .collect(),
        })
    }
}

/// Assembles the frozen-coefficient stiffness matrix over all nodes
/// (boundary rows included). Entries use one-point centroid quadrature:
/// S_ij = sum_E |E| (A(z_E, x_E) grad phi_i) . grad phi_j with z_E the
/// vertex average of `z` on E. Rows sum to zero up to rounding.
pub fn assemble_stiffness(
    mesh: &Mesh,
    model: &CoefficientModel,
    z: &AdmissibleField,
) -> Result<CsrMatrix> {
    if z.len() != mesh.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field length {} does not match mesh nodes {}",
            z.len(),
            mesh.n_nodes()
        )));
    }
    if model.dim() != mesh.dim() {
        return Err(Error::InvalidArgument(format!(
            "model dimension {} does not match mesh dimension {}",
            model.dim(),
            mesh.dim()
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
    let verts_per_elem = dim + 1;
    let mut triplets = Vec::with_capacity(mesh.n_elements() * verts_per_elem * verts_per_elem);
    for e in 0..mesh.n_elements() {
        let verts = mesh.element(e);
        let (grads, measure) = mesh.element_gradients(e)?;
        let z_c =
            verts.iter().map(|&v| z.values()[v]).sum::<f64>() / verts_per_elem as f64;
        let centroid = mesh.element_centroid(e);
        let a = model.eval(z_c, &centroid[..dim], Some(e))?;
        for i in 0..verts_per_elem {
            let agi = a.apply({
                let mut g = [0.0; 2];
                g[..dim].copy_from_slice(grads.vertex(i));
                g
            });
            for j in i..verts_per_elem {
                let gj = grads.vertex(j);
                let mut val = 0.0;
                for d in 0..dim {
                    val += agi[d] * gj[d];
                }
                val *= measure;
                triplets.push((verts[i], verts[j], val));
                if j != i {
                    // mirror for exact symmetry
                    triplets.push((verts[j], verts[i], val));
                }
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &triplets)
}

/// Stiffness system restricted to interior nodes, with the Dirichlet data
/// moved to the right-hand side.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Original node index of each reduced unknown, ascending.
    pub interior: Vec<usize>,
    n_nodes: usize,
}

impl ReducedSystem {
    /// Re-attaches boundary values to a reduced solution vector.
    pub fn expand(&self, v: &[f64], dirichlet: &DirichletData) -> Vec<f64> {
        let mut full = dirichlet.nodal().to_vec();
        debug_assert_eq!(full.len(), self.n_nodes);
        for (&node, &val) in self.interior.iter().zip(v) {
            full[node] = val;
        }
        full
    }
}

/// Eliminates Dirichlet rows and columns: the reduced system couples only
/// interior nodes and rhs_i = -sum_{j on boundary} S_ij u_b(j). An
/// interior-free mesh yields an empty system.
pub fn apply_dirichlet(
    s: &CsrMatrix,
    dirichlet: &DirichletData,
    mesh: &Mesh,
) -> Result<ReducedSystem> {
    let n = mesh.n_nodes();
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "stiffness is {}x{} but mesh has {n} nodes",
            s.nrows(),
            s.ncols()
        )));
    }
    if dirichlet.nodal().len() != n {
        return Err(Error::InvalidArgument(
            "Dirichlet data lives on a different mesh".into(),
        ));
    }
    let interior = mesh.interior_nodes();
    let mut reduced_index = vec![usize::MAX; n];
    for (ri, &node) in interior.iter().enumerate() {
        reduced_index[node] = ri;
    }
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; interior.len()];
    for (ri, &node) in interior.iter().enumerate() {
        let (cols, vals) = s.row(node);
        for (&j, &v) in cols.iter().zip(vals) {
            if mesh.is_boundary(j) {
                rhs[ri] -= v * dirichlet.nodal()[j];
            } else {
                triplets.push((ri, reduced_index[j], v));
            }
        }
    }
    Ok(ReducedSystem {
        matrix: CsrMatrix::from_triplets(interior.len(), interior.len(), &triplets)?,
        rhs,
        interior,
        n_nodes: n,
    })
}

fn check_field(mesh: &Mesh, values: &[f64]) -> Result<()> {
    if values.len() != mesh.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field length {} does not match mesh nodes {}",
            values.len(),
            mesh.n_nodes()
        )));
    }
    Ok(())
}

/// L2 norm of the P1 field, exact per-element mass integration.
pub fn l2_norm(mesh: &Mesh, values: &[f64]) -> Result<f64> {
    check_field(mesh, values)?;
    let mut acc = 0.0;
    for e in 0..mesh.n_elements() {
        let verts = mesh.element(e);
        let m = mesh.element_measure(e);
        match mesh.dim() {
            1 => {
                let (f0, f1) = (values[verts[0]], values[verts[1]]);
                acc += m / 3.0 * (f0 * f0 + f0 * f1 + f1 * f1);
            }
            _ => {
                let (f0, f1, f2) = (values[verts[0]], values[verts[1]], values[verts[2]]);
                acc += m / 6.0
                    * (f0 * f0 + f1 * f1 + f2 * f2 + f0 * f1 + f1 * f2 + f0 * f2);
            }
        }
    }
    Ok(acc.sqrt())
}

/// H1 seminorm of the P1 field: piecewise-constant gradients integrated
/// exactly.
pub fn h1_seminorm(mesh: &Mesh, values: &[f64]) -> Result<f64> {
    check_field(mesh, values)?;
    let mut acc = 0.0;
    for e in 0..mesh.n_elements() {
        let verts = mesh.element(e);
        let (grads, measure) = mesh.element_gradients(e)?;
        let vv: Vec<f64> = verts.iter().map(|&v| values[v]).collect();
        let g = grads.field_gradient(&vv);
        acc += measure * (g[0] * g[0] + g[1] * g[1]);
    }
    Ok(acc.sqrt())
}

/// Full H1 norm sqrt(||f||_2^2 + |f|_1^2).
pub fn h1_norm(mesh: &Mesh, values: &[f64]) -> Result<f64> {
    let l2 = l2_norm(mesh, values)?;
    let semi = h1_seminorm(mesh, values)?;
    Ok((l2 * l2 + semi * semi).sqrt())
}

/// L2 norm of the difference of two nodal fields.
pub fn l2_distance(mesh: &Mesh, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(
            "fields have different lengths".into(),
        ));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_norm(mesh, &diff)
}

/// H1 norm of the difference of two nodal fields.
pub fn h1_distance(mesh: &Mesh, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(
            "fields have different lengths".into(),
        ));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    h1_norm(mesh, &diff)
}
