//! Coefficient matrices A(z, x) for the divergence-form operator
//! -div[A(u, x) grad u], together with the admissible temperature range and
//! the sampled ellipticity certificate.
//!
//! The built-in radiative-diffusion (Rosseland) instance is
//! A(z, x) = K(x) + z^3 B(x). Matrix fields K, B may be constant, piecewise
//! constant per element (the canonical nonsmooth family), or an arbitrary
//! callable of x. Ellipticity is certified by dense sampling over a tensor
//! grid of admissible z values and element centroids; eigenvalue bounds for
//! 1x1 and 2x2 symmetric matrices are closed-form.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::assembly::AdmissibleField;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Default number of z samples for ellipticity certification.
pub const DEFAULT_Z_SAMPLES: usize = 64;

/// Closed admissible interval [t_min, t_max] for the scalar unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibleRange {
    t_min: f64,
    t_max: f64,
}

impl AdmissibleRange {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !t_min.is_finite() || !t_max.is_finite() || t_min > t_max {
            return Err(Error::InvalidArgument(format!(
                "admissible range requires finite t_min <= t_max, got [{t_min}, {t_max}]"
            )));
        }
        Ok(Self { t_min, t_max })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.t_min && v <= self.t_max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.t_min, self.t_max)
    }

    /// Distance of `v` outside the interval (0 when inside).
    pub fn violation(&self, v: f64) -> f64 {
        if v < self.t_min {
            self.t_min - v
        } else if v > self.t_max {
            v - self.t_max
        } else {
            0.0
        }
    }
}

/// Small dense matrix for coefficient values, 1x1 or 2x2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffMatrix {
    dim: usize,
    m: [[f64; 2]; 2],
}

impl CoeffMatrix {
    pub fn scalar(dim: usize, a: f64) -> Self {
        let mut m = [[0.0; 2]; 2];
        for d in 0..dim {
            m[d][d] = a;
        }
        Self { dim, m }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!(
                "coefficient matrices must be 1x1 or 2x2, got dim {dim}"
            )));
        }
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument(format!(
                "expected a {dim}x{dim} matrix, got {} rows",
                rows.len()
            )));
        }
        let mut m = [[0.0; 2]; 2];
        for (p, row) in rows.iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                m[p][q] = v;
            }
        }
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, p: usize, q: usize) -> f64 {
        self.m[p][q]
    }

    pub fn asymmetry(&self) -> f64 {
        if self.dim < 2 {
            0.0
        } else {
            (self.m[0][1] - self.m[1][0]).abs()
        }
    }

    /// Closed-form extreme eigenvalues (trace/determinant for 2x2).
    pub fn eig_bounds(&self) -> (f64, f64) {
        if self.dim == 1 {
            (self.m[0][0], self.m[0][0])
        } else {
            let a = self.m[0][0];
            let c = self.m[1][1];
            let b = 0.5 * (self.m[0][1] + self.m[1][0]);
            let mean = 0.5 * (a + c);
            let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            (mean - r, mean + r)
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for p in 0..self.dim {
            for q in 0..self.dim {
                out[p] += self.m[p][q] * v[q];
            }
        }
        out
    }

    pub fn add_scaled(&self, other: &CoeffMatrix, s: f64) -> Self {
        let mut out = *self;
        for p in 0..self.dim {
            for q in 0..self.dim {
                out.m[p][q] += s * other.m[p][q];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for p in 0..self.dim {
            for q in 0..self.dim {
                out.m[p][q] *= s;
            }
        }
        out
    }
}

/// Symmetric matrix field over the domain.
#[derive(Clone)]
pub enum MatrixField {
    Constant(CoeffMatrix),
    /// One matrix per mesh element (piecewise constant, nonsmooth in x).
    PerElement(Vec<CoeffMatrix>),
    Function(Arc<dyn Fn(&[f64]) -> CoeffMatrix + Send + Sync>),
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixField::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MatrixField::PerElement(v) => {
                f.debug_tuple("PerElement").field(&v.len()).finish()
            }
            MatrixField::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl MatrixField {
    pub fn constant_scalar(dim: usize, a: f64) -> Self {
        MatrixField::Constant(CoeffMatrix::scalar(dim, a))
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> CoeffMatrix + Send + Sync + 'static,
    {
        MatrixField::Function(Arc::new(f))
    }

    /// Evaluates the field at `x`; `element` selects the cell for
    /// piecewise-constant fields.
    pub fn eval(&self, x: &[f64], element: Option<usize>) -> Result<CoeffMatrix> {
        match self {
            MatrixField::Constant(m) => Ok(*m),
            MatrixField::PerElement(table) => {
                let e = element.ok_or_else(|| {
                    Error::InvalidArgument(
                        "piecewise-constant field evaluated without an element index".into(),
                    )
                })?;
                table.get(e).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "element {e} out of range for per-element field of length {}",
                        table.len()
                    ))
                })
            }
            MatrixField::Function(f) => Ok(f(x)),
        }
    }

    fn shifted(&self, eps: f64, dim: usize) -> Self {
        let shift = CoeffMatrix::identity(dim);
        match self {
            MatrixField::Constant(m) => MatrixField::Constant(m.add_scaled(&shift, eps)),
            MatrixField::PerElement(v) => {
                MatrixField::PerElement(v.iter().map(|m| m.add_scaled(&shift, eps)).collect())
            }
            MatrixField::Function(f) => {
                let f = Arc::clone(f);
                MatrixField::Function(Arc::new(move |x| f(x).add_scaled(&shift, eps)))
            }
        }
    }

    fn validate_symmetry(&self, what: &str) -> Result<()> {
        let check = |m: &CoeffMatrix, ctx: &str| -> Result<()> {
            if m.asymmetry() > 1e-14 {
                return Err(Error::ModelConstruction(format!(
                    "{what} is asymmetric {ctx}: |a01 - a10| = {:e}",
                    m.asymmetry()
                )));
            }
            Ok(())
        };
        match self {
            MatrixField::Constant(m) => check(m, "(constant)"),
            MatrixField::PerElement(v) => {
                for (e, m) in v.iter().enumerate() {
                    check(m, &format!("on element {e}"))?;
                }
                Ok(())
            }
            // callables are validated later at the certification samples
            MatrixField::Function(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HolderModulus {
    pub exponent: f64,
    pub constant: f64,
}

#[derive(Clone)]
enum ModelKind {
    /// z-independent coefficient A(z, x) = K(x).
    Linear { k: MatrixField },
    /// A(z, x) = K(x) + z^3 B(x).
    Rosseland { k: MatrixField, b: MatrixField },
    Custom(Arc<dyn Fn(f64, &[f64], Option<usize>) -> Result<CoeffMatrix> + Send + Sync>),
}

/// Coefficient matrix A(z, x) with its admissible range and optional
/// declared continuity modulus in z. Evaluation must be pure; the model is
/// immutable and shareable across threads.
#[derive(Clone)]
pub struct CoefficientModel {
    dim: usize,
    kind: ModelKind,
    range: AdmissibleRange,
    holder: Option<HolderModulus>,
}

impl fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ModelKind::Linear { .. } => "linear",
            ModelKind::Rosseland { .. } => "rosseland",
            ModelKind::Custom(_) => "custom",
        };
        f.debug_struct("CoefficientModel")
            .field("dim", &self.dim)
            .field("kind", &kind)
            .field("range", &self.range)
            .finish()
    }
}

impl CoefficientModel {
    /// Radiative-diffusion coefficient K(x) + z^3 B(x).
    pub fn rosseland(
        dim: usize,
        k: MatrixField,
        b: MatrixField,
        range: AdmissibleRange,
    ) -> Result<Self> {
        k.validate_symmetry("K")?;
        b.validate_symmetry("B")?;
        Ok(Self {
            dim,
            kind: ModelKind::Rosseland { k, b },
            range,
            holder: None,
        })
    }

    /// z-independent coefficient A(z, x) = K(x).
    pub fn linear(dim: usize, k: MatrixField, range: AdmissibleRange) -> Result<Self> {
        k.validate_symmetry("K")?;
        Ok(Self {
            dim,
            kind: ModelKind::Linear { k },
            range,
            holder: None,
        })
    }

    pub fn custom<F>(dim: usize, range: AdmissibleRange, eval: F) -> Self
    where
        F: Fn(f64, &[f64], Option<usize>) -> Result<CoeffMatrix> + Send + Sync + 'static,
    {
        Self {
            dim,
            kind: ModelKind::Custom(Arc::new(eval)),
            range,
            holder: None,
        }
    }

    /// Declares a Hölder modulus |a_pq(z1,x) - a_pq(z2,x)| <= C |z1 - z2|^alpha.
    /// The modulus is caller-supplied metadata; it is checked by tests, not
    /// inferred.
    pub fn with_holder(mut self, exponent: f64, constant: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) || constant < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Hölder modulus requires exponent in (0,1] and constant >= 0, got ({exponent}, {constant})"
            )));
        }
        self.holder = Some(HolderModulus { exponent, constant });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> AdmissibleRange {
        self.range
    }

    pub fn holder(&self) -> Option<HolderModulus> {
        self.holder
    }

    pub fn eval(&self, z: f64, x: &[f64], element: Option<usize>) -> Result<CoeffMatrix> {
        match &self.kind {
            ModelKind::Linear { k } => k.eval(x, element),
            ModelKind::Rosseland { k, b } => {
                let km = k.eval(x, element)?;
                let bm = b.eval(x, element)?;
                Ok(km.add_scaled(&bm, z * z * z))
            }
            ModelKind::Custom(f) => f(z, x, element),
        }
    }

    /// The perturbed model A(z, x) + eps I with the same range and modulus.
    pub fn shifted(&self, eps: f64) -> Self {
        let kind = match &self.kind {
            ModelKind::Linear { k } => ModelKind::Linear {
                k: k.shifted(eps, self.dim),
            },
            ModelKind::Rosseland { k, b } => ModelKind::Rosseland {
                k: k.shifted(eps, self.dim),
                b: b.clone(),
            },
            ModelKind::Custom(f) => {
                let f = Arc::clone(f);
                let dim = self.dim;
                ModelKind::Custom(Arc::new(move |z, x, e| {
                    Ok(f(z, x, e)?.add_scaled(&CoeffMatrix::identity(dim), eps))
                }))
            }
        };
        Self {
            dim: self.dim,
            kind,
            range: self.range,
            holder: self.holder,
        }
    }
}

/// Sampled eigenvalue envelope of A(z, x) over the admissibility grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EllipticityCertificate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub samples_z: usize,
    pub samples_x: usize,
}

/// Scans eigenvalues of A(z, x) over a tensor grid of `z_samples` admissible
/// values times element centroids (at most `x_samples` of them) and returns
/// the certified bounds. Fails with the offending sample if any matrix is
/// not positive definite.
pub fn certify_ellipticity(
    model: &CoefficientModel,
    mesh: &Mesh,
    z_samples: usize,
    x_samples: usize,
) -> Result<EllipticityCertificate> {
    if z_samples < 2 || x_samples < 1 {
        return Err(Error::InvalidArgument(format!(
            "certification requires z_samples >= 2 and x_samples >= 1, got ({z_samples}, {x_samples})"
        )));
    }
    if mesh.dim() != model.dim() {
        return Err(Error::InvalidArgument(format!(
            "mesh dimension {} does not match model dimension {}",
            mesh.dim(),
            model.dim()
        )));
    }
    let range = model.range();
    let stride = mesh.n_elements().div_ceil(x_samples);
    let centroids: Vec<(usize, [f64; 2])> = (0..mesh.n_elements())
        .step_by(stride.max(1))
        .map(|e| (e, mesh.element_centroid(e)))
        .collect();

    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    for iz in 0..z_samples {
        let t = iz as f64 / (z_samples - 1) as f64;
        let z = range.t_min() + t * (range.t_max() - range.t_min());
        for &(e, c) in &centroids {
            let x = &c[..mesh.dim()];
            let m = model.eval(z, x, Some(e))?;
            if m.asymmetry() > 1e-14 {
                return Err(Error::ModelConstruction(format!(
                    "coefficient asymmetric at z={z}, x={x:?}: |a01 - a10| = {:e}",
                    m.asymmetry()
                )));
            }
            let (lo, hi) = m.eig_bounds();
            if !lo.is_finite() || lo <= 0.0 {
                return Err(Error::EllipticityViolation {
                    z,
                    x: x.to_vec(),
                    eig_min: lo,
                });
            }
            lambda_min = lambda_min.min(lo);
            lambda_max = lambda_max.max(hi);
        }
    }
    Ok(EllipticityCertificate {
        lambda_min,
        lambda_max,
        samples_z: z_samples,
        samples_x: centroids.len(),
    })
}

/// Discrete L2 continuity modulus of the coefficient in its scalar
/// argument: the max over matrix entries of
/// ||a_pq(z1(x), x) - a_pq(z2(x), x)||_2, by centroid quadrature with the
/// vertex-averaged field value per element.
pub fn continuity_modulus(
    model: &CoefficientModel,
    z1: &AdmissibleField,
    z2: &AdmissibleField,
    mesh: &Mesh,
) -> Result<f64> {
    if z1.len() != mesh.n_nodes() || z2.len() != mesh.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field lengths ({}, {}) do not match mesh nodes ({})",
            z1.len(),
            z2.len(),
            mesh.n_nodes()
        )));
    }
    let range = model.range();
    for field in [z1, z2] {
        for (node, &v) in field.values().iter().enumerate() {
            if !range.contains(v) {
                return Err(Error::RangeViolation {
                    node,
                    value: v,
                    t_min: range.t_min(),
                    t_max: range.t_max(),
                });
            }
        }
    }
    let dim = mesh.dim();
    let mut sums = [[0.0_f64; 2]; 2];
    for e in 0..mesh.n_elements() {
        let verts = mesh.element(e);
        let mean = |f: &AdmissibleField| {
            verts.iter().map(|&v| f.values()[v]).sum::<f64>() / verts.len() as f64
        };
        let c = mesh.element_centroid(e);
        let x = &c[..dim];
        let m1 = model.eval(mean(z1), x, Some(e))?;
        let m2 = model.eval(mean(z2), x, Some(e))?;
        let w = mesh.element_measure(e);
        for p in 0..dim {
            for q in 0..dim {
                let d = m1.entry(p, q) - m2.entry(p, q);
                sums[p][q] += w * d * d;
            }
        }
    }
    let mut modulus: f64 = 0.0;
    for p in 0..dim {
        for q in 0..dim {
            modulus = modulus.max(sums[p][q].sqrt());
        }
    }
    Ok(modulus)
}

/// Upper bound for the continuity modulus implied by a declared Hölder
/// modulus: C ||z1 - z2||_2^alpha |Omega|^((1 - alpha)/2).
pub fn holder_bound(model: &CoefficientModel, l2_distance: f64, domain_measure: f64) -> Option<f64> {
    model.holder().map(|h| {
        let alpha = h.exponent.min(1.0);
        h.constant * l2_distance.powf(alpha) * domain_measure.powf(0.5 * (1.0 - alpha))
    })
}
