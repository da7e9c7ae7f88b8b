//! Declarative run configuration: one TOML file describes the problem
//! (domain, coefficient model, admissible range, boundary data), the
//! fixed-point solver parameters, an optional experiment, and output
//! options. The same file drives `solve`, `validate` and `experiment`, so
//! every run is reproducible from a single artifact.
//!
//! ```toml
//! [problem]
//! domain = "unit_interval"
//! n = 64
//!
//! [problem.range]
//! t_min = 1.0
//! t_max = 2.0
//!
//! [problem.model]
//! type = "rosseland"    # or "linear", "piecewise"
//! k = 1.0               # scalar, or a dim x dim matrix [[..], [..]]
//! b = 1.0
//!
//! [problem.boundary]
//! type = "endpoints"    # or "constant", "affine"
//! left = 1.0
//! right = 2.0
//!
//! [solver]
//! tol_l2 = 1e-10
//! max_iterations = 50
//! damping = 1.0
//!
//! [experiment]
//! kind = "convergence"  # "coeff-dependence" | "boundary-dependence" | "flux"
//! levels = [8, 16, 32, 64, 128]
//!
//! [output]
//! directory = "out"
//! formats = ["csv", "json", "vtk"]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::DirichletData;
use crate::coefficient::{AdmissibleRange, CoeffMatrix, CoefficientModel, MatrixField};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::picard::{ClampPolicy, InitialGuess, PicardConfig};
use crate::verification::KirchhoffOracle;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainKind,
    /// Elements per direction.
    pub n: usize,
    pub range: RangeConfig,
    pub model: ModelConfig,
    pub boundary: BoundaryConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    UnitInterval,
    UnitSquare,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub t_min: f64,
    pub t_max: f64,
}

/// Constant matrices may be written as a bare scalar (meaning scalar * I)
/// or as nested rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl MatrixSpec {
    fn build(&self, dim: usize) -> Result<MatrixField> {
        match self {
            MatrixSpec::Scalar(v) => Ok(MatrixField::constant_scalar(dim, *v)),
            MatrixSpec::Matrix(rows) => {
                Ok(MatrixField::Constant(CoeffMatrix::from_rows(dim, rows)?))
            }
        }
    }

    fn as_scalar(&self) -> Option<f64> {
        match self {
            MatrixSpec::Scalar(v) => Some(*v),
            MatrixSpec::Matrix(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// A(z, x) = K + z^3 B with constant matrices.
    Rosseland { k: MatrixSpec, b: MatrixSpec },
    /// z-independent A(z, x) = K.
    Linear { k: MatrixSpec },
    /// Piecewise-constant scalar tables per element:
    /// A(z, x)|_E = (k_cells[E] + z^3 b_cells[E]) I.
    Piecewise {
        k_cells: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b_cells: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Constant { value: f64 },
    /// Trace ramps from `left` at x=0 to `right` at x=1 (affine in x).
    Endpoints { left: f64, right: f64 },
    /// Trace c0 + c1 x (+ c2 y in 2D).
    Affine { coeffs: Vec<f64> },
}

impl BoundaryConfig {
    /// The trace as a coordinate function.
    pub fn trace(&self, dim: usize) -> Result<impl Fn(&[f64]) -> f64 + '_> {
        let coeffs: [f64; 3] = match self {
            BoundaryConfig::Constant { value } => [*value, 0.0, 0.0],
            BoundaryConfig::Endpoints { left, right } => [*left, right - left, 0.0],
            BoundaryConfig::Affine { coeffs } => {
                if coeffs.is_empty() || coeffs.len() > dim + 1 {
                    return Err(Error::Config(format!(
                        "boundary.coeffs needs 1..={} entries in {dim}D, got {}",
                        dim + 1,
                        coeffs.len()
                    )));
                }
                let mut c = [0.0; 3];
                c[..coeffs.len()].copy_from_slice(coeffs);
                c
            }
        };
        Ok(move |x: &[f64]| {
            let y = if x.len() > 1 { x[1] } else { 0.0 };
            coeffs[0] + coeffs[1] * x[0] + coeffs[2] * y
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol_l2: f64,
    pub max_iterations: usize,
    pub damping: f64,
    pub clamp_policy: ClampPolicyConfig,
    /// Violation tolerance under the reject policy.
    pub reject_tol: f64,
    pub initial_guess: InitialGuessConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_l2: 1e-10,
            max_iterations: 50,
            damping: 1.0,
            clamp_policy: ClampPolicyConfig::Clamp,
            reject_tol: 1e-8,
            initial_guess: InitialGuessConfig::Keyword("boundary".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicyConfig {
    Clamp,
    Reject,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialGuessConfig {
    /// `"boundary"`: clamped zero-interior extension of the boundary data.
    Keyword(String),
    /// `{ constant = 1.5 }`
    Constant { constant: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ExperimentConfig {
    #[serde(rename = "convergence")]
    Convergence { levels: Vec<usize> },
    #[serde(rename = "coeff-dependence")]
    CoeffDependence { epsilons: Vec<f64> },
    #[serde(rename = "boundary-dependence")]
    BoundaryDependence {
        epsilons: Vec<f64>,
        profile: BoundaryConfig,
    },
    #[serde(rename = "flux")]
    Flux,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn dim(&self) -> usize {
        match self.problem.domain {
            DomainKind::UnitInterval => 1,
            DomainKind::UnitSquare => 2,
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        self.build_mesh_with(self.problem.n)
    }

    pub fn build_mesh_with(&self, n: usize) -> Result<Mesh> {
        match self.problem.domain {
            DomainKind::UnitInterval => Mesh::unit_interval(n),
            DomainKind::UnitSquare => Mesh::unit_square(n),
        }
    }

    pub fn build_range(&self) -> Result<AdmissibleRange> {
        AdmissibleRange::new(self.problem.range.t_min, self.problem.range.t_max)
    }

    /// Builds the coefficient model; piecewise tables are checked against
    /// the mesh element count.
    pub fn build_model(&self, mesh: &Mesh) -> Result<CoefficientModel> {
        let dim = self.dim();
        let range = self.build_range()?;
        match &self.problem.model {
            ModelConfig::Rosseland { k, b } => {
                CoefficientModel::rosseland(dim, k.build(dim)?, b.build(dim)?, range)
            }
            ModelConfig::Linear { k } => CoefficientModel::linear(dim, k.build(dim)?, range),
            ModelConfig::Piecewise { k_cells, b_cells } => {
                let check_len = |name: &str, len: usize| {
                    if len != mesh.n_elements() {
                        Err(Error::Config(format!(
                            "model.{name} has {len} entries for {} elements",
                            mesh.n_elements()
                        )))
                    } else {
                        Ok(())
                    }
                };
                check_len("k_cells", k_cells.len())?;
                let k = MatrixField::PerElement(
                    k_cells.iter().map(|&v| CoeffMatrix::scalar(dim, v)).collect(),
                );
                match b_cells {
                    Some(cells) => {
                        check_len("b_cells", cells.len())?;
                        let b = MatrixField::PerElement(
                            cells.iter().map(|&v| CoeffMatrix::scalar(dim, v)).collect(),
                        );
                        CoefficientModel::rosseland(dim, k, b, range)
                    }
                    None => CoefficientModel::linear(dim, k, range),
                }
            }
        }
    }

    pub fn build_dirichlet(&self, mesh: &Mesh) -> Result<DirichletData> {
        let trace = self.problem.boundary.trace(self.dim())?;
        Ok(DirichletData::from_trace_fn(mesh, trace))
    }

    pub fn build_picard(&self) -> Result<PicardConfig> {
        let s = &self.solver;
        let clamp_policy = match s.clamp_policy {
            ClampPolicyConfig::Clamp => ClampPolicy::Clamp,
            ClampPolicyConfig::Reject => ClampPolicy::Reject { tol: s.reject_tol },
        };
        let initial_guess = match &s.initial_guess {
            InitialGuessConfig::Keyword(word) if word == "boundary" => {
                InitialGuess::BoundaryExtension
            }
            InitialGuessConfig::Keyword(word) => {
                return Err(Error::Config(format!(
                    "solver.initial_guess: unknown keyword '{word}' (expected \"boundary\" or {{ constant = <value> }})"
                )))
            }
            InitialGuessConfig::Constant { constant } => InitialGuess::Constant(*constant),
        };
        let config = PicardConfig {
            tol_l2: s.tol_l2,
            max_iterations: s.max_iterations,
            damping: s.damping,
            clamp_policy,
            initial_guess,
        };
        config.validate()?;
        Ok(config)
    }

    /// The exact-solution oracle for convergence experiments; requires a
    /// scalar rosseland/linear model and endpoint boundary data.
    pub fn build_oracle(&self) -> Result<KirchhoffOracle> {
        let range = self.build_range()?;
        let (k, b) = match &self.problem.model {
            ModelConfig::Rosseland { k, b } => {
                match (k.as_scalar(), b.as_scalar()) {
                    (Some(k), Some(b)) => (k, b),
                    _ => {
                        return Err(Error::Config(
                            "convergence experiments need scalar k and b".into(),
                        ))
                    }
                }
            }
            ModelConfig::Linear { k } => match k.as_scalar() {
                Some(k) => (k, 0.0),
                None => {
                    return Err(Error::Config(
                        "convergence experiments need a scalar k".into(),
                    ))
                }
            },
            ModelConfig::Piecewise { .. } => {
                return Err(Error::Config(
                    "convergence experiments need a spatially constant model".into(),
                ))
            }
        };
        let (left, right) = match &self.problem.boundary {
            BoundaryConfig::Endpoints { left, right } => (*left, *right),
            BoundaryConfig::Constant { value } => (*value, *value),
            BoundaryConfig::Affine { .. } => {
                return Err(Error::Config(
                    "convergence experiments need endpoint or constant boundary data".into(),
                ))
            }
        };
        KirchhoffOracle::from_boundary_temps(k, b, range, left, right)
    }

    pub fn wants_format(&self, fmt: &str) -> bool {
        self.output.formats.iter().any(|f| f == fmt)
    }
}
