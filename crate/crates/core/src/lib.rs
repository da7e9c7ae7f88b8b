//! Finite-element library for divergence-form nonlinear elliptic equations
//! -div[A(u(x), x) grad u] = 0 with Dirichlet data, where the coefficient
//! matrix A(z, x) is elliptic only for z inside an admissible interval
//! [T_min, T_max] (radiative diffusion A = K(x) + z^3 B(x) being the
//! canonical instance).
//!
//! The solver freezes the coefficient at an admissible field, solves the
//! resulting linear problem with P1 elements, projects back into the
//! admissible set, and iterates this map to a fixed point. The crate ships
//! the verification machinery for that construction: sampled ellipticity
//! certificates, discrete maximum-principle monitoring, an exact-solution
//! oracle via the Kirchhoff transform, convergence studies, and
//! continuous-dependence experiments for coefficient and boundary
//! perturbations.
//!
//! Modules:
//! - [`mesh`]: simplicial meshes of intervals and rectangles, P1 gradients,
//!   VTK export
//! - [`coefficient`]: coefficient models, admissible range, ellipticity
//!   certification, continuity modulus
//! - [`sparse`]: CSR matrices, conjugate gradients, MatrixMarket export
//! - [`assembly`]: stiffness assembly, Dirichlet elimination, P1 field norms
//! - [`picard`]: the frozen-coefficient map and its damped fixed-point
//!   iteration
//! - [`verification`]: Kirchhoff oracle, convergence studies, dependence
//!   experiments, flux functional
//! - [`config`] / [`runner`]: declarative TOML runs behind the CLI

pub mod assembly;
pub mod coefficient;
pub mod config;
pub mod error;
pub mod mesh;
pub mod picard;
pub mod runner;
pub mod sparse;
pub mod verification;

pub use assembly::{AdmissibleField, DirichletData};
pub use coefficient::{AdmissibleRange, CoefficientModel, EllipticityCertificate};
pub use error::{Error, Result};
pub use mesh::Mesh;
pub use picard::{PicardConfig, PicardReport};
pub use sparse::{CgReport, CsrMatrix};
pub use verification::KirchhoffOracle;
