//! C ABI for the solver core: opaque handles, integer status codes and a
//! thread-local error message. The matching declarations live in
//! `include/rosseland.h`, which is kept in sync by hand and exercised by a
//! compiled C smoke test.
//!
//! # Safety
//!
//! Handles returned by the `*_new_*` constructors own their Rust object and
//! must be released exactly once with the matching `*_free` function.
//! Pointer arguments must be valid for the documented lengths; all
//! functions tolerate NULL handles by failing with
//! `ROSSELAND_STATUS_NULL_POINTER` instead of crashing. Handles are not
//! synchronized; do not share one handle between threads without external
//! locking. Panics are caught at the boundary and reported as status codes.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rosseland::assembly::DirichletData;
use rosseland::coefficient::{
    certify_ellipticity, AdmissibleRange, CoeffMatrix, CoefficientModel, MatrixField,
};
use rosseland::picard::{solve_fixed_point, PicardConfig, PicardReport};
use rosseland::{Error, Mesh};

/// Status codes returned by every fallible entry point.
pub const ROSSELAND_STATUS_OK: c_int = 0;
pub const ROSSELAND_STATUS_INVALID_ARGUMENT: c_int = 1;
pub const ROSSELAND_STATUS_ELLIPTICITY: c_int = 2;
pub const ROSSELAND_STATUS_RANGE: c_int = 3;
pub const ROSSELAND_STATUS_SOLVER: c_int = 4;
pub const ROSSELAND_STATUS_NOT_CONVERGED: c_int = 5;
pub const ROSSELAND_STATUS_NULL_POINTER: c_int = 6;
pub const ROSSELAND_STATUS_PANIC: c_int = 7;
pub const ROSSELAND_STATUS_OTHER: c_int = 99;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> c_int {
    match err {
        Error::InvalidArgument(_)
        | Error::DegenerateElement { .. }
        | Error::ModelConstruction(_)
        | Error::OracleDomain { .. }
        | Error::Config(_) => ROSSELAND_STATUS_INVALID_ARGUMENT,
        Error::EllipticityViolation { .. } => ROSSELAND_STATUS_ELLIPTICITY,
        Error::RangeViolation { .. } | Error::MaxPrincipleViolation { .. } => {
            ROSSELAND_STATUS_RANGE
        }
        Error::NumericalBreakdown(_) | Error::LinearSolve(_) => ROSSELAND_STATUS_SOLVER,
        Error::Experiment(_) | Error::Io(_) => ROSSELAND_STATUS_OTHER,
    }
}

fn guard_status<F: FnOnce() -> Result<c_int, Error>>(body: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(err)) => {
            set_last_error(&err.to_string());
            status_of(&err)
        }
        Err(_) => {
            set_last_error("internal panic crossed the FFI boundary");
            ROSSELAND_STATUS_PANIC
        }
    }
}

fn guard_ptr<T, F: FnOnce() -> Result<*mut T, Error>>(body: F) -> *mut T {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(ptr)) => ptr,
        Ok(Err(err)) => {
            set_last_error(&err.to_string());
            ptr::null_mut()
        }
        Err(_) => {
            set_last_error("internal panic crossed the FFI boundary");
            ptr::null_mut()
        }
    }
}

fn null_handle<T>(name: &str) -> Result<T, Error> {
    Err(Error::InvalidArgument(format!("{name} handle is NULL")))
}

unsafe fn deref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Error> {
    if ptr.is_null() {
        null_handle(name)
    } else {
        Ok(&*ptr)
    }
}

/// Opaque mesh handle.
pub struct RosselandMesh(Mesh);
/// Opaque coefficient model handle.
pub struct RosselandModel(CoefficientModel);
/// Opaque solve result: the nodal field plus the iteration record.
pub struct RosselandSolution {
    values: Vec<f64>,
    report: PicardReport,
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rosseland_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread; valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn rosseland_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn rosseland_mesh_unit_interval(n: usize) -> *mut RosselandMesh {
    guard_ptr(|| Ok(Box::into_raw(Box::new(RosselandMesh(Mesh::unit_interval(n)?)))))
}

#[no_mangle]
pub extern "C" fn rosseland_mesh_unit_square(n: usize) -> *mut RosselandMesh {
    guard_ptr(|| Ok(Box::into_raw(Box::new(RosselandMesh(Mesh::unit_square(n)?)))))
}

/// # Safety
/// `mesh` must come from a mesh constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rosseland_mesh_free(mesh: *mut RosselandMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live mesh handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_mesh_dim(mesh: *const RosselandMesh) -> c_int {
    match deref(mesh, "mesh") {
        Ok(m) => m.0.dim() as c_int,
        Err(e) => {
            set_last_error(&e.to_string());
            0
        }
    }
}

/// # Safety
/// `mesh` must be a live mesh handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_mesh_num_nodes(mesh: *const RosselandMesh) -> usize {
    deref(mesh, "mesh").map(|m| m.0.n_nodes()).unwrap_or(0)
}

/// # Safety
/// `mesh` must be a live mesh handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_mesh_num_elements(mesh: *const RosselandMesh) -> usize {
    deref(mesh, "mesh").map(|m| m.0.n_elements()).unwrap_or(0)
}

/// # Safety
/// `mesh` must be a live mesh handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_mesh_num_boundary_nodes(mesh: *const RosselandMesh) -> usize {
    deref(mesh, "mesh").map(|m| m.0.boundary_nodes().len()).unwrap_or(0)
}

/// Copies node coordinates (dim entries per node) into `out`.
///
/// # Safety
/// `out` must point to at least `len` doubles; `len` must equal
/// `num_nodes * dim`.
#[no_mangle]
pub unsafe extern "C" fn rosseland_mesh_node_coords(
    mesh: *const RosselandMesh,
    out: *mut f64,
    len: usize,
) -> c_int {
    guard_status(|| {
        let mesh = &deref(mesh, "mesh")?.0;
        if out.is_null() {
            return null_handle("out");
        }
        let needed = mesh.n_nodes() * mesh.dim();
        if len != needed {
            return Err(Error::InvalidArgument(format!(
                "coordinate buffer holds {len} entries, need {needed}"
            )));
        }
        let slice = std::slice::from_raw_parts_mut(out, len);
        for i in 0..mesh.n_nodes() {
            let x = mesh.node(i);
            slice[i * mesh.dim()..(i + 1) * mesh.dim()].copy_from_slice(x);
        }
        Ok(ROSSELAND_STATUS_OK)
    })
}

/// Copies the sorted boundary node indices into `out`.
///
/// # Safety
/// `out` must point to at least `len` size_t entries; `len` must equal
/// `num_boundary_nodes`.
#[no_mangle]
pub unsafe extern "C" fn rosseland_mesh_boundary_nodes(
    mesh: *const RosselandMesh,
    out: *mut usize,
    len: usize,
) -> c_int {
    guard_status(|| {
        let mesh = &deref(mesh, "mesh")?.0;
        if out.is_null() {
            return null_handle("out");
        }
        let boundary = mesh.boundary_nodes();
        if len != boundary.len() {
            return Err(Error::InvalidArgument(format!(
                "boundary buffer holds {len} entries, need {}",
                boundary.len()
            )));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(boundary);
        Ok(ROSSELAND_STATUS_OK)
    })
}

unsafe fn matrix_from_raw(dim: usize, data: *const f64, name: &str) -> Result<CoeffMatrix, Error> {
    if data.is_null() {
        return null_handle(name);
    }
    let raw = std::slice::from_raw_parts(data, dim * dim);
    let rows: Vec<Vec<f64>> = raw.chunks(dim).map(|r| r.to_vec()).collect();
    CoeffMatrix::from_rows(dim, &rows)
}

/// Radiative-diffusion model A(z, x) = K + z^3 B with constant matrices
/// given row-major (`dim * dim` entries each).
///
/// # Safety
/// `k` and `b` must point to `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn rosseland_model_new_rosseland(
    dim: c_int,
    k: *const f64,
    b: *const f64,
    t_min: f64,
    t_max: f64,
) -> *mut RosselandModel {
    guard_ptr(|| {
        let dim = usize::try_from(dim)
            .map_err(|_| Error::InvalidArgument(format!("bad dimension {dim}")))?;
        let range = AdmissibleRange::new(t_min, t_max)?;
        let model = CoefficientModel::rosseland(
            dim,
            MatrixField::Constant(matrix_from_raw(dim, k, "k")?),
            MatrixField::Constant(matrix_from_raw(dim, b, "b")?),
            range,
        )?;
        Ok(Box::into_raw(Box::new(RosselandModel(model))))
    })
}

/// z-independent model A(z, x) = K.
///
/// # Safety
/// `k` must point to `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn rosseland_model_new_linear(
    dim: c_int,
    k: *const f64,
    t_min: f64,
    t_max: f64,
) -> *mut RosselandModel {
    guard_ptr(|| {
        let dim = usize::try_from(dim)
            .map_err(|_| Error::InvalidArgument(format!("bad dimension {dim}")))?;
        let range = AdmissibleRange::new(t_min, t_max)?;
        let model = CoefficientModel::linear(
            dim,
            MatrixField::Constant(matrix_from_raw(dim, k, "k")?),
            range,
        )?;
        Ok(Box::into_raw(Box::new(RosselandModel(model))))
    })
}

/// # Safety
/// `model` must come from a model constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rosseland_model_free(model: *mut RosselandModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scans eigenvalues of A(z, x) over the admissibility grid and writes the
/// certified bounds. Fails with `ROSSELAND_STATUS_ELLIPTICITY` when a
/// sample is not positive definite.
///
/// # Safety
/// All handles must be live; `lambda_min`/`lambda_max` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rosseland_model_certify(
    model: *const RosselandModel,
    mesh: *const RosselandMesh,
    z_samples: usize,
    x_samples: usize,
    lambda_min: *mut f64,
    lambda_max: *mut f64,
) -> c_int {
    guard_status(|| {
        let model = &deref(model, "model")?.0;
        let mesh = &deref(mesh, "mesh")?.0;
        if lambda_min.is_null() || lambda_max.is_null() {
            return null_handle("lambda output");
        }
        let cert = certify_ellipticity(model, mesh, z_samples, x_samples)?;
        *lambda_min = cert.lambda_min;
        *lambda_max = cert.lambda_max;
        Ok(ROSSELAND_STATUS_OK)
    })
}

/// Fixed-point solver options; zero-initialize and overwrite, or call
/// `rosseland_solve_options_default`.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct RosselandSolveOptions {
    pub tol_l2: f64,
    pub max_iterations: usize,
    pub damping: f64,
}

/// Fills `opts` with the default solver parameters.
///
/// # Safety
/// `opts` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solve_options_default(opts: *mut RosselandSolveOptions) {
    if opts.is_null() {
        return;
    }
    let defaults = PicardConfig::default();
    (*opts) = RosselandSolveOptions {
        tol_l2: defaults.tol_l2,
        max_iterations: defaults.max_iterations,
        damping: defaults.damping,
    };
}

/// Runs the damped fixed-point iteration. `boundary_values` carries one
/// value per boundary node, ordered like `rosseland_mesh_boundary_nodes`.
/// A NULL `opts` selects the defaults. On success `*out` owns the solution
/// handle; honest non-convergence returns
/// `ROSSELAND_STATUS_NOT_CONVERGED` and still hands out the handle.
///
/// # Safety
/// All handles must be live; `boundary_values` must hold `n_boundary`
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solve_fixed_point(
    mesh: *const RosselandMesh,
    model: *const RosselandModel,
    boundary_values: *const f64,
    n_boundary: usize,
    opts: *const RosselandSolveOptions,
    out: *mut *mut RosselandSolution,
) -> c_int {
    guard_status(|| {
        let mesh = &deref(mesh, "mesh")?.0;
        let model = &deref(model, "model")?.0;
        if out.is_null() {
            return null_handle("out");
        }
        *out = ptr::null_mut();
        if boundary_values.is_null() {
            return null_handle("boundary_values");
        }
        let values = std::slice::from_raw_parts(boundary_values, n_boundary);
        let dirichlet = DirichletData::from_boundary_values(mesh, values)?;
        let mut config = PicardConfig::default();
        if let Some(o) = opts.as_ref() {
            config.tol_l2 = o.tol_l2;
            config.max_iterations = o.max_iterations;
            config.damping = o.damping;
        }
        let (field, report) = solve_fixed_point(mesh, model, &dirichlet, &config)?;
        let converged = report.converged;
        let solution = Box::new(RosselandSolution {
            values: field.into_values(),
            report,
        });
        *out = Box::into_raw(solution);
        Ok(if converged {
            ROSSELAND_STATUS_OK
        } else {
            set_last_error("fixed-point iteration did not converge");
            ROSSELAND_STATUS_NOT_CONVERGED
        })
    })
}

/// # Safety
/// `solution` must come from the solver and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solution_free(solution: *mut RosselandSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be a live solution handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solution_num_values(
    solution: *const RosselandSolution,
) -> usize {
    deref(solution, "solution").map(|s| s.values.len()).unwrap_or(0)
}

/// Copies the nodal solution values into `out`.
///
/// # Safety
/// `out` must point to at least `len` doubles; `len` must equal
/// `rosseland_solution_num_values`.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solution_values(
    solution: *const RosselandSolution,
    out: *mut f64,
    len: usize,
) -> c_int {
    guard_status(|| {
        let solution = deref(solution, "solution")?;
        if out.is_null() {
            return null_handle("out");
        }
        if len != solution.values.len() {
            return Err(Error::InvalidArgument(format!(
                "value buffer holds {len} entries, need {}",
                solution.values.len()
            )));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&solution.values);
        Ok(ROSSELAND_STATUS_OK)
    })
}

/// # Safety
/// `solution` must be a live solution handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solution_converged(
    solution: *const RosselandSolution,
) -> c_int {
    deref(solution, "solution")
        .map(|s| s.report.converged as c_int)
        .unwrap_or(0)
}

/// # Safety
/// `solution` must be a live solution handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solution_iterations(
    solution: *const RosselandSolution,
) -> usize {
    deref(solution, "solution")
        .map(|s| s.report.iterations_used)
        .unwrap_or(0)
}

/// Last L2 increment of the iteration (0 when no iteration ran).
///
/// # Safety
/// `solution` must be a live solution handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solution_final_increment(
    solution: *const RosselandSolution,
) -> f64 {
    deref(solution, "solution")
        .map(|s| s.report.increments_l2.last().copied().unwrap_or(0.0))
        .unwrap_or(f64::NAN)
}

/// Largest pre-clamp range violation seen across the iteration.
///
/// # Safety
/// `solution` must be a live solution handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rosseland_solution_max_clamp_violation(
    solution: *const RosselandSolution,
) -> f64 {
    deref(solution, "solution")
        .map(|s| {
            s.report
                .clamp_violation_linf
                .iter()
                .copied()
                .fold(0.0, f64::max)
        })
        .unwrap_or(f64::NAN)
}
