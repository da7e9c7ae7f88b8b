//! Compressed sparse row matrices and a preconditioned conjugate gradient
//! solver for the symmetric positive definite systems produced by the
//! Galerkin assembly.
//!
//! CG is deterministic: no randomness, fixed accumulation order, always
//! started from the zero vector. Convergence is measured by the relative
//! residual ||b - Ax|| <= tol ||b||. Non-convergence within the iteration
//! budget is reported, not raised; encountering NaN raises a breakdown
//! error.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Sparse matrix in compressed sparse row format with strictly increasing
/// column indices per row. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a CSR matrix from (row, col, value) triplets, summing
    /// duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({i}, {j}) out of bounds for {nrows}x{ncols} matrix"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for &(i, j, v) in &sorted {
            if col_indices.len() > row_offsets[i] && *col_indices.last().unwrap() == j
                && row_offsets[i + 1] == col_indices.len()
            {
                // same (i, j) as the previous entry: accumulate
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] = col_indices.len();
            }
        }
        // rows without entries inherit the previous offset
        for i in 1..=nrows {
            if row_offsets[i] < row_offsets[i - 1] {
                row_offsets[i] = row_offsets[i - 1];
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry (i, j), zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Sparse matrix-vector product A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::InvalidArgument(format!(
                "spmv: vector length {} does not match {} columns",
                x.len(),
                self.ncols
            )));
        }
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// Max |A_ij - A_ji| over stored entries.
    pub fn symmetry_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                gap = gap.max((v - self.get(j, i)).abs());
            }
        }
        gap
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Writes the matrix in MatrixMarket coordinate format (1-based).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preconditioner {
    None,
    Jacobi,
}

/// Outcome of one conjugate gradient solve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CgReport {
    pub iterations: usize,
    /// Absolute 2-norm of the final residual b - Ax.
    pub final_residual_norm: f64,
    /// True iff final_residual_norm <= tol * ||b||.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradient for symmetric positive definite systems, started from
/// the zero vector. Returns the iterate and a report; non-convergence is
/// flagged in the report rather than raised.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    preconditioner: Preconditioner,
) -> Result<(Vec<f64>, CgReport)> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "cg_solve requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != a.nrows() {
        return Err(Error::InvalidArgument(format!(
            "cg_solve: rhs length {} does not match {} rows",
            b.len(),
            a.nrows()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cg_solve requires tol > 0, got {tol}"
        )));
    }

    let n = a.nrows();
    let b_norm = norm(b);
    if b_norm == 0.0 || n == 0 {
        return Ok((
            vec![0.0; n],
            CgReport {
                iterations: 0,
                final_residual_norm: 0.0,
                converged: true,
            },
        ));
    }

    let inv_diag: Option<Vec<f64>> = match preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => {
            let diag = a.diagonal();
            if diag.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::NumericalBreakdown(
                    "Jacobi preconditioner requires a positive diagonal".into(),
                ));
            }
            Some(diag.iter().map(|&d| 1.0 / d).collect())
        }
    };
    let precondition = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            None => r.to_vec(),
            Some(inv) => r.iter().zip(inv).map(|(ri, di)| ri * di).collect(),
        }
    };

    let threshold = tol * b_norm;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut res_norm = b_norm;
    if res_norm <= threshold {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                final_residual_norm: res_norm,
                converged: true,
            },
        ));
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        let ap = a.spmv(&p)?;
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::NumericalBreakdown(
                "non-finite curvature p'Ap in conjugate gradient".into(),
            ));
        }
        if pap <= 0.0 {
            return Err(Error::NumericalBreakdown(format!(
                "non-positive curvature p'Ap = {pap:e}: matrix is not positive definite"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res_norm = norm(&r);
        if !res_norm.is_finite() {
            return Err(Error::NumericalBreakdown(
                "non-finite residual in conjugate gradient".into(),
            ));
        }
        if res_norm <= threshold {
            return Ok((
                x,
                CgReport {
                    iterations,
                    final_residual_norm: res_norm,
                    converged: true,
                },
            ));
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    Ok((
        x,
        CgReport {
            iterations,
            final_residual_norm: res_norm,
            converged: false,
        },
    ))
}
