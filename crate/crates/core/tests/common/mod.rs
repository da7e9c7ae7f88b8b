//! Shared helpers for the integration suites: an independent dense solver
//! oracle and seeded random problem data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rosseland::coefficient::{AdmissibleRange, CoefficientModel, MatrixField};
use rosseland::{AdmissibleField, Mesh};

/// Dense Gaussian elimination with partial pivoting. Kept independent of
/// the sparse solver it cross-checks.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        a.swap(k, pivot);
        b.swap(k, pivot);
        assert!(a[k][k] != 0.0, "singular matrix in dense oracle");
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    x
}

/// Random dense SPD matrix with moderate condition number.
pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for row in &m {
                s += row[i] * row[j];
            }
            a[i][j] = s;
        }
        a[i][i] += 0.5 * n as f64;
    }
    a
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The benchmark coefficient: K = I, B = I on the given range.
pub fn rosseland_identity(dim: usize, range: AdmissibleRange) -> CoefficientModel {
    CoefficientModel::rosseland(
        dim,
        MatrixField::constant_scalar(dim, 1.0),
        MatrixField::constant_scalar(dim, 1.0),
        range,
    )
    .expect("identity fields are symmetric")
}

/// Random nodal field strictly inside the range.
pub fn random_admissible(mesh: &Mesh, range: AdmissibleRange, rng: &mut ChaCha8Rng) -> AdmissibleField {
    let margin = 0.05 * (range.t_max() - range.t_min());
    let values: Vec<f64> = (0..mesh.n_nodes())
        .map(|_| rng.random_range(range.t_min() + margin..=range.t_max() - margin))
        .collect();
    AdmissibleField::new(values, range).expect("values drawn inside the range")
}

/// Runs a criterion body, printing one pass/fail line, and re-raises on
/// failure so the test still fails.
pub fn criterion<F: FnOnce() + std::panic::UnwindSafe>(number: u32, name: &str, body: F) {
    let result = std::panic::catch_unwind(body);
    let verdict = if result.is_ok() { "PASS" } else { "FAIL" };
    println!("criterion {number:02} {name}: {verdict}");
    if let Err(panic) = result {
        std::panic::resume_unwind(panic);
    }
}
