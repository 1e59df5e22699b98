//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;

/// Coefficients `[c2, c1, c0]` of `det(lambda I - M) = lambda^3 + c2 lambda^2 + c1 lambda + c0`.
pub fn char_poly3(m: &Mat3) -> [f64; 3] {
    let trace = m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)];
    [-trace, minors, -m.determinant()]
}

/// Numerical rank of a complex matrix: singular values above `threshold`.
pub fn numeric_rank(m: &DMatrix<Complex64>, threshold: f64) -> usize {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|s| **s > threshold)
        .count()
}

pub fn spectral_norm(m: &Mat3) -> f64 {
    m.singular_values().max()
}

pub fn to_complex(m: &Mat3) -> DMatrix<Complex64> {
    DMatrix::from_fn(3, 3, |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// `3 - rank(M - lambda I)` with singular-value threshold `1e-9 * ||M||`.
pub fn geometric_multiplicity(m: &Mat3, lambda: Complex64) -> usize {
    let mut shifted = to_complex(m);
    for i in 0..3 {
        shifted[(i, i)] -= lambda;
    }
    let threshold = 1e-9 * spectral_norm(m).max(f64::MIN_POSITIVE);
    3 - numeric_rank(&shifted, threshold)
}

/// Sorts by descending modulus, then descending real part.
pub fn sort_eigenvalues(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

/// Collapses values closer than `tol` into clusters (representative, size).
pub fn cluster_eigenvalues(values: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &v in values {
        match clusters.iter_mut().find(|(c, _)| (*c - v).norm() <= tol) {
            Some(entry) => entry.1 += 1,
            None => clusters.push((v, 1)),
        }
    }
    clusters
}

/// Largest-modulus eigenvalue via the real Schur form; ties broken by real part.
pub fn dominant_eigenvalue(m: &DMatrix<f64>) -> Complex64 {
    let mut values: Vec<Complex64> = m.clone().complex_eigenvalues().iter().copied().collect();
    sort_eigenvalues(&mut values);
    values[0]
}

/// Mean of the eigenvalues within `rel_tol * |lambda_max|` of the dominant
/// one. A multiple eigenvalue comes back from the Schur solver split by
/// about `eps^(1/k)`; the cluster mean is accurate to rounding.
pub fn dominant_eigenvalue_clustered(m: &DMatrix<f64>, rel_tol: f64) -> Complex64 {
    let mut values: Vec<Complex64> = m.clone().complex_eigenvalues().iter().copied().collect();
    sort_eigenvalues(&mut values);
    let lead = values[0];
    let radius = rel_tol * lead.norm();
    let cluster: Vec<Complex64> = values.into_iter().filter(|v| (*v - lead).norm() <= radius).collect();
    cluster.iter().sum::<Complex64>() / cluster.len() as f64
}

/// Power iteration with signed max-component normalization. Converged when
/// both the eigenvalue estimate (relative) and the normalized iterate
/// (max-norm) move by less than `tol` in one step.
pub fn power_iteration(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let n = m.nrows();
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    x /= x.amax();
    let mut estimate = f64::NAN;
    for _ in 0..max_iter {
        let y = m * &x;
        let pivot = y.iamax();
        if y[pivot] == 0.0 {
            return Ok(0.0);
        }
        let next = y[pivot] / x[pivot];
        let y = &y / y[pivot];
        let moved = (&y - &x).amax();
        let converged = moved <= tol && (next - estimate).abs() <= tol * next.abs();
        x = y;
        estimate = next;
        if converged {
            return Ok(estimate);
        }
    }
    Err(Error::PowerIteration {
        iterations: max_iter,
    })
}

/// `M^n` by binary powering.
pub fn matrix_power(m: &DMatrix<f64>, mut n: usize) -> DMatrix<f64> {
    let size = m.nrows();
    let mut result = DMatrix::identity(size, size);
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        n >>= 1;
    }
    result
}

/// `e_1^T M^n e_1` together with a log scale, computed by propagating a
/// max-normalized row vector so that very small or large values stay
/// representable: the entry is `mantissa * exp(log_scale)`.
pub fn corner_entry_power_scaled(m: &DMatrix<f64>, n: usize) -> (f64, f64) {
    let size = m.nrows();
    let mut row = DVector::<f64>::zeros(size);
    row[0] = 1.0;
    let mut log_scale = 0.0;
    for step in 0..n {
        row = m.transpose() * row;
        if step % 32 == 31 {
            let norm = row.amax();
            if norm == 0.0 {
                return (0.0, 0.0);
            }
            row /= norm;
            log_scale += norm.ln();
        }
    }
    (row[0], log_scale)
}
