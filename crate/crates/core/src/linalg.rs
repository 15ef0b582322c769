//! Small dense vector helpers. Vectors are plain `[f64]` slices; matrix
//! factorizations go through `nalgebra`.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

/// Returns `a / |a|`, or `None` for a zero or non-finite vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let len = norm(a);
    if len > 0.0 && len.is_finite() {
        Some(scaled(a, 1.0 / len))
    } else {
        None
    }
}

pub fn unit_vector(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Modified Gram–Schmidt with one reorthogonalization pass. Vectors whose
/// residual falls below `tol` times their original length are dropped, so
/// the length of the result is the numerical rank.
pub fn orthonormalize(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let scale = norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let len = norm(&w);
        if len > tol * scale {
            basis.push(scaled(&w, 1.0 / len));
        }
    }
    basis
}

pub fn rank(vectors: &[Vec<f64>], tol: f64) -> usize {
    orthonormalize(vectors, tol).len()
}

/// Distance from `v` to the span of the orthonormal `basis`.
pub fn distance_to_span(basis: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut w = v.to_vec();
    for b in basis {
        let c = dot(v, b);
        w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
    norm(&w)
}

/// Solves the square system `rows · x = rhs` by LU with partial pivoting.
/// Returns `None` when the matrix is numerically singular.
pub fn solve(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = m.lu();
    let u = lu.u();
    let pivots = (0..n).map(|i| u[(i, i)].abs());
    let (lo, hi) = pivots.fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
    if !(lo > 1e-12 * hi) {
        return None;
    }
    let x = lu.solve(&DVector::from_column_slice(rhs))?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Row-major square matrix helpers used by the ellipsoid body.
pub fn mat_vec(matrix: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| dot(&matrix[i * n..(i + 1) * n], x)).collect()
}

#[inline]
pub fn quadratic_form(matrix: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let row = &matrix[i * n..(i + 1) * n];
        acc += x[i] * dot(row, x);
    }
    acc
}
