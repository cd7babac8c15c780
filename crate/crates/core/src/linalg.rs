//! Dense linear-algebra helpers on top of nalgebra.
//!
//! Large products go through `matrixmultiply::dgemm` directly on nalgebra's
//! column-major storage; decompositions use nalgebra.

use alloc::vec::Vec;
use nalgebra::{Cholesky, SymmetricEigen};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Mat, Result, Vector};

/// Returns `op(a) * op(b)` where `op` optionally transposes.
pub fn gemm(a: &Mat, ta: bool, b: &Mat, tb: bool) -> Mat {
    let (m, k) = if ta { (a.ncols(), a.nrows()) } else { (a.nrows(), a.ncols()) };
    let (k2, n) = if tb { (b.ncols(), b.nrows()) } else { (b.nrows(), b.ncols()) };
    assert_eq!(k, k2, "gemm inner dimensions disagree");
    let mut c = Mat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // Column-major element (i, j) lives at i + j * nrows.
    let (rsa, csa) = if ta { (a.nrows() as isize, 1) } else { (1, a.nrows() as isize) };
    let (rsb, csb) = if tb { (b.nrows() as isize, 1) } else { (1, b.nrows() as isize) };
    // SAFETY: strides and extents describe the owned buffers exactly.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    c
}

/// `Aᵀx` without materializing the transpose.
pub fn tr_mul_vec(a: &Mat, x: &Vector) -> Vector {
    a.tr_mul(x)
}

/// Symmetric eigendecomposition, eigenvalues sorted in decreasing order.
pub fn sym_eigen_sorted(m: &Mat) -> (Vector, Mat) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Symmetric PSD square root with negative eigenvalues clipped to zero.
///
/// Returns the root and the clipped mass (sum of absolute values of the
/// negative eigenvalues that were removed).
pub fn psd_sqrt(m: &Mat) -> (Mat, f64) {
    let n = m.nrows();
    let (values, vectors) = sym_eigen_sorted(m);
    let mut clipped = 0.0;
    let mut scaled = vectors.clone();
    for j in 0..n {
        let lam = values[j];
        let s = if lam > 0.0 {
            lam.sqrt()
        } else {
            clipped += -lam;
            0.0
        };
        scaled.column_mut(j).scale_mut(s);
    }
    (gemm(&scaled, false, &vectors, true), clipped)
}

/// Largest singular value.
pub fn op_norm(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() { gemm(m, false, m, true) } else { gemm(m, true, m, false) };
    let (values, _) = sym_eigen_sorted(&gram);
    values[0].max(0.0).sqrt()
}

/// Solves `(A + shift·I) x = b` for symmetric PSD `A`.
///
/// Falls back to a pseudo-inverse (eigenvalue cut relative to the largest)
/// when the Cholesky factorization fails; the boolean reports the fallback.
pub fn solve_shifted_psd(a: &Mat, shift: f64, b: &Mat) -> Result<(Mat, bool)> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Dimension(alloc::format!(
            "system {}x{} with right-hand side of {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += shift;
    }
    if let Some(ch) = Cholesky::new(m.clone()) {
        let x = ch.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return Ok((x, false));
        }
    }
    let (values, vectors) = sym_eigen_sorted(&m);
    let cut = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) * 1e-12;
    let proj = gemm(&vectors, true, b, false);
    let mut scaled = proj;
    for i in 0..values.len() {
        let inv = if values[i].abs() > cut { 1.0 / values[i] } else { 0.0 };
        scaled.row_mut(i).scale_mut(inv);
    }
    let x = gemm(&vectors, false, &scaled, false);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("linear solve produced non-finite values".into()));
    }
    Ok((x, true))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormalizes `v` against `basis` (two passes of modified Gram–Schmidt).
/// Returns the unit residual when its norm before normalization exceeds `tol`.
pub fn gram_schmidt_residual(basis: &[Vec<f64>], v: &[f64], tol: f64) -> Option<Vec<f64>> {
    let scale = norm(v);
    if scale == 0.0 {
        return None;
    }
    let mut r: Vec<f64> = v.iter().map(|x| x / scale).collect();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
    }
    let nr = norm(&r);
    if nr <= tol {
        return None;
    }
    for x in &mut r {
        *x /= nr;
    }
    Some(r)
}

/// Orthonormal basis of the complement of `basis` in `R^dim`.
pub fn orthonormal_complement(basis: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = basis.to_vec();
    let mut out = Vec::new();
    // Try standard basis vectors in order of smallest projection onto `basis`
    // for better conditioning.
    let mut order: Vec<(usize, f64)> = (0..dim)
        .map(|i| (i, basis.iter().map(|b| b[i] * b[i]).sum::<f64>()))
        .collect();
    order.sort_by(|x, y| x.1.total_cmp(&y.1));
    for (i, _) in order {
        if all.len() == dim {
            break;
        }
        let mut e = alloc::vec![0.0; dim];
        e[i] = 1.0;
        if let Some(r) = gram_schmidt_residual(&all, &e, 1e-8) {
            all.push(r.clone());
            out.push(r);
        }
    }
    out
}

/// Random matrix with orthonormal rows from a Gaussian matrix via QR.
pub fn orthonormal_rows(g: &Mat) -> Mat {
    let qr = g.transpose().qr();
    let q = qr.q();
    let r = qr.r();
    let mut q = q;
    // Fix signs so the decomposition is unique.
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q.transpose()
}
