//! Dense eigensolver kernels used by the Newton iteration.
//!
//! Ranks are one-based and count from the top of the spectrum: rank 1 is the
//! largest eigenvalue (largest real part for non-Hermitian input).

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{MepError, Result};
use crate::problem::{pencil, CMatrix, CVector, Lambda, MepProblem};

/// Overlap `|w^H v|` of unit left/right vectors below which an eigenvalue is
/// treated as defective.
pub const DEFECTIVE_TOL: f64 = 1e-12;

/// `B_k(λ) = Σ_l λ_l A[k][l]` for zero-based equation `k`.
pub fn assemble_pencil(problem: &MepProblem, k: usize, lambda: &Lambda) -> Result<CMatrix> {
    if k >= problem.m() {
        return Err(MepError::DimensionMismatch(format!(
            "equation {k} out of range for m = {}",
            problem.m()
        )));
    }
    if lambda.m() != problem.m() {
        return Err(MepError::DimensionMismatch(format!(
            "eigenvalue has {} parameters, problem has {}",
            lambda.m(),
            problem.m()
        )));
    }
    Ok(pencil(problem, k, lambda.lifted().as_slice()))
}

fn check_rank(n: usize, rank: usize) -> Result<()> {
    if rank == 0 || rank > n {
        return Err(MepError::InvalidConfig(format!(
            "rank {rank} out of range for a {n}x{n} matrix"
        )));
    }
    Ok(())
}

fn real_part(b: &CMatrix) -> Option<DMatrix<f64>> {
    b.iter().all(|z| z.im == 0.0).then(|| b.map(|z| z.re))
}

/// Indices of `values` sorted descending, stable for ties.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// The `rank`-th largest eigenvalue of a Hermitian matrix and a unit eigenvector.
pub fn kth_largest_hermitian(b: &CMatrix, rank: usize) -> Result<(f64, CVector)> {
    let n = b.nrows();
    check_rank(n, rank)?;
    if let Some(real) = real_part(b) {
        let eig = SymmetricEigen::try_new(real, f64::EPSILON, 0)
            .ok_or_else(|| MepError::EigenDecomposition("symmetric QR did not converge".into()))?;
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let j = descending_order(&values)[rank - 1];
        let v = eig.eigenvectors.column(j).map(|x| Complex64::new(x, 0.0));
        let norm = v.norm();
        return Ok((values[j], v / Complex64::new(norm, 0.0)));
    }
    let eig = SymmetricEigen::try_new(b.clone(), f64::EPSILON, 0)
        .ok_or_else(|| MepError::EigenDecomposition("Hermitian QR did not converge".into()))?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let j = descending_order(&values)[rank - 1];
    let v = eig.eigenvectors.column(j).into_owned();
    let norm = v.norm();
    Ok((values[j], v / Complex64::new(norm, 0.0)))
}

/// All eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_spectrum(b: &CMatrix) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = match real_part(b) {
        Some(real) => SymmetricEigen::try_new(real, f64::EPSILON, 0)
            .ok_or_else(|| MepError::EigenDecomposition("symmetric QR did not converge".into()))?
            .eigenvalues
            .iter()
            .copied()
            .collect(),
        None => SymmetricEigen::try_new(b.clone(), f64::EPSILON, 0)
            .ok_or_else(|| MepError::EigenDecomposition("Hermitian QR did not converge".into()))?
            .eigenvalues
            .iter()
            .copied()
            .collect(),
    };
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Upper triangular Schur form `B = Q T Q^H`.
fn schur(b: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let s = Schur::try_new(b.clone(), f64::EPSILON, 0)
        .ok_or_else(|| MepError::EigenDecomposition("Schur iteration did not converge".into()))?;
    let (q, mut t) = s.unpack();
    for j in 0..t.ncols() {
        for i in (j + 1)..t.nrows() {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

/// Eigenvalues of a general matrix sorted by descending real part.
pub fn general_spectrum(b: &CMatrix) -> Result<Vec<Complex64>> {
    let (_, t) = schur(b)?;
    let diag: Vec<Complex64> = t.diagonal().iter().copied().collect();
    let re: Vec<f64> = diag.iter().map(|z| z.re).collect();
    Ok(descending_order(&re).into_iter().map(|i| diag[i]).collect())
}

/// Real parts of the spectrum of a general matrix, descending, after checking
/// that every eigenvalue is real within `real_tol * ||B||`.
pub fn real_spectrum(b: &CMatrix, real_tol: f64) -> Result<Vec<f64>> {
    let spectrum = general_spectrum(b)?;
    check_real(&spectrum, real_tol * b.norm())?;
    Ok(spectrum.iter().map(|z| z.re).collect())
}

fn check_real(values: &[Complex64], tol: f64) -> Result<()> {
    let imag = values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > tol {
        return Err(MepError::ComplexSpectrum { imag, tol });
    }
    Ok(())
}

fn guard(d: Complex64, small: f64) -> Complex64 {
    if d.norm() < small {
        Complex64::new(small, 0.0)
    } else {
        d
    }
}

/// Solves `T x = t_pp x` for upper triangular `T` with `x_p = 1`, `x_i = 0` for `i > p`.
fn triangular_right(t: &CMatrix, p: usize, small: f64) -> CVector {
    let lambda = t[(p, p)];
    let mut x = CVector::zeros(t.nrows());
    x[p] = Complex64::new(1.0, 0.0);
    for i in (0..p).rev() {
        let mut s = Complex64::new(0.0, 0.0);
        for j in (i + 1)..=p {
            s += t[(i, j)] * x[j];
        }
        x[i] = -s / guard(t[(i, i)] - lambda, small);
    }
    x
}

/// Solves `y^H T = t_pp y^H` with `y_p = 1`, `y_i = 0` for `i < p`.
fn triangular_left(t: &CMatrix, p: usize, small: f64) -> CVector {
    let n = t.nrows();
    let lambda = t[(p, p)];
    let mut y = CVector::zeros(n);
    y[p] = Complex64::new(1.0, 0.0);
    for j in (p + 1)..n {
        let mut s = Complex64::new(0.0, 0.0);
        for i in p..j {
            s += t[(i, j)].conj() * y[i];
        }
        y[j] = s / guard((lambda - t[(j, j)]).conj(), small);
    }
    y
}

/// All eigenvalues of a general matrix with unit right eigenvectors, in
/// Schur order.
pub fn general_eigenvectors(b: &CMatrix) -> Result<Vec<(Complex64, CVector)>> {
    let small = (f64::EPSILON * b.norm()).max(f64::MIN_POSITIVE);
    let (q, t) = schur(b)?;
    Ok((0..t.nrows())
        .map(|p| {
            let mut v = &q * triangular_right(&t, p, small);
            v.unscale_mut(v.norm());
            (t[(p, p)], v)
        })
        .collect())
}

/// Left and right eigenvectors for one real eigenvalue of a general matrix.
#[derive(Clone, Debug)]
pub struct BiorthogonalPair {
    pub value: f64,
    /// Unit right eigenvector `v`.
    pub right: CVector,
    /// Left eigenvector `w` scaled so that `w^H v = 1`.
    pub left: CVector,
}

/// The eigenvalue of rank `rank` by descending real part, with left and right
/// eigenvectors. The selected eigenvalue and every eigenvalue ranked above it
/// must be real within `real_tol * ||B||`.
pub fn kth_largest_biorthogonal(b: &CMatrix, rank: usize, real_tol: f64) -> Result<BiorthogonalPair> {
    let n = b.nrows();
    check_rank(n, rank)?;
    let bnorm = b.norm();
    let (q, t) = schur(b)?;
    let diag: Vec<Complex64> = t.diagonal().iter().copied().collect();
    let re: Vec<f64> = diag.iter().map(|z| z.re).collect();
    let order = descending_order(&re);
    let top: Vec<Complex64> = order[..rank].iter().map(|&i| diag[i]).collect();
    check_real(&top, real_tol * bnorm)?;

    let p = order[rank - 1];
    let lambda = diag[p];
    let small = (f64::EPSILON * bnorm).max(f64::MIN_POSITIVE);
    let x = triangular_right(&t, p, small);
    let y = triangular_left(&t, p, small);

    let mut v = &q * x;
    let mut w = &q * y;
    v.unscale_mut(v.norm());
    w.unscale_mut(w.norm());
    let overlap = w.dotc(&v);
    if overlap.norm() < DEFECTIVE_TOL {
        return Err(MepError::DefectiveEigenvalue {
            overlap: overlap.norm(),
        });
    }
    let w = w / overlap.conj();
    Ok(BiorthogonalPair {
        value: lambda.re,
        right: v,
        left: w,
    })
}
