use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MepError, Result};
use crate::problem::{hermitian_deviation, CMatrix, MepProblem};

/// Condition estimate above which a transformation matrix counts as singular.
pub const SINGULAR_TRANSFORM: f64 = 1e12;
/// Relative Hermitian defect tolerated after diagonal symmetrization.
pub const SYMMETRIZE_TOL: f64 = 1e-10;

fn condition(b: &CMatrix) -> f64 {
    let s = b.clone().singular_values();
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `A[k][l] <- B_k A[k][l] B_k^H`. Eigenvalues are unchanged and eigenvectors
/// map to `B_k^{-H} u_k`.
pub fn congruence_transform(problem: &MepProblem, transforms: &[CMatrix]) -> Result<MepProblem> {
    if transforms.len() != problem.m() {
        return Err(MepError::DimensionMismatch(format!(
            "{} transforms for {} equations",
            transforms.len(),
            problem.m()
        )));
    }
    for (k, (b, &n)) in transforms.iter().zip(problem.dims()).enumerate() {
        if b.nrows() != n || b.ncols() != n {
            return Err(MepError::DimensionMismatch(format!(
                "transform {k} is {}x{}, expected {n}x{n}",
                b.nrows(),
                b.ncols()
            )));
        }
        let condition = condition(b);
        if !(condition <= SINGULAR_TRANSFORM) {
            return Err(MepError::SingularTransform { k, condition });
        }
    }
    problem.map_matrices(|k, _, a| {
        let b = &transforms[k];
        let mut c = b * a * b.adjoint();
        if problem.is_hermitian() {
            c = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
        }
        c
    })
}

/// Lower triangular matrix with unit diagonal and entries uniform on
/// `[-1, 1]` below it.
pub fn random_unit_triangular(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => rng.random_range(-1.0..=1.0),
        std::cmp::Ordering::Less => 0.0,
    })
}

/// Adds symmetric perturbations with entries uniform on
/// `[-magnitude, magnitude]` to every matrix.
pub fn perturb_hermitian(problem: &MepProblem, magnitude: f64, seed: u64) -> Result<MepProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    problem.map_matrices(|_, _, a| {
        let n = a.nrows();
        let mut e = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-magnitude..=magnitude));
        e = (&e + e.transpose()) * 0.5;
        a + e.map(|x| Complex64::new(x, 0.0))
    })
}

/// A Hermitian problem similar to a diagonally scaled one, together with the
/// diagonal maps from its eigenvectors `u_k` to right eigenvectors
/// `v_k = right_maps[k] ∘ u_k` and left eigenvectors `w_k = left_maps[k] ∘ u_k`
/// of the original problem.
#[derive(Clone, Debug)]
pub struct Symmetrized {
    pub problem: MepProblem,
    pub right_maps: Vec<DVector<f64>>,
    pub left_maps: Vec<DVector<f64>>,
}

/// For a problem with `D^L_k A[k][l] D^R_k` Hermitian, returns the Hermitian
/// problem `(D^R_k)^{-1/2} (D^L_k)^{1/2} A[k][l] (D^L_k)^{-1/2} (D^R_k)^{1/2}`.
pub fn symmetrize_diagonal(problem: &MepProblem, left: &[DVector<f64>], right: &[DVector<f64>]) -> Result<Symmetrized> {
    let m = problem.m();
    if left.len() != m || right.len() != m {
        return Err(MepError::DimensionMismatch(format!(
            "need {m} left and right scalings, got {} and {}",
            left.len(),
            right.len()
        )));
    }
    for k in 0..m {
        let n = problem.dims()[k];
        if left[k].len() != n || right[k].len() != n {
            return Err(MepError::DimensionMismatch(format!("scaling {k} has the wrong length")));
        }
        if left[k].iter().chain(right[k].iter()).any(|&d| !(d > 0.0)) {
            return Err(MepError::InvalidConfig(format!("scaling {k} must be positive")));
        }
    }
    // Similarity by T_k = (D^R_k)^{-1/2} (D^L_k)^{1/2}.
    let t: Vec<DVector<f64>> = (0..m)
        .map(|k| left[k].zip_map(&right[k], |l, r| (l / r).sqrt()))
        .collect();
    let mut matrices = Vec::with_capacity(m);
    for k in 0..m {
        let mut row = Vec::with_capacity(m + 1);
        for l in 0..=m {
            let a = problem.matrix(k, l);
            let mut b = CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (t[k][i] / t[k][j]));
            let deviation = hermitian_deviation(&b);
            let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if deviation > SYMMETRIZE_TOL * scale {
                return Err(MepError::NotSymmetrizable { k, l, deviation });
            }
            b = (&b + b.adjoint()) * Complex64::new(0.5, 0.0);
            row.push(b);
        }
        matrices.push(row);
    }
    Ok(Symmetrized {
        problem: MepProblem::new(matrices, true)?,
        right_maps: t.iter().map(|t| t.map(|x| 1.0 / x)).collect(),
        left_maps: t,
    })
}
