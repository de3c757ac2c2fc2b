use nalgebra::{DMatrix, DVector};

use crate::problem::MepProblem;

fn diag(d: [f64; 4]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(&d))
}

/// A three-parameter problem of 4x4 diagonal matrices that is locally
/// definite but not definite for any `μ`.
pub fn volkmer_example() -> MepProblem {
    let a = diag([1.0, 5.0, 1.0, 1.0]);
    let b = diag([1.0, 1.0, 5.0, 1.0]);
    let c = diag([5.0, 1.0, 1.0, 1.0]);
    let d = diag([-1.0, -1.0, -1.0, -5.0]);
    let matrices = vec![
        vec![a.clone(), b.clone(), c.clone(), d.clone()],
        vec![b.clone(), a.clone(), d.clone(), c.clone()],
        vec![c, d, a, b],
    ];
    MepProblem::from_real(matrices, true).expect("diagonal matrices are Hermitian")
}
