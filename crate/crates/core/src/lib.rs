//! Semismooth Newton methods for definite multiparameter eigenvalue problems.
//!
//! The crate targets single eigenvalues by their (signed) multiindex. Each
//! Newton step costs one dense eigendecomposition per equation plus a small
//! `m x (m + 1)` linear algebra problem, so eigenvalues can be computed
//! without ever forming the tensor-product space. A brute-force operator
//! determinant solver ([`oracle`]) is included for validating small instances.

pub mod bench;
pub mod eig;
pub mod error;
pub mod gallery;
pub mod io;
pub mod newton;
pub mod oracle;
pub mod problem;

pub use error::{MepError, Result};
pub use newton::{solve, solve_globalized, InitialVectors};
pub use problem::{
    multiindex_of, residual, Eigenpair, Lambda, MepProblem, Multiindex, Sign, SolveReport, SolveStatus, SolverConfig,
    Target,
};
