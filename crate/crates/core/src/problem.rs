//! The multiparameter eigenvalue problem data model.
//!
//! A problem with `m` spectral parameters consists of `m` equations. Equation
//! `k` (zero-based here, `k = 0..m`) owns `m + 1` square matrices
//! `A[k][0..=m]` of size `n_k`, and asks for unit vectors `u_k` with
//!
//! ```text
//! (λ_0 A[k][0] + λ_1 A[k][1] + ... + λ_m A[k][m]) u_k = 0
//! ```
//!
//! The inhomogeneous form fixes `λ_0 = 1`; the homogeneous form looks for a
//! unit vector `λ ∈ R^{m+1}`. Multiindices are one-based throughout, matching
//! the "i-th largest eigenvalue" convention.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::eig;
use crate::error::{MepError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance for the Hermitian flag, measured against the largest
/// entry magnitude of the matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MepProblem {
    dims: Vec<usize>,
    matrices: Vec<Vec<CMatrix>>,
    hermitian: bool,
    real: bool,
}

impl MepProblem {
    /// Builds a problem from `matrices[k][l]`, checking shapes and, when
    /// `hermitian` is set, the Hermitian property of every matrix.
    pub fn new(matrices: Vec<Vec<CMatrix>>, hermitian: bool) -> Result<Self> {
        let m = matrices.len();
        if m == 0 {
            return Err(MepError::DimensionMismatch(
                "a problem needs at least one equation".into(),
            ));
        }
        let mut dims = Vec::with_capacity(m);
        for (k, row) in matrices.iter().enumerate() {
            if row.len() != m + 1 {
                return Err(MepError::DimensionMismatch(format!(
                    "equation {k} has {} matrices, expected {}",
                    row.len(),
                    m + 1
                )));
            }
            let n = row[0].nrows();
            if n == 0 {
                return Err(MepError::DimensionMismatch(format!("equation {k} has empty matrices")));
            }
            for (l, a) in row.iter().enumerate() {
                if a.nrows() != n || a.ncols() != n {
                    return Err(MepError::DimensionMismatch(format!(
                        "A[{k}][{l}] is {}x{}, expected {n}x{n}",
                        a.nrows(),
                        a.ncols()
                    )));
                }
                if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(MepError::Format(format!("A[{k}][{l}] has non-finite entries")));
                }
                if hermitian {
                    let deviation = hermitian_deviation(a);
                    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if deviation > HERMITIAN_TOL * scale {
                        return Err(MepError::NotHermitian { k, l, deviation });
                    }
                }
            }
            dims.push(n);
        }
        let real = matrices.iter().flatten().all(|a| a.iter().all(|z| z.im == 0.0));
        Ok(Self {
            dims,
            matrices,
            hermitian,
            real,
        })
    }

    /// Convenience constructor for real matrices.
    pub fn from_real(matrices: Vec<Vec<DMatrix<f64>>>, hermitian: bool) -> Result<Self> {
        let matrices = matrices
            .into_iter()
            .map(|row| row.into_iter().map(to_complex).collect())
            .collect();
        Self::new(matrices, hermitian)
    }

    pub fn m(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `A[k][l]` with zero-based equation index `k` and parameter index `l`.
    pub fn matrix(&self, k: usize, l: usize) -> &CMatrix {
        &self.matrices[k][l]
    }

    pub fn equation(&self, k: usize) -> &[CMatrix] {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[Vec<CMatrix>] {
        &self.matrices
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// True when every stored entry has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Number of multiindices, `Π n_k`.
    pub fn index_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Applies `f` to every matrix, keeping the Hermitian flag.
    pub fn map_matrices<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, &CMatrix) -> CMatrix,
    {
        let matrices = self
            .matrices
            .iter()
            .enumerate()
            .map(|(k, row)| row.iter().enumerate().map(|(l, a)| f(k, l, a)).collect())
            .collect();
        Self::new(matrices, self.hermitian)
    }

    /// Same matrices with a different Hermitian flag (validated).
    pub fn with_hermitian(&self, hermitian: bool) -> Result<Self> {
        Self::new(self.matrices.clone(), hermitian)
    }
}

pub(crate) fn to_complex(a: DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

pub(crate) fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// One-based index tuple `(i_1, ..., i_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiindex(Vec<usize>);

impl Multiindex {
    /// Validates `1 <= i_k <= n_k` against `dims`.
    pub fn new(entries: Vec<usize>, dims: &[usize]) -> Result<Self> {
        let index = Self(entries);
        index.check(dims)?;
        Ok(index)
    }

    /// Unchecked constructor; use [`Multiindex::check`] before solving.
    pub fn from_vec(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![1; m])
    }

    pub fn check(&self, dims: &[usize]) -> Result<()> {
        let ok = self.0.len() == dims.len() && self.0.iter().zip(dims).all(|(&i, &n)| i >= 1 && i <= n);
        if ok {
            Ok(())
        } else {
            Err(MepError::InvalidMultiindex {
                index: self.0.clone(),
                dims: dims.to_vec(),
            })
        }
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ (i_k - 1)`, the distance from `(1, ..., 1)` in the index lattice.
    pub fn level(&self) -> usize {
        self.0.iter().map(|i| i - 1).sum()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Multiindex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `self + e_k`, or `None` past the end of dimension `k`.
    pub fn successor(&self, k: usize, dims: &[usize]) -> Option<Multiindex> {
        (self.0[k] < dims[k]).then(|| {
            let mut next = self.0.clone();
            next[k] += 1;
            Multiindex(next)
        })
    }

    /// `self - e_k`, or `None` when `i_k = 1`.
    pub fn predecessor(&self, k: usize) -> Option<Multiindex> {
        (self.0[k] > 1).then(|| {
            let mut prev = self.0.clone();
            prev[k] -= 1;
            Multiindex(prev)
        })
    }

    /// Maps `i_k -> n_k + 1 - i_k`, the index of `-λ`.
    pub fn reversed(&self, dims: &[usize]) -> Multiindex {
        Multiindex(self.0.iter().zip(dims).map(|(i, n)| n + 1 - i).collect())
    }

    /// All multiindices of the grid `{1..n_1} x ... x {1..n_m}` in
    /// lexicographic order (last entry fastest).
    pub fn grid(dims: &[usize]) -> impl Iterator<Item = Multiindex> + '_ {
        let total: usize = dims.iter().product();
        (0..total).map(move |mut flat| {
            let mut entries = vec![0; dims.len()];
            for (e, &n) in entries.iter_mut().zip(dims).rev() {
                *e = flat % n + 1;
                flat /= n;
            }
            Multiindex(entries)
        })
    }

    /// Dash-joined form used in CSV output, e.g. `1-1-4`.
    pub fn dashed(&self) -> String {
        join(&self.0, "-")
    }
}

fn join(entries: &[usize], sep: &str) -> String {
    entries.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for Multiindex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", join(&self.0, ","))
    }
}

impl FromStr for Multiindex {
    type Err = MepError;

    /// Parses `1,1,4` or `1-1-4`.
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split([',', '-'])
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| MepError::InvalidConfig(format!("bad multiindex entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Multiindex(entries))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

impl FromStr for Sign {
    type Err = MepError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" | "+1" | "1" => Ok(Sign::Plus),
            "-" | "minus" | "-1" => Ok(Sign::Minus),
            other => Err(MepError::InvalidConfig(format!("bad sign {other:?}"))),
        }
    }
}

/// What a solve is aiming for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    /// Inhomogeneous problem (`λ_0 = 1`), unique eigenvalue under right definiteness.
    Index(Multiindex),
    /// Homogeneous problem, eigenvalue of signed index `(i, σ)` on the unit sphere.
    Signed(Multiindex, Sign),
}

impl Target {
    pub fn multiindex(&self) -> &Multiindex {
        match self {
            Target::Index(i) | Target::Signed(i, _) => i,
        }
    }

    pub fn sign(&self) -> Option<Sign> {
        match self {
            Target::Index(_) => None,
            Target::Signed(_, s) => Some(*s),
        }
    }
}

/// An eigenvalue in either normalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Lambda {
    /// `(λ_1, ..., λ_m)`, implicitly `λ_0 = 1`.
    Inhomogeneous(DVector<f64>),
    /// Unit vector `(λ_0, ..., λ_m)`.
    Homogeneous(DVector<f64>),
}

impl Lambda {
    /// The `m + 1` coefficients multiplying `A[k][0..=m]`.
    pub fn lifted(&self) -> DVector<f64> {
        match self {
            Lambda::Inhomogeneous(v) => {
                let mut out = DVector::zeros(v.len() + 1);
                out[0] = 1.0;
                out.rows_mut(1, v.len()).copy_from(v);
                out
            }
            Lambda::Homogeneous(v) => v.clone(),
        }
    }

    /// Inhomogeneous coordinates; `None` when `λ_0 = 0`.
    pub fn affine(&self) -> Option<DVector<f64>> {
        match self {
            Lambda::Inhomogeneous(v) => Some(v.clone()),
            Lambda::Homogeneous(v) => (v[0] != 0.0).then(|| v.rows(1, v.len() - 1).map(|x| x / v[0])),
        }
    }

    /// Unit-sphere representative of the lifted vector.
    pub fn unit(&self) -> DVector<f64> {
        let l = self.lifted();
        let norm = l.norm();
        l / norm
    }

    pub fn m(&self) -> usize {
        match self {
            Lambda::Inhomogeneous(v) => v.len(),
            Lambda::Homogeneous(v) => v.len() - 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub lambda: Lambda,
    /// Unit right eigenvectors `u_k` (or `v_k`), one per equation.
    pub right: Vec<CVector>,
    /// Left eigenvectors `w_k` with `w_k^H v_k = 1`, non-Hermitian solves only.
    pub left: Option<Vec<CVector>>,
    pub multiindex: Multiindex,
    pub sign: Option<Sign>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop once `||F_i(λ)||_∞ <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Damping factor of the globalized iteration.
    pub tau: f64,
    pub seed: u64,
    pub globalize: bool,
    /// Imaginary parts above `real_tol * ||B||` mark a spectrum as complex.
    pub real_tol: f64,
    /// Cap on damping rounds per outer iteration.
    pub max_damping: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 40,
            tau: 0.5,
            seed: 0,
            globalize: false,
            real_tol: 1e-8,
            max_damping: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(MepError::InvalidConfig(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if !(self.tol > 0.0) {
            return Err(MepError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(MepError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.real_tol > 0.0) {
            return Err(MepError::InvalidConfig("real_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max-iter",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    /// `||F_i(λ^{(j)})||_∞` for `j = 1..=iterations`.
    pub residuals: Vec<f64>,
    /// Accepted iterates `λ^{(j)}` in lifted form.
    pub iterates: Vec<DVector<f64>>,
    /// Number of damping rounds taken in each outer iteration.
    pub damping: Vec<usize>,
    pub pair: Eigenpair,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// `B_k(λ) = Σ_l λ_l A[k][l]` for lifted `λ`.
pub fn pencil(problem: &MepProblem, k: usize, lifted: &[f64]) -> CMatrix {
    let eq = problem.equation(k);
    let n = problem.dims()[k];
    let mut b = CMatrix::zeros(n, n);
    for (a, &c) in eq.iter().zip(lifted) {
        if c != 0.0 {
            b.zip_apply(a, |x, y| *x += y * c);
        }
    }
    b
}

fn check_lambda(problem: &MepProblem, lambda: &Lambda) -> Result<()> {
    if lambda.m() != problem.m() {
        return Err(MepError::DimensionMismatch(format!(
            "eigenvalue has {} parameters, problem has {}",
            lambda.m(),
            problem.m()
        )));
    }
    Ok(())
}

/// Normalized residual `max_k ||B_k(λ) u_k|| / ||u_k||`.
pub fn residual(problem: &MepProblem, pair: &Eigenpair) -> Result<f64> {
    check_lambda(problem, &pair.lambda)?;
    if pair.right.len() != problem.m() {
        return Err(MepError::DimensionMismatch(format!(
            "{} vectors for {} equations",
            pair.right.len(),
            problem.m()
        )));
    }
    let lifted = pair.lambda.lifted();
    let mut worst: f64 = 0.0;
    for (k, u) in pair.right.iter().enumerate() {
        if u.len() != problem.dims()[k] {
            return Err(MepError::DimensionMismatch(format!(
                "vector {k} has length {}, expected {}",
                u.len(),
                problem.dims()[k]
            )));
        }
        let b = pencil(problem, k, lifted.as_slice());
        worst = worst.max((&b * u).norm() / u.norm());
    }
    Ok(worst)
}

/// Multiindex realized at `λ`: for each equation, the one-based descending
/// rank of the pencil eigenvalue closest to zero.
pub fn multiindex_of(problem: &MepProblem, lambda: &Lambda) -> Result<Multiindex> {
    multiindex_of_with(problem, lambda, SolverConfig::default().real_tol)
}

pub fn multiindex_of_with(problem: &MepProblem, lambda: &Lambda, real_tol: f64) -> Result<Multiindex> {
    check_lambda(problem, lambda)?;
    let lifted = lambda.lifted();
    let mut entries = Vec::with_capacity(problem.m());
    for k in 0..problem.m() {
        let b = pencil(problem, k, lifted.as_slice());
        let spectrum = if problem.is_hermitian() {
            eig::hermitian_spectrum(&b)?
        } else {
            eig::real_spectrum(&b, real_tol)?
        };
        entries.push(rank_nearest_zero(&spectrum));
    }
    Ok(Multiindex(entries))
}

/// One-based position of the smallest-magnitude entry of a descending list;
/// ties go to the smaller rank.
pub(crate) fn rank_nearest_zero(descending: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in descending.iter().enumerate() {
        if v.abs() < descending[best].abs() {
            best = i;
        }
    }
    best + 1
}
