//! Newton functions and the semismooth Newton iterations.
//!
//! One iteration builds the matrix `W(u)` of quadratic forms from the current
//! eigenvector guesses, takes its (oriented) null vector as the next
//! eigenvalue iterate, and re-solves the `m` pencil eigenproblems there. The
//! same engine drives the right definite, locally definite, damped and
//! non-Hermitian variants.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::eig::{kth_largest_biorthogonal, kth_largest_hermitian};
use crate::error::{MepError, Result};
use crate::problem::{
    pencil, CMatrix, CVector, Eigenpair, Lambda, MepProblem, Multiindex, Sign, SolveReport, SolveStatus, SolverConfig,
    Target,
};

/// Condition estimate above which the Newton system counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;
/// Relative size of the second smallest singular value of `W` below which its
/// null space is not unique.
pub const RANK_TOL: f64 = 1e-12;

/// The `m x (m + 1)` matrix with entries `w_k^H A[k][l] v_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct WMatrix {
    entries: CMatrix,
}

impl WMatrix {
    pub fn from_real(entries: DMatrix<f64>) -> Self {
        Self {
            entries: entries.map(|x| Complex64::new(x, 0.0)),
        }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn real(&self) -> DMatrix<f64> {
        self.entries.map(|z| z.re)
    }

    pub fn max_imag(&self) -> f64 {
        self.entries.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// The square block `J(u)` of derivatives with respect to `λ_1..λ_m`.
    pub fn jacobian(&self) -> DMatrix<f64> {
        let m = self.entries.nrows();
        self.real().columns(1, m).into_owned()
    }
}

/// Builds `W(u)` (Hermitian case, `left = None`) or `W̃(v, w)`.
pub fn w_matrix(problem: &MepProblem, right: &[CVector], left: Option<&[CVector]>) -> Result<WMatrix> {
    let m = problem.m();
    check_vectors(problem, right)?;
    if let Some(left) = left {
        check_vectors(problem, left)?;
    }
    let mut entries = CMatrix::zeros(m, m + 1);
    for k in 0..m {
        let v = &right[k];
        let w = left.map_or(v, |l| &l[k]);
        for l in 0..=m {
            entries[(k, l)] = w.dotc(&(problem.matrix(k, l) * v));
        }
    }
    if left.is_none() && problem.is_hermitian() {
        entries.apply(|z| z.im = 0.0);
    }
    Ok(WMatrix { entries })
}

fn check_vectors(problem: &MepProblem, vectors: &[CVector]) -> Result<()> {
    if vectors.len() != problem.m() {
        return Err(MepError::DimensionMismatch(format!(
            "{} vectors for {} equations",
            vectors.len(),
            problem.m()
        )));
    }
    for (k, (v, &n)) in vectors.iter().zip(problem.dims()).enumerate() {
        if v.len() != n {
            return Err(MepError::DimensionMismatch(format!(
                "vector {k} has length {}, expected {n}",
                v.len()
            )));
        }
    }
    Ok(())
}

/// Value of a Newton function together with the eigenvectors realized.
#[derive(Clone, Debug)]
pub struct FEvaluation {
    /// `F_i(λ)`: component `k` is the `i_k`-th largest eigenvalue of `B_k(λ)`.
    pub values: DVector<f64>,
    pub right: Vec<CVector>,
    /// Left eigenvectors, non-Hermitian problems only.
    pub left: Option<Vec<CVector>>,
}

impl FEvaluation {
    pub fn norm_inf(&self) -> f64 {
        self.values.amax()
    }
}

/// Evaluates `F_i` at `λ` (inhomogeneous points are lifted with `λ_0 = 1`).
pub fn f_index(problem: &MepProblem, index: &Multiindex, lambda: &Lambda) -> Result<FEvaluation> {
    f_index_with(problem, index, lambda, SolverConfig::default().real_tol)
}

pub fn f_index_with(problem: &MepProblem, index: &Multiindex, lambda: &Lambda, real_tol: f64) -> Result<FEvaluation> {
    index.check(problem.dims())?;
    if lambda.m() != problem.m() {
        return Err(MepError::DimensionMismatch(format!(
            "eigenvalue has {} parameters, problem has {}",
            lambda.m(),
            problem.m()
        )));
    }
    evaluate(problem, index, &lambda.lifted(), real_tol)
}

fn evaluate(problem: &MepProblem, index: &Multiindex, lifted: &DVector<f64>, real_tol: f64) -> Result<FEvaluation> {
    let m = problem.m();
    let hermitian = problem.is_hermitian();
    let solves: Vec<Result<(f64, CVector, Option<CVector>)>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let b = pencil(problem, k, lifted.as_slice());
            let rank = index.entries()[k];
            if hermitian {
                let (value, v) = kth_largest_hermitian(&b, rank)?;
                Ok((value, v, None))
            } else {
                let pair = kth_largest_biorthogonal(&b, rank, real_tol)?;
                Ok((pair.value, pair.right, Some(pair.left)))
            }
        })
        .collect();
    let mut values = DVector::zeros(m);
    let mut right = Vec::with_capacity(m);
    let mut left = Vec::with_capacity(m);
    for (k, solve) in solves.into_iter().enumerate() {
        let (value, v, w) = solve?;
        values[k] = value;
        right.push(v);
        if let Some(w) = w {
            left.push(w);
        }
    }
    let left = (!hermitian).then_some(left);
    Ok(FEvaluation { values, right, left })
}

/// Analytic Jacobian of `F_i` with respect to `(λ_1, ..., λ_m)` at the
/// eigenvectors of an evaluation.
pub fn jacobian(problem: &MepProblem, eval: &FEvaluation) -> Result<DMatrix<f64>> {
    Ok(w_matrix(problem, &eval.right, eval.left.as_deref())?.jacobian())
}

/// Solves `W (1, λ) = 0` for `λ ∈ R^m`.
pub fn newton_step_inhomogeneous(w: &WMatrix) -> Result<DVector<f64>> {
    let m = w.entries.nrows();
    let j = w.entries.columns(1, m).into_owned();
    let rhs = -w.entries.column(0).into_owned();
    let norm1 = |a: &CMatrix| {
        (0..a.ncols())
            .map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let lu = j.clone().lu();
    let inverse = lu.try_inverse().ok_or(MepError::SingularJacobian {
        condition: f64::INFINITY,
    })?;
    let condition = norm1(&j) * norm1(&inverse);
    if !(condition <= SINGULAR_CONDITION) {
        return Err(MepError::SingularJacobian { condition });
    }
    let x = inverse * rhs;
    Ok(x.map(|z| z.re))
}

/// Sign of `det [λ^T; W]`, from an LU factorization.
pub fn orientation(lambda: &DVector<f64>, w: &DMatrix<f64>) -> f64 {
    let m = w.nrows();
    let mut a = DMatrix::zeros(m + 1, m + 1);
    a.row_mut(0).copy_from(&lambda.transpose());
    a.rows_mut(1, m).copy_from(w);
    let lu = a.lu();
    let mut sign: f64 = lu.p().determinant();
    for d in lu.u().diagonal().iter() {
        if *d == 0.0 {
            return 0.0;
        }
        sign *= d.signum();
    }
    sign
}

/// Unit null vector `λ` of the real `m x (m + 1)` matrix `W`, oriented so that
/// `det [λ^T; W]` has the sign `sign`.
pub fn newton_step_homogeneous(w: &WMatrix, sign: Sign) -> Result<DVector<f64>> {
    let real = w.real();
    let m = real.nrows();
    let mut padded = DMatrix::zeros(m + 1, m + 1);
    padded.rows_mut(0, m).copy_from(&real);
    let svd = SVD::new(padded, false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| MepError::EigenDecomposition("SVD did not return right vectors".into()))?;
    let mut order: Vec<usize> = (0..=m).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let second = if m >= 1 { svd.singular_values[order[1]] } else { 0.0 };
    let scale = real.norm();
    if !(second >= RANK_TOL * scale) || scale == 0.0 {
        return Err(MepError::RankDeficient { sigma: second });
    }
    let mut lambda: DVector<f64> = v_t.row(order[0]).transpose();
    lambda.unscale_mut(lambda.norm());
    if orientation(&lambda, &real) * sign.as_f64() < 0.0 {
        lambda.neg_mut();
    }
    Ok(lambda)
}

/// Starting vectors for a solve; left vectors are used only for non-Hermitian
/// problems and default to the right ones.
#[derive(Clone, Debug)]
pub struct InitialVectors {
    pub right: Vec<CVector>,
    pub left: Option<Vec<CVector>>,
}

impl InitialVectors {
    pub fn right(right: Vec<CVector>) -> Self {
        Self { right, left: None }
    }

    /// Vectors of a previous solve, for warm starts.
    pub fn from_pair(pair: &Eigenpair) -> Self {
        Self {
            right: pair.right.clone(),
            left: pair.left.clone(),
        }
    }
}

/// Unit vectors with independent standard normal entries, one per equation.
pub fn random_vectors(problem: &MepProblem, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let complex = !problem.is_real();
    problem
        .dims()
        .iter()
        .map(|&n| {
            let mut v = CVector::from_fn(n, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = if complex { StandardNormal.sample(&mut rng) } else { 0.0 };
                Complex64::new(re, im)
            });
            let norm = v.norm();
            v.unscale_mut(norm);
            v
        })
        .collect()
}

/// Semismooth Newton iteration for `target`, damped when `config.globalize`
/// is set. Hermitian problems use the right definite (index target) or
/// locally definite (signed target) iteration; non-Hermitian problems use
/// left and right eigenvectors and need an index target.
pub fn solve(
    problem: &MepProblem,
    target: &Target,
    config: &SolverConfig,
    initial: Option<InitialVectors>,
) -> Result<SolveReport> {
    iterate(problem, target, config, initial, config.globalize)
}

/// Damped iteration for an inhomogeneous target, regardless of
/// `config.globalize`.
pub fn solve_globalized(
    problem: &MepProblem,
    index: &Multiindex,
    config: &SolverConfig,
    initial: Option<InitialVectors>,
) -> Result<SolveReport> {
    iterate(problem, &Target::Index(index.clone()), config, initial, true)
}

struct State {
    lifted: DVector<f64>,
    eval: FEvaluation,
    residual: f64,
}

fn iterate(
    problem: &MepProblem,
    target: &Target,
    config: &SolverConfig,
    initial: Option<InitialVectors>,
    globalize: bool,
) -> Result<SolveReport> {
    let start = Instant::now();
    config.validate()?;
    let index = target.multiindex();
    index.check(problem.dims())?;
    if !problem.is_hermitian() && matches!(target, Target::Signed(..)) {
        return Err(MepError::InvalidConfig(
            "signed targets need a Hermitian problem".into(),
        ));
    }

    let (mut right, mut left) = match initial {
        Some(init) => {
            check_vectors(problem, &init.right)?;
            let left = match init.left {
                Some(l) => {
                    check_vectors(problem, &l)?;
                    l
                }
                None => init.right.clone(),
            };
            (init.right, left)
        }
        None => {
            let r = random_vectors(problem, config.seed);
            (r.clone(), r)
        }
    };
    let hermitian = problem.is_hermitian();

    let mut residuals = Vec::new();
    let mut iterates = Vec::new();
    let mut damping = Vec::new();
    let mut previous: Option<State> = None;
    let mut status = SolveStatus::MaxIterations;

    for j in 1..=config.max_iter {
        let step = || -> Result<(State, usize)> {
            let w = w_matrix(problem, &right, (!hermitian).then_some(left.as_slice()))?;
            let mut lifted = match target {
                Target::Index(_) => lift(&newton_step_inhomogeneous(&w)?),
                Target::Signed(_, sign) => newton_step_homogeneous(&w, *sign)?,
            };
            let mut eval = evaluate(problem, index, &lifted, config.real_tol)?;
            let mut residual = eval.norm_inf();
            let mut rounds = 0;
            if globalize {
                if let Some(prev) = &previous {
                    while !(residual < prev.residual) {
                        if rounds == config.max_damping {
                            return Err(MepError::StallDetected { rounds });
                        }
                        lifted = &lifted * config.tau + &prev.lifted * (1.0 - config.tau);
                        if matches!(target, Target::Signed(..)) {
                            lifted.unscale_mut(lifted.norm());
                        }
                        eval = evaluate(problem, index, &lifted, config.real_tol)?;
                        residual = eval.norm_inf();
                        rounds += 1;
                    }
                }
            }
            Ok((State { lifted, eval, residual }, rounds))
        };
        let (state, rounds) = step().map_err(|e| e.at_iteration(j))?;
        residuals.push(state.residual);
        iterates.push(state.lifted.clone());
        damping.push(rounds);
        right = state.eval.right.clone();
        if let Some(l) = &state.eval.left {
            left = l.clone();
        }
        let done = state.residual <= config.tol;
        previous = Some(state);
        if done {
            status = SolveStatus::Converged;
            break;
        }
    }

    let last = previous.expect("max_iter >= 1");
    let lambda = match target {
        Target::Index(_) => Lambda::Inhomogeneous(last.lifted.rows(1, problem.m()).into_owned()),
        Target::Signed(..) => Lambda::Homogeneous(last.lifted.clone()),
    };
    let pair = Eigenpair {
        lambda,
        right: last.eval.right,
        left: last.eval.left,
        multiindex: index.clone(),
        sign: target.sign(),
    };
    Ok(SolveReport {
        status,
        iterations: residuals.len(),
        residuals,
        iterates,
        damping,
        pair,
        wall_time: start.elapsed(),
    })
}

fn lift(lambda: &DVector<f64>) -> DVector<f64> {
    Lambda::Inhomogeneous(lambda.clone()).lifted()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{gen_laguerre, volkmer_example, Family, RandomSpec};
    use crate::problem::residual;

    fn diag(d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(d))
    }

    fn e(i: usize, n: usize) -> CVector {
        let mut v = CVector::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    fn toy() -> MepProblem {
        MepProblem::from_real(vec![vec![diag(&[1.0, 2.0]), DMatrix::identity(2, 2)]], true).unwrap()
    }

    #[test]
    fn w_matrix_volkmer_first_coordinates() {
        let p = volkmer_example();
        let w = w_matrix(&p, &[e(0, 4), e(0, 4), e(0, 4)], None).unwrap().real();
        let expected = DMatrix::from_row_slice(3, 4, &[1.0, 1.0, 5.0, -1.0, 1.0, 1.0, -1.0, 5.0, 5.0, -1.0, 1.0, 1.0]);
        assert_eq!(w, expected);
    }

    #[test]
    fn w_matrix_scalar_problem_reads_entries() {
        let entries = [[2.0, 1.0, 0.5], [-1.0, 0.25, 3.0]];
        let p = MepProblem::from_real(
            entries
                .iter()
                .map(|row| row.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect())
                .collect(),
            true,
        )
        .unwrap();
        let w = w_matrix(&p, &[e(0, 1), e(0, 1)], None).unwrap().real();
        assert_eq!(w, DMatrix::from_row_slice(2, 3, &[2.0, 1.0, 0.5, -1.0, 0.25, 3.0]));
    }

    #[test]
    fn w_matrix_toy_second_coordinate() {
        let w = w_matrix(&toy(), &[e(1, 2)], None).unwrap().real();
        assert_eq!(w, DMatrix::from_row_slice(1, 2, &[2.0, 1.0]));
    }

    #[test]
    fn w_matrix_dimension_mismatch() {
        assert!(w_matrix(&toy(), &[e(0, 3)], None).is_err());
        assert!(w_matrix(&toy(), &[], None).is_err());
    }

    #[test]
    fn f_index_toy() {
        let f = f_index(&toy(), &Multiindex::ones(1), &Lambda::Inhomogeneous(DVector::zeros(1))).unwrap();
        assert_eq!(f.values[0], 2.0);
    }

    #[test]
    fn f_index_volkmer() {
        let p = volkmer_example();
        let s = 12f64.sqrt();
        let l4 = Lambda::Homogeneous(DVector::from_row_slice(&[3.0, 1.0, 1.0, 1.0]) / s);
        let f = f_index(&p, &Multiindex::from_vec(vec![4, 4, 4]), &l4).unwrap();
        assert!(f.norm_inf() < 1e-15);
        let e0 = Lambda::Homogeneous(DVector::from_row_slice(&[1.0, 0.0, 0.0, 0.0]));
        let f = f_index(&p, &Multiindex::ones(3), &e0).unwrap();
        assert_eq!(f.values.as_slice(), &[5.0, 5.0, 5.0]);
    }

    #[test]
    fn inhomogeneous_step_examples() {
        let step = |rows: usize, data: &[f64]| {
            newton_step_inhomogeneous(&WMatrix::from_real(DMatrix::from_row_slice(rows, rows + 1, data)))
        };
        assert!((step(1, &[3.0, 2.0]).unwrap()[0] + 1.5).abs() < 1e-15);
        assert_eq!(step(2, &[0.0, 1.0, 2.0, 0.0, 3.0, 4.0]).unwrap(), DVector::zeros(2));
        let l = step(2, &[1.0, 2.0, 0.0, 1.0, 0.0, 2.0]).unwrap();
        assert!((l - DVector::from_row_slice(&[-0.5, -0.5])).norm() < 1e-15);
    }

    #[test]
    fn singular_jacobian_is_reported() {
        let w = WMatrix::from_real(DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]));
        assert_eq!(newton_step_inhomogeneous(&w).unwrap_err().name(), "SingularJacobian");
        let w = WMatrix::from_real(DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0 + 1e-16]));
        assert_eq!(newton_step_inhomogeneous(&w).unwrap_err().name(), "SingularJacobian");
    }

    #[test]
    fn homogeneous_step_scalar() {
        let w = WMatrix::from_real(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        let s = 0.5f64.sqrt();
        for sign in [Sign::Plus, Sign::Minus] {
            let l = newton_step_homogeneous(&w, sign).unwrap();
            assert!((l[0].abs() - s).abs() < 1e-15 && (l[0] + l[1]).abs() < 1e-15);
            assert_eq!(orientation(&l, &w.real()), sign.as_f64());
        }
    }

    #[test]
    fn homogeneous_step_coordinate_nullspace() {
        let w = WMatrix::from_real(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]));
        let l = newton_step_homogeneous(&w, Sign::Plus).unwrap();
        assert!((l.abs() - DVector::from_row_slice(&[0.0, 0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn homogeneous_step_volkmer_lambda4() {
        let w = WMatrix::from_real(DMatrix::from_row_slice(
            3,
            4,
            &[1.0, 1.0, 1.0, -5.0, 1.0, 1.0, -5.0, 1.0, 1.0, -5.0, 1.0, 1.0],
        ));
        let l = newton_step_homogeneous(&w, Sign::Plus).unwrap();
        let expected = DVector::from_row_slice(&[3.0, 1.0, 1.0, 1.0]) / 12f64.sqrt();
        assert!((l - expected).norm() < 1e-14);
    }

    #[test]
    fn rank_deficient_is_reported() {
        let w = WMatrix::from_real(DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]));
        assert_eq!(
            newton_step_homogeneous(&w, Sign::Plus).unwrap_err().name(),
            "RankDeficient"
        );
    }

    #[test]
    fn scalar_problem_converges_in_one_step() {
        let entries = [[2.0, 1.0, 0.5], [-1.0, 0.25, 3.0]];
        let p = MepProblem::from_real(
            entries
                .iter()
                .map(|row| row.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect())
                .collect(),
            true,
        )
        .unwrap();
        let report = solve(&p, &Target::Index(Multiindex::ones(2)), &SolverConfig::default(), None).unwrap();
        assert!(report.converged());
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn volkmer_signed_target() {
        let p = volkmer_example();
        let target = Target::Signed(Multiindex::from_vec(vec![1, 1, 4]), Sign::Plus);
        let init = InitialVectors::right(vec![
            e(0, 4).add_scalar(Complex64::new(0.1, 0.0)).normalize(),
            e(0, 4).add_scalar(Complex64::new(0.1, 0.0)).normalize(),
            e(0, 4).add_scalar(Complex64::new(0.1, 0.0)).normalize(),
        ]);
        let report = solve(&p, &target, &SolverConfig::default(), Some(init)).unwrap();
        assert!(report.converged());
        let expected = DVector::from_row_slice(&[-1.0, -3.0, 1.0, 1.0]) / 12f64.sqrt();
        assert!((report.pair.lambda.lifted() - expected).amax() < 1e-12);
        for v in &report.pair.right {
            assert!((v[0].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_is_stationary() {
        let p = gen_laguerre(&RandomSpec {
            n: 4,
            m: 2,
            seed: 3,
            family: Family::Laguerre,
        })
        .unwrap();
        let idx = Multiindex::from_vec(vec![2, 3]);
        let cfg = SolverConfig {
            globalize: true,
            ..Default::default()
        };
        let report = solve(&p, &Target::Index(idx.clone()), &cfg, None).unwrap();
        assert!(report.converged());
        let again = solve(
            &p,
            &Target::Index(idx),
            &SolverConfig::default(),
            Some(InitialVectors::from_pair(&report.pair)),
        )
        .unwrap();
        assert_eq!(again.iterations, 1);
        assert!(again.final_residual() <= 1e-12);
        assert!((again.pair.lambda.lifted() - report.pair.lambda.lifted()).amax() < 1e-12);
        assert!(residual(&p, &again.pair).unwrap() < 1e-11);
    }

    #[test]
    fn invalid_target_and_config() {
        let p = toy();
        let bad = Target::Index(Multiindex::from_vec(vec![3]));
        assert_eq!(
            solve(&p, &bad, &SolverConfig::default(), None).unwrap_err().name(),
            "InvalidMultiindex"
        );
        let cfg = SolverConfig {
            tau: 0.0,
            ..Default::default()
        };
        let ok = Target::Index(Multiindex::ones(1));
        assert_eq!(solve(&p, &ok, &cfg, None).unwrap_err().name(), "InvalidConfig");
    }

    #[test]
    fn report_invariants() {
        let p = gen_laguerre(&RandomSpec {
            n: 5,
            m: 3,
            seed: 1,
            family: Family::Laguerre,
        })
        .unwrap();
        let cfg = SolverConfig {
            globalize: true,
            seed: 9,
            ..Default::default()
        };
        let report = solve(&p, &Target::Index(Multiindex::from_vec(vec![2, 1, 4])), &cfg, None).unwrap();
        assert_eq!(report.residuals.len(), report.iterations);
        assert_eq!(report.iterates.len(), report.iterations);
        if report.converged() {
            assert!(report.final_residual() <= cfg.tol);
        }
        for v in &report.pair.right {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn damping_never_increases_residual() {
        for seed in 0..5 {
            let p = gen_laguerre(&RandomSpec {
                n: 6,
                m: 3,
                seed,
                family: Family::Laguerre,
            })
            .unwrap();
            let cfg = SolverConfig {
                seed,
                ..Default::default()
            };
            for idx in [vec![1, 1, 1], vec![3, 6, 2], vec![6, 6, 6]] {
                let Ok(report) = solve_globalized(&p, &Multiindex::from_vec(idx), &cfg, None) else {
                    continue;
                };
                for pair in report.residuals.windows(2) {
                    assert!(pair[1] < pair[0]);
                }
            }
        }
    }

    #[test]
    fn first_damping_event_is_convex_combination() {
        let mut seen = 0;
        for seed in 0..40 {
            let p = gen_laguerre(&RandomSpec {
                n: 6,
                m: 3,
                seed,
                family: Family::Laguerre,
            })
            .unwrap();
            let idx = Multiindex::from_vec(vec![3, 2, 4]);
            let cfg = SolverConfig {
                seed,
                max_iter: 12,
                ..Default::default()
            };
            let Ok(plain) = solve(&p, &Target::Index(idx.clone()), &cfg, None) else {
                continue;
            };
            let Ok(damped) = solve_globalized(&p, &idx, &cfg, None) else {
                continue;
            };
            let Some(j) = damped.damping.iter().position(|&r| r > 0) else {
                continue;
            };
            if j >= plain.iterates.len() {
                continue;
            }
            for i in 0..j {
                assert!((&plain.iterates[i] - &damped.iterates[i]).amax() < 1e-14);
            }
            let weight = cfg.tau.powi(damped.damping[j] as i32);
            let expected = &plain.iterates[j] * weight + &damped.iterates[j - 1] * (1.0 - weight);
            assert!((expected - &damped.iterates[j]).amax() < 1e-12);
            assert!(damped.residuals[j] < damped.residuals[j - 1]);
            seen += 1;
        }
        assert!(seen > 0);
    }
}
