use nalgebra::{DMatrix, DVector};

use crate::eig::hermitian_spectrum;
use crate::newton::{random_vectors, w_matrix};
use crate::problem::{CVector, MepProblem, Multiindex};
use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use num_complex::Complex64;

/// Coordinate tuples are added to the random samples up to this many.
const COORDINATE_LIMIT: usize = 4096;

/// Outcome of a sampled definiteness check. A failure is a certificate with
/// the offending vectors; a pass is only evidence.
#[derive(Clone, Debug)]
pub struct DefinitenessReport {
    pub pass: bool,
    /// Smallest value of the checked quantity over all samples.
    pub worst_margin: f64,
    pub samples: usize,
    /// Vectors attaining the worst margin.
    pub witness: Option<Vec<CVector>>,
}

fn coordinate(i: usize, n: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = Complex64::new(1.0, 0.0);
    v
}

/// Coordinate tuples (for small problems) followed by `samples` random tuples.
fn sample_tuples(problem: &MepProblem, samples: usize, seed: u64) -> impl Iterator<Item = Vec<CVector>> + '_ {
    let dims = problem.dims();
    let coords = (problem.index_count() <= COORDINATE_LIMIT)
        .then(|| {
            Multiindex::grid(dims).map(move |i| {
                i.entries()
                    .iter()
                    .zip(dims)
                    .map(|(&i, &n)| coordinate(i - 1, n))
                    .collect::<Vec<_>>()
            })
        })
        .into_iter()
        .flatten();
    let random = (0..samples as u64)
        .map(move |s| random_vectors(problem, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(s)));
    coords.chain(random)
}

fn w_real(problem: &MepProblem, u: &[CVector]) -> DMatrix<f64> {
    w_matrix(problem, u, None)
        .expect("sampled vectors match the problem")
        .real()
}

fn minimize<F>(problem: &MepProblem, samples: usize, seed: u64, mut margin: F) -> DefinitenessReport
where
    F: FnMut(&DMatrix<f64>) -> f64,
{
    let mut worst = f64::INFINITY;
    let mut witness = None;
    let mut count = 0;
    for u in sample_tuples(problem, samples, seed) {
        let value = margin(&w_real(problem, &u));
        count += 1;
        if value < worst {
            worst = value;
            witness = Some(u);
        }
    }
    DefinitenessReport {
        pass: worst > 0.0,
        worst_margin: worst,
        samples: count,
        witness,
    }
}

fn det_with_first_row(first: &DVector<f64>, w: &DMatrix<f64>) -> f64 {
    let m = w.nrows();
    let mut a = DMatrix::zeros(m + 1, m + 1);
    a.row_mut(0).copy_from(&first.transpose());
    a.rows_mut(1, m).copy_from(w);
    a.determinant()
}

/// Samples `det [μ^T; W(u)] > 0`.
pub fn check_definite_sampled(
    problem: &MepProblem,
    mu: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> DefinitenessReport {
    assert_eq!(mu.len(), problem.m() + 1, "μ needs m + 1 entries");
    minimize(problem, samples, seed, |w| det_with_first_row(mu, w))
}

/// Definiteness with respect to `μ = (1, 0, ..., 0)`.
pub fn check_right_definite_sampled(problem: &MepProblem, samples: usize, seed: u64) -> DefinitenessReport {
    let mut e0 = DVector::zeros(problem.m() + 1);
    e0[0] = 1.0;
    check_definite_sampled(problem, &e0, samples, seed)
}

/// Left definiteness with respect to `μ = (0, μ_1, ..., μ_m)`: every `A[k][0]`
/// negative definite (checked exactly) and, for each `k`, the determinant of
/// `J(u)` with row `k` replaced by `(μ_1, ..., μ_m)` positive (sampled).
pub fn check_left_definite_sampled(
    problem: &MepProblem,
    mu: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> DefinitenessReport {
    let m = problem.m();
    assert_eq!(mu.len(), m + 1, "μ needs m + 1 entries");
    let mut a0_margin = f64::INFINITY;
    for k in 0..m {
        let top = match hermitian_spectrum(problem.matrix(k, 0)) {
            Ok(s) => s[0],
            Err(_) => f64::INFINITY,
        };
        a0_margin = a0_margin.min(-top);
    }
    let tail = mu.rows(1, m).transpose();
    let mut report = minimize(problem, samples, seed, |w| {
        let j = w.columns(1, m).into_owned();
        (0..m)
            .map(|k| {
                let mut replaced = j.clone();
                replaced.row_mut(k).copy_from(&tail);
                replaced.determinant()
            })
            .fold(f64::INFINITY, f64::min)
    });
    if a0_margin < report.worst_margin {
        report.worst_margin = a0_margin;
        report.witness = None;
    }
    report.pass = report.worst_margin > 0.0;
    report
}

/// Largest `t` such that some `α` in the unit box has `s·α ≥ t` for every
/// row `s`.
fn box_margin(signed: &[DVector<f64>], dim: usize) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let alpha: Vec<_> = (0..dim).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for s in signed {
        let mut expr = LinearExpr::empty();
        for (v, c) in alpha.iter().zip(s.iter()) {
            expr.add(*v, *c);
        }
        expr.add(t, -1.0);
        lp.add_constraint(expr, ComparisonOp::Ge, 0.0);
    }
    match lp.solve().map(|o| o.into_solution()) {
        Ok(Ok(solution)) => solution.objective(),
        _ => f64::NEG_INFINITY,
    }
}

/// For every sign pattern `σ ∈ {-1, 1}^m`, solves the linear program
/// `max t` over `|α_i| ≤ 1` with `σ_k W_k(u_k) α ≥ t` on every sampled
/// (normalized) row. Patterns `σ` and `-σ` share a margin. The report holds
/// the worst pattern.
pub fn check_local_definite_sampled(problem: &MepProblem, samples: usize, seed: u64) -> DefinitenessReport {
    let m = problem.m();
    let mut rows: Vec<Vec<DVector<f64>>> = vec![Vec::new(); m];
    let mut count = 0;
    for u in sample_tuples(problem, samples, seed) {
        let w = w_real(problem, &u);
        for (k, bucket) in rows.iter_mut().enumerate() {
            let r = w.row(k).transpose();
            let norm = r.norm();
            bucket.push(if norm > 0.0 { r / norm } else { r });
        }
        count += 1;
    }

    let mut worst = f64::INFINITY;
    for pattern in 0..(1usize << (m - 1)) {
        let signed: Vec<DVector<f64>> = rows
            .iter()
            .enumerate()
            .flat_map(|(k, bucket)| {
                let s = if pattern >> k & 1 == 1 { -1.0 } else { 1.0 };
                bucket.iter().map(move |r| r * s)
            })
            .collect();
        worst = worst.min(box_margin(&signed, m + 1));
    }
    DefinitenessReport {
        pass: worst > 0.0,
        worst_margin: worst,
        samples: count,
        witness: None,
    }
}
