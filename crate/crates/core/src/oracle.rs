//! Brute-force reference spectra from operator determinants.
//!
//! On the tensor product space `C^{n_1} ⊗ ... ⊗ C^{n_m}` the problem becomes
//! the family of generalized eigenproblems `λ_l Δ_j x = λ_j Δ_l x` with
//! `Δ_l` the cofactor expansion of the operator determinant whose first row
//! is `e_l`. This costs `O((Π n_k)^3)` and is meant for small instances only.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::eig::{
    general_eigenvectors, hermitian_spectrum, kth_largest_biorthogonal, kth_largest_hermitian, real_spectrum,
};
use crate::error::{MepError, Result};
use crate::gallery::check_definite_sampled;
use crate::newton::orientation;
use crate::problem::{multiindex_of_with, CMatrix, CVector, Lambda, MepProblem, Multiindex};

/// Largest tensor space handled.
pub const MAX_SIZE: usize = 4096;
/// Largest number of parameters handled.
pub const MAX_PARAMETERS: usize = 5;
/// Relative eigenvector consistency required across all `Δ_l`.
pub const COMMUTING_TOL: f64 = 1e-8;

const MU_DRAWS: usize = 100;
const SIGN_SAMPLES: usize = 100;
const COMBINATION_SEED: u64 = 0x5eed_0f_de17a;

#[derive(Clone, Debug)]
pub struct DeltaOperators {
    /// `Δ_0, ..., Δ_m`.
    pub parts: Vec<CMatrix>,
    /// `Σ_l μ_l Δ_l` when a `μ` was supplied.
    pub combined: Option<CMatrix>,
}

impl DeltaOperators {
    pub fn size(&self) -> usize {
        self.parts[0].nrows()
    }

    pub fn combine(&self, mu: &DVector<f64>) -> CMatrix {
        let n = self.size();
        let mut out = CMatrix::zeros(n, n);
        for (d, &c) in self.parts.iter().zip(mu.iter()) {
            if c != 0.0 {
                out.zip_apply(d, |x, y| *x += y * c);
            }
        }
        out
    }
}

fn permutations(m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut all = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut all);
    all.into_iter()
        .map(|p| {
            let inversions = (0..m)
                .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

/// Builds `Δ_0, ..., Δ_m` (and `Σ μ_l Δ_l` when `mu` is given).
pub fn build_delta(problem: &MepProblem, mu: Option<&DVector<f64>>) -> Result<DeltaOperators> {
    let m = problem.m();
    let size = problem.index_count();
    if size > MAX_SIZE {
        return Err(MepError::OracleTooLarge { size, limit: MAX_SIZE });
    }
    if m > MAX_PARAMETERS {
        return Err(MepError::InvalidConfig(format!(
            "the oracle handles at most {MAX_PARAMETERS} parameters, got {m}"
        )));
    }
    if let Some(mu) = mu {
        if mu.len() != m + 1 {
            return Err(MepError::DimensionMismatch(format!(
                "μ has {} entries, expected {}",
                mu.len(),
                m + 1
            )));
        }
    }
    let perms = permutations(m);
    let mut parts = Vec::with_capacity(m + 1);
    for l in 0..=m {
        let cols: Vec<usize> = (0..=m).filter(|&c| c != l).collect();
        let mut delta = CMatrix::zeros(size, size);
        for (perm, sign) in &perms {
            let mut product = problem.matrix(0, cols[perm[0]]).clone();
            for k in 1..m {
                product = product.kronecker(problem.matrix(k, cols[perm[k]]));
            }
            let s = if l % 2 == 0 { *sign } else { -*sign };
            delta.zip_apply(&product, |x, y| *x += y * s);
        }
        parts.push(delta);
    }
    let mut ops = DeltaOperators { parts, combined: None };
    if let Some(mu) = mu {
        ops.combined = Some(ops.combine(mu));
    }
    Ok(ops)
}

/// Smallest eigenvalue of the Hermitian part is positive relative to its norm.
pub fn is_positive_definite(a: &CMatrix) -> bool {
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    match hermitian_spectrum(&h) {
        Ok(values) => {
            let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            values.last().is_some_and(|&min| min > 1e-14 * scale)
        }
        Err(_) => false,
    }
}

fn condition(a: &CMatrix) -> f64 {
    let s = a.clone().singular_values();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        s.max() / min
    }
}

fn e0(m: usize) -> DVector<f64> {
    let mut e = DVector::zeros(m + 1);
    e[0] = 1.0;
    e
}

/// Picks `μ`: `e_0` when `Δ(e_0)` is positive definite, else the first random
/// unit `μ` for which `det [μ^T; W(u)]` keeps one sign over sampled `u`, else
/// the sampled `μ` with the best conditioned `Δ(μ)`.
pub fn choose_mu(problem: &MepProblem, ops: &DeltaOperators) -> DVector<f64> {
    let m = problem.m();
    let e = e0(m);
    if is_positive_definite(&ops.combine(&e)) {
        return e;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(COMBINATION_SEED ^ 0x6d75);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for draw in 0..MU_DRAWS {
        let mut mu = DVector::from_fn(m + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        mu.unscale_mut(mu.norm());
        for candidate in [mu.clone(), -mu.clone()] {
            if check_definite_sampled(problem, &candidate, SIGN_SAMPLES, draw as u64).pass {
                return candidate;
            }
        }
        if draw < 20 {
            let cond = condition(&ops.combine(&mu));
            if best.as_ref().is_none_or(|(c, _)| cond < *c) {
                best = Some((cond, mu));
            }
        }
    }
    best.map(|(_, mu)| mu).unwrap_or(e)
}

/// One joint eigenvalue of the tensor form.
#[derive(Clone, Debug)]
pub struct OracleEigenvalue {
    /// Homogeneous unit eigenvalue, oriented into `P^+` for Hermitian
    /// problems (so that `det [λ^T; W(u)] > 0`) and into `μ^T λ > 0` otherwise.
    pub lambda: DVector<f64>,
    pub multiindex: Multiindex,
    /// Position of the largest entry of the tensor eigenvector, as one-based
    /// per-factor coordinates.
    pub tensor_index: Multiindex,
}

#[derive(Clone, Debug)]
pub struct OracleSpectrum {
    pub mu: DVector<f64>,
    pub eigenvalues: Vec<OracleEigenvalue>,
}

impl OracleSpectrum {
    pub fn lambdas(&self) -> Vec<DVector<f64>> {
        self.eigenvalues.iter().map(|e| e.lambda.clone()).collect()
    }

    /// True when every multiindex of the grid appears exactly once.
    pub fn is_bijection(&self, dims: &[usize]) -> bool {
        labels_form_bijection(self.eigenvalues.iter().map(|e| &e.multiindex), dims)
    }
}

pub fn labels_form_bijection<'a>(labels: impl Iterator<Item = &'a Multiindex>, dims: &[usize]) -> bool {
    let mut counts: HashMap<&Multiindex, usize> = HashMap::new();
    for label in labels {
        if label.check(dims).is_err() {
            return false;
        }
        *counts.entry(label).or_default() += 1;
    }
    let total: usize = dims.iter().product();
    counts.len() == total && counts.values().all(|&c| c == 1)
}

/// All `Π n_k` joint eigenvalues. `mu` defaults to [`choose_mu`].
pub fn solve_all(problem: &MepProblem, mu: Option<&DVector<f64>>) -> Result<OracleSpectrum> {
    let m = problem.m();
    let ops = build_delta(problem, None)?;
    let mu = match mu {
        Some(mu) => {
            if mu.len() != m + 1 {
                return Err(MepError::DimensionMismatch(format!(
                    "μ has {} entries, expected {}",
                    mu.len(),
                    m + 1
                )));
            }
            mu.clone()
        }
        None => choose_mu(problem, &ops),
    };
    let delta = ops.combine(&mu);
    let delta_inv = delta.clone().try_inverse().ok_or(MepError::SingularDelta)?;
    if !(condition(&delta) < 1e14) {
        return Err(MepError::SingularDelta);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(COMBINATION_SEED);
    let weights: Vec<f64> = (0..=m).map(|_| rng.sample(StandardNormal)).collect();
    let mix = ops.combine(&DVector::from_vec(weights));
    let gamma = &delta_inv * mix;

    let norms: Vec<f64> = ops.parts.iter().map(|d| d.norm()).collect();
    let mut eigenvalues = Vec::with_capacity(ops.size());
    for (_, x) in general_eigenvectors(&gamma)? {
        let dx = &delta * &x;
        let denom = dx.norm_squared();
        let mut nu = DVector::zeros(m + 1);
        let mut defect: f64 = 0.0;
        for (l, d) in ops.parts.iter().enumerate() {
            let dlx = d * &x;
            let ratio = dx.dotc(&dlx) / denom;
            defect = defect.max((&dlx - &dx * ratio).norm() / norms[l].max(f64::MIN_POSITIVE));
            nu[l] = ratio.re;
        }
        if defect > COMMUTING_TOL {
            return Err(MepError::NonCommuting { defect });
        }
        let mut lambda = nu.clone();
        lambda.unscale_mut(lambda.norm());
        if orient(problem, &lambda, &mu)? < 0.0 {
            lambda.neg_mut();
        }
        let multiindex = multiindex_of_with(problem, &Lambda::Homogeneous(lambda.clone()), 1e-8)?;
        let tensor_index = tensor_position(&x, problem.dims());
        eigenvalues.push(OracleEigenvalue {
            lambda,
            multiindex,
            tensor_index,
        });
    }
    label_clusters(problem, &mut eigenvalues)?;
    Ok(OracleSpectrum { mu, eigenvalues })
}

/// Distance below which two joint eigenvalues count as one.
const CLUSTER_TOL: f64 = 1e-8;

/// Gives every member of a multiple joint eigenvalue its own multiindex when
/// the zero eigenvalues of the pencils account for the whole multiplicity.
fn label_clusters(problem: &MepProblem, eigenvalues: &mut [OracleEigenvalue]) -> Result<()> {
    let n = eigenvalues.len();
    let mut cluster = vec![usize::MAX; n];
    for i in 0..n {
        if cluster[i] != usize::MAX {
            continue;
        }
        cluster[i] = i;
        let mut stack = vec![i];
        while let Some(a) = stack.pop() {
            for b in 0..n {
                if cluster[b] == usize::MAX && (&eigenvalues[a].lambda - &eigenvalues[b].lambda).norm() < CLUSTER_TOL {
                    cluster[b] = i;
                    stack.push(b);
                }
            }
        }
    }
    for root in 0..n {
        let members: Vec<usize> = (0..n).filter(|&i| cluster[i] == root).collect();
        if members.len() < 2 {
            continue;
        }
        let lambda = eigenvalues[root].lambda.as_slice().to_vec();
        let mut ranges = Vec::with_capacity(problem.m());
        for k in 0..problem.m() {
            let b = crate::problem::pencil(problem, k, &lambda);
            let spectrum = if problem.is_hermitian() {
                hermitian_spectrum(&b)?
            } else {
                real_spectrum(&b, 1e-8)?
            };
            let scale = spectrum.iter().fold(f64::MIN_POSITIVE, |acc, v| acc.max(v.abs()));
            let zeros: Vec<usize> = (0..spectrum.len())
                .filter(|&i| spectrum[i].abs() <= CLUSTER_TOL * scale)
                .map(|i| i + 1)
                .collect();
            ranges.push(zeros);
        }
        let product: usize = ranges.iter().map(Vec::len).product();
        if product != members.len() {
            continue;
        }
        let counts: Vec<usize> = ranges.iter().map(Vec::len).collect();
        for (member, position) in members.into_iter().zip(Multiindex::grid(&counts)) {
            let entries = position.entries().iter().zip(&ranges).map(|(&p, r)| r[p - 1]).collect();
            eigenvalues[member].multiindex = Multiindex::from_vec(entries);
        }
    }
    Ok(())
}

/// Sign used to orient `λ` into the positive component.
fn orient(problem: &MepProblem, lambda: &DVector<f64>, mu: &DVector<f64>) -> Result<f64> {
    if !problem.is_hermitian() {
        return Ok(mu.dot(lambda).signum());
    }
    let multiindex = multiindex_of_with(problem, &Lambda::Homogeneous(lambda.clone()), 1e-8)?;
    let lifted = lambda.as_slice();
    let mut w = DMatrix::zeros(problem.m(), problem.m() + 1);
    for k in 0..problem.m() {
        let b = crate::problem::pencil(problem, k, lifted);
        let u = if problem.is_hermitian() {
            kth_largest_hermitian(&b, multiindex.entries()[k])?.1
        } else {
            kth_largest_biorthogonal(&b, multiindex.entries()[k], 1e-8)?.right
        };
        for l in 0..=problem.m() {
            w[(k, l)] = u.dotc(&(problem.matrix(k, l) * &u)).re;
        }
    }
    Ok(orientation(lambda, &w))
}

fn tensor_position(x: &CVector, dims: &[usize]) -> Multiindex {
    let mut best = 0;
    for i in 0..x.len() {
        if x[i].norm() > x[best].norm() {
            best = i;
        }
    }
    let mut entries = vec![0; dims.len()];
    for (e, &n) in entries.iter_mut().zip(dims).rev() {
        *e = best % n + 1;
        best /= n;
    }
    Multiindex::from_vec(entries)
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let directed = |x: &[DVector<f64>], y: &[DVector<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
