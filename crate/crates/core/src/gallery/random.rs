use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MepError, Result};
use crate::problem::MepProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Laguerre polynomials of random diagonal matrices.
    Laguerre,
    /// Near-identity diagonal blocks with small orthogonally rotated couplings.
    WellConditioned,
    /// Right definite and left definite with respect to [`left_right_mu`].
    LeftRight,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Laguerre => "laguerre",
            Family::WellConditioned => "well-conditioned",
            Family::LeftRight => "left-right",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = MepError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laguerre" => Ok(Family::Laguerre),
            "well-conditioned" => Ok(Family::WellConditioned),
            "left-right" => Ok(Family::LeftRight),
            other => Err(MepError::InvalidConfig(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomSpec {
    /// Size of every matrix.
    pub n: usize,
    /// Number of spectral parameters.
    pub m: usize,
    pub seed: u64,
    pub family: Family,
}

impl RandomSpec {
    fn validate(&self, family: Family) -> Result<()> {
        if self.family != family {
            return Err(MepError::InvalidConfig(format!(
                "spec is for family {}, expected {family}",
                self.family
            )));
        }
        if self.n < 2 || self.m < 2 {
            return Err(MepError::InvalidConfig(format!(
                "random problems need n >= 2 and m >= 2, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        Ok(())
    }

    /// Identifier used in benchmark output, e.g. `laguerre-n4-m3-s7`.
    pub fn id(&self) -> String {
        format!("{}-n{}-m{}-s{}", self.family, self.n, self.m, self.seed)
    }
}

/// Dispatches on `spec.family`.
pub fn generate(spec: &RandomSpec) -> Result<MepProblem> {
    match spec.family {
        Family::Laguerre => gen_laguerre(spec),
        Family::WellConditioned => gen_well_conditioned(spec),
        Family::LeftRight => gen_left_right(spec),
    }
}

fn normal_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

fn symmetric_normal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = normal_matrix(n, rng);
    (&g + g.transpose()) * 0.5
}

/// Orthogonal factor of the QR decomposition of a standard normal matrix,
/// with columns flipped so that `R` has a positive diagonal.
fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let qr = normal_matrix(n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `L_degree(x)` by the three-term recurrence.
pub fn laguerre(degree: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if degree == 0 {
        return prev;
    }
    for k in 1..degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `A[k][0]` symmetric standard normal, `A[k][l] = L_{l-1}(D_k)` with `D_k`
/// diagonal, entries uniform on `[k - 1, k]` (one-based `k`).
pub fn gen_laguerre(spec: &RandomSpec) -> Result<MepProblem> {
    spec.validate(Family::Laguerre)?;
    let RandomSpec { n, m, seed, .. } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrices = Vec::with_capacity(m);
    for k in 0..m {
        let a0 = symmetric_normal(n, &mut rng);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(k as f64..=(k + 1) as f64)).collect();
        let mut row = vec![a0];
        for l in 1..=m {
            let values = DVector::from_iterator(n, d.iter().map(|&x| laguerre(l - 1, x)));
            row.push(DMatrix::from_diagonal(&values));
        }
        matrices.push(row);
    }
    MepProblem::from_real(matrices, true)
}

fn rotated_couplings(
    spec: &RandomSpec,
    a0: impl Fn(&mut ChaCha8Rng) -> DMatrix<f64>,
    half_width: f64,
) -> Result<MepProblem> {
    let RandomSpec { n, m, seed, .. } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrices = Vec::with_capacity(m);
    for k in 0..m {
        let mut row = vec![a0(&mut rng)];
        for l in 1..=m {
            let q = random_orthogonal(n, &mut rng);
            let d = DVector::from_fn(n, |_, _| rng.random_range(-half_width..=half_width));
            let mut a = &q * DMatrix::from_diagonal(&d) * q.transpose();
            a = (&a + a.transpose()) * 0.5;
            if l == k + 1 {
                a += DMatrix::<f64>::identity(n, n);
            }
            row.push(a);
        }
        matrices.push(row);
    }
    MepProblem::from_real(matrices, true)
}

/// `A[k][0]` symmetric standard normal, `A[k][l] = Q D Q^T + δ_{kl} I` with
/// `D` uniform on `[-1/(2m), 1/(2m)]` and `Q` random orthogonal.
pub fn gen_well_conditioned(spec: &RandomSpec) -> Result<MepProblem> {
    spec.validate(Family::WellConditioned)?;
    let n = spec.n;
    rotated_couplings(spec, |rng| symmetric_normal(n, rng), 0.5 / spec.m as f64)
}

/// Like [`gen_well_conditioned`] with couplings on `[-1/(4m), 1/(4m)]` and
/// `A[k][0] = -(G G^T / n + I)` negative definite.
pub fn gen_left_right(spec: &RandomSpec) -> Result<MepProblem> {
    spec.validate(Family::LeftRight)?;
    let n = spec.n;
    let a0 = |rng: &mut ChaCha8Rng| {
        let g = normal_matrix(n, rng);
        -(&g * g.transpose() / n as f64 + DMatrix::identity(n, n))
    };
    rotated_couplings(spec, a0, 0.25 / spec.m as f64)
}

/// The objective direction `(0, 1, ..., 1) / √m` of the left-right family.
pub fn left_right_mu(m: usize) -> DVector<f64> {
    let mut mu = DVector::from_element(m + 1, 1.0 / (m as f64).sqrt());
    mu[0] = 0.0;
    mu
}
