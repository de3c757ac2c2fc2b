use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{MepError, Result};
use crate::problem::MepProblem;

/// Ellipsoid with semi-axes `x0 < y0 < z0` and `n` collocation nodes per
/// equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipsoidConfig {
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub n: usize,
}

impl Default for EllipsoidConfig {
    fn default() -> Self {
        Self {
            x0: 1.0,
            y0: 1.5,
            z0: 2.0,
            n: 60,
        }
    }
}

impl EllipsoidConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.x0 && self.x0 < self.y0 && self.y0 < self.z0) {
            return Err(MepError::InvalidConfig(format!(
                "semi-axes must satisfy 0 < x0 < y0 < z0, got {}, {}, {}",
                self.x0, self.y0, self.z0
            )));
        }
        if self.n < 8 {
            return Err(MepError::InvalidConfig(format!(
                "need at least 8 collocation nodes, got {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        (self.z0 * self.z0 - self.x0 * self.x0).sqrt()
    }

    pub fn b(&self) -> f64 {
        (self.z0 * self.z0 - self.y0 * self.y0).sqrt()
    }

    pub fn c(&self) -> f64 {
        let (a, b) = (self.a(), self.b());
        a * a / (b * b)
    }

    /// Right end of the first equation's interval, `z0² / b²`.
    pub fn outer(&self) -> f64 {
        self.z0 * self.z0 / (self.b() * self.b())
    }

    /// Intervals of the three separated equations.
    pub fn intervals(&self) -> [(f64, f64); 3] {
        let c = self.c();
        [(c, self.outer()), (1.0, c), (0.0, 1.0)]
    }
}

/// Chebyshev–Gauss–Lobatto points mapped to `[lo, hi]`, starting at `hi`.
pub fn chebyshev_nodes(n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |j, _| {
        let x = (PI * j as f64 / (n - 1) as f64).cos();
        0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    })
}

/// Spectral first-derivative matrix on [`chebyshev_nodes`]`(n, lo, hi)`.
pub fn differentiation_matrix(n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let x = DVector::from_fn(n, |j, _| (PI * j as f64 / (n - 1) as f64).cos());
    let weight = |j: usize| {
        let c = if j == 0 || j == n - 1 { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            c
        } else {
            -c
        }
    };
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[(i, j)] = weight(i) / weight(j) / (x[i] - x[j]);
            }
        }
    }
    // Negative row sums on the diagonal.
    for i in 0..n {
        let s: f64 = d.row(i).sum();
        d[(i, i)] = -s;
    }
    d * (2.0 / (hi - lo))
}

/// Collocation of the three separated ellipsoidal wave equations
///
/// ```text
/// t(t-1)(t-c) u'' + ½(3t² - 2(1+c)t + c) u' + (λ + μt + ηt²) u = 0
/// ```
///
/// on `(c, z0²/b²)`, `(1, c)` and `(0, 1)` with parameters `(λ, μ, η)` and
/// `u_1(z0²/b²) = 0`. The Dirichlet node is eliminated, so the first equation
/// has `n - 1` unknowns. The middle equation is multiplied by `-1` so that
/// the collocated problem is right definite with the usual index ordering.
pub fn ellipsoidal_wave(config: &EllipsoidConfig) -> Result<MepProblem> {
    config.validate()?;
    let n = config.n;
    let c = config.c();
    let mut matrices = Vec::with_capacity(3);
    for (k, (lo, hi)) in config.intervals().into_iter().enumerate() {
        let t = chebyshev_nodes(n, lo, hi);
        let d1 = differentiation_matrix(n, lo, hi);
        let d2 = &d1 * &d1;
        let p = t.map(|t| t * (t - 1.0) * (t - c));
        let q = t.map(|t| 0.5 * (3.0 * t * t - 2.0 * (1.0 + c) * t + c));
        let a0 = DMatrix::from_diagonal(&p) * d2 + DMatrix::from_diagonal(&q) * d1;
        let mut row = vec![
            a0,
            DMatrix::identity(n, n),
            DMatrix::from_diagonal(&t),
            DMatrix::from_diagonal(&t.map(|t| t * t)),
        ];
        if k == 0 {
            row = row
                .into_iter()
                .map(|a| a.view((1, 1), (n - 1, n - 1)).into_owned())
                .collect();
        }
        if k == 1 {
            row.iter_mut().for_each(|a| a.neg_mut());
        }
        matrices.push(row);
    }
    MepProblem::from_real(matrices, false)
}
