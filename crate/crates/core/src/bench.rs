//! Drivers behind the command line: exhaustive sweeps, frontier searches,
//! oracle cross-checks and CSV output.
//!
//! # CSV schema
//!
//! One header line, then one row per record, UTF-8 with LF endings:
//!
//! ```text
//! problem_id,family,n,m,target_index,sign,status,iterations,residual,lambda_0,...,lambda_m,wall_time_s,solve_order,attempts
//! ```
//!
//! `target_index` is dash-joined (`1-1-4`), `sign` is `+`, `-` or empty,
//! `status` is `converged`, `max-iter` or an error name. Eigenvalue columns
//! hold the lifted vector (`lambda_0 = 1` for inhomogeneous solves) and are
//! empty when a solve failed. `solve_order` is filled for frontier runs only;
//! `attempts` counts the solves spent on the row including retries.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{MepError, Result};
use crate::newton::{f_index_with, solve, InitialVectors};
use crate::oracle::{self, build_delta, hausdorff, is_positive_definite};
use crate::problem::{Eigenpair, Lambda, MepProblem, Multiindex, Sign, SolveReport, SolverConfig, Target};

/// Above this many multiindices a sweep needs `allow_large`.
pub const SWEEP_LIMIT: usize = 1_000_000;
/// Fresh-seed retries after a failed solve.
pub const RETRIES: usize = 3;

/// Identifies a problem in CSV output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInfo {
    pub id: String,
    pub family: String,
}

impl Default for ProblemInfo {
    fn default() -> Self {
        Self {
            id: "unnamed".into(),
            family: "custom".into(),
        }
    }
}

/// Solver defaults for a problem family: damping on for Laguerre problems.
pub fn default_config(family: Option<&str>) -> SolverConfig {
    SolverConfig {
        globalize: family == Some("laguerre"),
        ..SolverConfig::default()
    }
}

#[derive(Debug)]
pub enum Outcome {
    Finished(SolveReport),
    Failed(MepError),
}

/// One CSV row.
#[derive(Debug)]
pub struct RunRecord {
    pub info: ProblemInfo,
    pub n: usize,
    pub m: usize,
    pub target: Multiindex,
    pub sign: Option<Sign>,
    pub outcome: Outcome,
    pub wall_time_s: f64,
    pub solve_order: Option<usize>,
    pub attempts: usize,
}

impl RunRecord {
    pub fn report(&self) -> Option<&SolveReport> {
        match &self.outcome {
            Outcome::Finished(r) => Some(r),
            Outcome::Failed(_) => None,
        }
    }

    pub fn converged(&self) -> bool {
        self.report().is_some_and(SolveReport::converged)
    }

    pub fn status(&self) -> &'static str {
        match &self.outcome {
            Outcome::Finished(r) => r.status.as_str(),
            Outcome::Failed(e) => e.name(),
        }
    }

    pub fn iterations(&self) -> Option<usize> {
        self.report().map(|r| r.iterations)
    }

    pub fn residual(&self) -> Option<f64> {
        self.report().map(SolveReport::final_residual)
    }

    /// Lifted eigenvalue of the last iterate.
    pub fn lambda(&self) -> Option<DVector<f64>> {
        self.report().map(|r| r.pair.lambda.lifted())
    }

    pub fn csv_row(&self) -> String {
        let mut cells = vec![
            self.info.id.clone(),
            self.info.family.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.target.dashed(),
            self.sign.map(|s| s.symbol().to_string()).unwrap_or_default(),
            self.status().to_string(),
            self.iterations().map(|i| i.to_string()).unwrap_or_default(),
            self.residual().map(|r| format!("{r:e}")).unwrap_or_default(),
        ];
        match self.lambda() {
            Some(l) => cells.extend(l.iter().map(|x| format!("{x:.16e}"))),
            None => cells.extend(std::iter::repeat_n(String::new(), self.m + 1)),
        }
        cells.push(format!("{:.6}", self.wall_time_s));
        cells.push(self.solve_order.map(|o| o.to_string()).unwrap_or_default());
        cells.push(self.attempts.to_string());
        cells.join(",")
    }
}

pub fn csv_header(m: usize) -> String {
    let mut cells: Vec<String> = [
        "problem_id",
        "family",
        "n",
        "m",
        "target_index",
        "sign",
        "status",
        "iterations",
        "residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cells.extend((0..=m).map(|l| format!("lambda_{l}")));
    cells.extend(["wall_time_s", "solve_order", "attempts"].iter().map(|s| s.to_string()));
    cells.join(",")
}

pub fn write_csv<W: Write>(out: &mut W, m: usize, records: &[RunRecord]) -> std::io::Result<()> {
    writeln!(out, "{}", csv_header(m))?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub found: usize,
    pub failed: usize,
    pub max_residual: f64,
}

pub fn summarize(records: &[RunRecord]) -> SweepSummary {
    let found = records.iter().filter(|r| r.converged()).count();
    let max_residual = records
        .iter()
        .filter(|r| r.converged())
        .filter_map(RunRecord::residual)
        .fold(0.0, f64::max);
    SweepSummary {
        found,
        failed: records.len() - found,
        max_residual,
    }
}

/// Options shared by the drivers.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: SolverConfig,
    /// Signed targets (locally definite iteration) when set.
    pub sign: Option<Sign>,
    pub threads: Option<usize>,
    pub allow_large: bool,
    pub info: ProblemInfo,
}

impl RunOptions {
    pub fn new(config: SolverConfig) -> Self {
        Self {
            config,
            sign: None,
            threads: None,
            allow_large: false,
            info: ProblemInfo::default(),
        }
    }

    fn target(&self, index: &Multiindex) -> Target {
        match self.sign {
            Some(s) => Target::Signed(index.clone(), s),
            None => Target::Index(index.clone()),
        }
    }
}

fn retry_seed(seed: u64, position: u64, attempt: u64) -> u64 {
    seed ^ position.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ attempt.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Solves `index`, first from `warm` (or the configured seed), then from up
/// to [`RETRIES`] fresh seeds while the solve fails or stalls.
fn solve_with_retries(
    problem: &MepProblem,
    index: &Multiindex,
    opts: &RunOptions,
    warm: Option<InitialVectors>,
    position: u64,
) -> RunRecord {
    let start = Instant::now();
    let target = opts.target(index);
    let mut outcome = match solve(problem, &target, &opts.config, warm) {
        Ok(r) => Outcome::Finished(r),
        Err(e) => Outcome::Failed(e),
    };
    let mut attempts = 1;
    while attempts <= RETRIES && !matches!(&outcome, Outcome::Finished(r) if r.converged()) {
        let config = SolverConfig {
            seed: retry_seed(opts.config.seed, position, attempts as u64),
            ..opts.config.clone()
        };
        outcome = match solve(problem, &target, &config, None) {
            Ok(r) => Outcome::Finished(r),
            Err(e) => Outcome::Failed(e),
        };
        attempts += 1;
    }
    RunRecord {
        info: opts.info.clone(),
        n: problem.dims().iter().copied().max().unwrap_or(0),
        m: problem.m(),
        target: index.clone(),
        sign: opts.sign,
        outcome,
        wall_time_s: start.elapsed().as_secs_f64(),
        solve_order: None,
        attempts,
    }
}

/// Vectors realizing `index` at a neighbour's eigenvalue.
fn warm_start(problem: &MepProblem, index: &Multiindex, parent: &Eigenpair, real_tol: f64) -> Option<InitialVectors> {
    let eval = f_index_with(problem, index, &parent.lambda, real_tol).ok()?;
    Some(InitialVectors {
        right: eval.right,
        left: eval.left,
    })
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| MepError::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Solves every multiindex of the grid. Indices are processed level by level
/// (`|i|` increasing) in parallel; each solve is warm-started from a converged
/// predecessor `i - e_k`. Records come back in lexicographic order.
pub fn sweep(problem: &MepProblem, opts: &RunOptions) -> Result<Vec<RunRecord>> {
    opts.config.validate()?;
    let dims = problem.dims();
    let total = problem.index_count();
    if total > SWEEP_LIMIT && !opts.allow_large {
        return Err(MepError::InvalidConfig(format!(
            "sweep over {total} multiindices exceeds {SWEEP_LIMIT}; pass the large-sweep flag"
        )));
    }
    let grid: Vec<Multiindex> = Multiindex::grid(dims).collect();
    let mut levels: BTreeMap<usize, Vec<(usize, Multiindex)>> = BTreeMap::new();
    for (pos, idx) in grid.into_iter().enumerate() {
        levels.entry(idx.level()).or_default().push((pos, idx));
    }

    with_pool(opts.threads, || {
        let mut solved: HashMap<Multiindex, Eigenpair> = HashMap::new();
        let mut records: Vec<(usize, RunRecord)> = Vec::with_capacity(total);
        for (_, level) in levels {
            let batch: Vec<(usize, RunRecord)> = level
                .par_iter()
                .map(|(pos, idx)| {
                    let warm = (0..idx.len())
                        .rev()
                        .filter_map(|k| idx.predecessor(k))
                        .find_map(|p| solved.get(&p))
                        .and_then(|parent| warm_start(problem, idx, parent, opts.config.real_tol));
                    (*pos, solve_with_retries(problem, idx, opts, warm, *pos as u64))
                })
                .collect();
            for (pos, record) in batch {
                if let Some(r) = record.report().filter(|r| r.converged()) {
                    solved.insert(record.target.clone(), r.pair.clone());
                }
                records.push((pos, record));
            }
        }
        records.sort_by_key(|(pos, _)| *pos);
        records.into_iter().map(|(_, r)| r).collect()
    })
}

/// Quantity minimized by the frontier search.
#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    /// Component `l` of the lifted eigenvalue.
    Component(usize),
    /// `μ^T λ` on the lifted eigenvalue.
    Direction(DVector<f64>),
}

impl Objective {
    pub fn value(&self, lifted: &DVector<f64>) -> f64 {
        match self {
            Objective::Component(l) => lifted[*l],
            Objective::Direction(mu) => mu.dot(lifted),
        }
    }

    fn check(&self, m: usize) -> Result<()> {
        let ok = match self {
            Objective::Component(l) => *l <= m,
            Objective::Direction(mu) => mu.len() == m + 1,
        };
        if ok {
            Ok(())
        } else {
            Err(MepError::DimensionMismatch(format!(
                "objective {self:?} does not fit {m} parameters"
            )))
        }
    }
}

/// A single integer selects a component, a comma-separated list a direction.
impl FromStr for Objective {
    type Err = MepError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.contains(',') {
            if let Ok(l) = s.parse::<usize>() {
                return Ok(Objective::Component(l));
            }
        }
        let entries: std::result::Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match entries {
            Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(Objective::Direction(DVector::from_vec(v))),
            _ => Err(MepError::InvalidConfig(format!("cannot parse objective '{s}'"))),
        }
    }
}

#[derive(Debug)]
pub struct FrontierResult {
    /// Popped records in pop order; `solve_order` is the record's position
    /// among all solves.
    pub pops: Vec<RunRecord>,
    /// Number of solves performed.
    pub solves: usize,
}

impl FrontierResult {
    /// Solves needed before the first `k` pops were all available.
    pub fn solves_for(&self, k: usize) -> Option<usize> {
        (k <= self.pops.len()).then(|| self.pops[..k].iter().filter_map(|r| r.solve_order).max().unwrap_or(0))
    }
}

struct Entry {
    value: f64,
    index: Multiindex,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that `BinaryHeap` pops the smallest value.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Pops eigenvalues in increasing objective order. Starting from
/// `(1, ..., 1)`, every pop solves the unsolved successors `i + e_k`
/// warm-started from the popped eigenvectors. Failed solves are kept as
/// records but never enter the frontier.
pub fn frontier(
    problem: &MepProblem,
    count: usize,
    objective: &Objective,
    opts: &RunOptions,
) -> Result<FrontierResult> {
    opts.config.validate()?;
    objective.check(problem.m())?;
    let dims = problem.dims();
    let mut records: HashMap<Multiindex, RunRecord> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut solves = 0;

    let run = |index: Multiindex,
               warm: Option<InitialVectors>,
               solves: &mut usize,
               records: &mut HashMap<Multiindex, RunRecord>,
               heap: &mut BinaryHeap<Entry>| {
        *solves += 1;
        let mut record = solve_with_retries(problem, &index, opts, warm, *solves as u64);
        record.solve_order = Some(*solves);
        if record.converged() {
            if let Some(l) = record.lambda() {
                heap.push(Entry {
                    value: objective.value(&l),
                    index: index.clone(),
                });
            }
        }
        records.insert(index, record);
    };

    let mut pops = Vec::new();
    if count > 0 {
        run(
            Multiindex::ones(problem.m()),
            None,
            &mut solves,
            &mut records,
            &mut heap,
        );
    }
    while pops.len() < count {
        let Some(Entry { index, .. }) = heap.pop() else { break };
        let warm = records[&index].report().map(|r| InitialVectors::from_pair(&r.pair));
        for k in 0..problem.m() {
            if let Some(next) = index.successor(k, dims) {
                if !records.contains_key(&next) && !pops.iter().any(|r: &RunRecord| r.target == next) {
                    run(next, warm.clone(), &mut solves, &mut records, &mut heap);
                }
            }
        }
        pops.push(records.remove(&index).expect("popped index was solved"));
    }
    Ok(FrontierResult { pops, solves })
}

/// Newton sweep against the operator-determinant spectrum.
#[derive(Clone, Debug)]
pub struct OracleCheck {
    pub hausdorff: f64,
    pub bijection: bool,
    /// Whether `Δ_0` is positive definite.
    pub delta0_definite: bool,
    pub found: usize,
    pub total: usize,
    pub mu: DVector<f64>,
}

pub fn oracle_check(problem: &MepProblem, opts: &RunOptions) -> Result<OracleCheck> {
    let ops = build_delta(problem, None)?;
    let mut e0 = DVector::zeros(problem.m() + 1);
    e0[0] = 1.0;
    let delta0_definite = is_positive_definite(&ops.combine(&e0));
    let spectrum = oracle::solve_all(problem, None)?;
    let records = sweep(problem, opts)?;
    let newton: Vec<DVector<f64>> = records
        .iter()
        .filter_map(|r| r.report().filter(|r| r.converged()))
        .map(|r| r.pair.lambda.unit())
        .collect();
    let mut reference = spectrum.lambdas();
    if opts.sign.is_none() {
        for l in &mut reference {
            if l[0] < 0.0 {
                l.neg_mut();
            }
        }
    }
    Ok(OracleCheck {
        hausdorff: hausdorff(&newton, &reference),
        bijection: spectrum.is_bijection(problem.dims()),
        delta0_definite,
        found: newton.len(),
        total: problem.index_count(),
        mu: spectrum.mu,
    })
}

/// Fitted exponent `p` in `r_{j+1} ≈ C r_j^p` over the trailing strictly
/// decreasing residuals with `r_j < 1` and `r_{j+1}` above roundoff.
pub fn convergence_order(residuals: &[f64]) -> Option<f64> {
    let mut start = residuals.len().saturating_sub(1);
    while start > 0 && residuals[start] < residuals[start - 1] {
        start -= 1;
    }
    let pairs: Vec<(f64, f64)> = residuals[start..]
        .windows(2)
        .filter(|w| w[0] < 1.0 && w[0] > 0.0 && w[1] > 1e-13)
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    match pairs.len() {
        0 => None,
        1 => Some(pairs[0].1 / pairs[0].0),
        n => {
            let n = n as f64;
            let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            (sxx > 0.0).then(|| sxy / sxx)
        }
    }
}

/// Lifted eigenvalues of the converged records, for set comparisons.
pub fn converged_lambdas(records: &[RunRecord]) -> Vec<DVector<f64>> {
    records
        .iter()
        .filter_map(|r| r.report().filter(|r| r.converged()))
        .map(|r| r.pair.lambda.lifted())
        .collect()
}

/// Unit representatives of [`converged_lambdas`].
pub fn converged_units(records: &[RunRecord]) -> Vec<DVector<f64>> {
    converged_lambdas(records)
        .into_iter()
        .map(|l| Lambda::Homogeneous(l).unit())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{gen_laguerre, volkmer_example, Family, RandomSpec};
    use nalgebra::DMatrix;

    fn diag(d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(d))
    }

    fn toy() -> MepProblem {
        MepProblem::from_real(
            vec![
                vec![diag(&[1.0, -2.0, 0.5]), diag(&[2.0, 1.0, 1.5]), diag(&[0.5, 0.25, 0.1])],
                vec![diag(&[-1.0, 3.0]), diag(&[0.3, -0.2]), diag(&[1.5, 2.0])],
            ],
            true,
        )
        .unwrap()
    }

    #[test]
    fn header_matches_row_width() {
        let p = toy();
        let records = sweep(&p, &RunOptions::new(SolverConfig::default())).unwrap();
        let width = csv_header(2).split(',').count();
        assert_eq!(width, 15);
        for r in &records {
            assert_eq!(r.csv_row().split(',').count(), width);
        }
        let mut out = Vec::new();
        write_csv(&mut out, 2, &records).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), records.len() + 1);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn sweep_records_are_lexicographic() {
        let p = toy();
        let records = sweep(&p, &RunOptions::new(SolverConfig::default())).unwrap();
        let order: Vec<_> = records.iter().map(|r| r.target.clone()).collect();
        let grid: Vec<_> = Multiindex::grid(p.dims()).collect();
        assert_eq!(order, grid);
        assert_eq!(summarize(&records).found, 6);
    }

    #[test]
    fn sweep_is_independent_of_thread_count() {
        let p = gen_laguerre(&RandomSpec {
            n: 3,
            m: 3,
            seed: 1,
            family: Family::Laguerre,
        })
        .unwrap();
        let run = |threads| {
            let opts = RunOptions {
                threads: Some(threads),
                ..RunOptions::new(default_config(Some("laguerre")))
            };
            converged_lambdas(&sweep(&p, &opts).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn scalar_sweep_has_one_record() {
        let p = MepProblem::from_real(
            vec![
                vec![diag(&[1.0]), diag(&[2.0]), diag(&[0.0])],
                vec![diag(&[-1.0]), diag(&[0.0]), diag(&[4.0])],
            ],
            true,
        )
        .unwrap();
        let records = sweep(&p, &RunOptions::new(SolverConfig::default())).unwrap();
        assert_eq!(records.len(), 1);
        let l = records[0].lambda().unwrap();
        assert!((l - DVector::from_row_slice(&[1.0, -0.5, 0.25])).amax() < 1e-15);
    }

    #[test]
    fn frontier_matches_sorted_toy_spectrum() {
        let p = toy();
        let mu = DVector::from_row_slice(&[0.0, 1.0, 1.0]);
        let objective = Objective::Direction(mu.clone());
        let result = frontier(&p, 6, &objective, &RunOptions::new(SolverConfig::default())).unwrap();
        let got: Vec<f64> = result
            .pops
            .iter()
            .map(|r| objective.value(&r.lambda().unwrap()))
            .collect();
        let mut brute = Vec::new();
        for i in 0..3 {
            for j in 0..2 {
                let a = |k: usize, l: usize, d: usize| p.matrix(k, l)[(d, d)].re;
                let jm = nalgebra::Matrix2::new(a(0, 1, i), a(0, 2, i), a(1, 1, j), a(1, 2, j));
                let l = jm.try_inverse().unwrap() * nalgebra::Vector2::new(-a(0, 0, i), -a(1, 0, j));
                brute.push(l[0] + l[1]);
            }
        }
        brute.sort_by(f64::total_cmp);
        assert_eq!(got.len(), 6);
        for (g, b) in got.iter().zip(&brute) {
            assert!((g - b).abs() < 1e-12);
        }
        assert_eq!(result.solves, 6);
    }

    #[test]
    fn frontier_single_pop_is_first_index() {
        let p = toy();
        let result = frontier(
            &p,
            1,
            &Objective::Component(1),
            &RunOptions::new(SolverConfig::default()),
        )
        .unwrap();
        assert_eq!(result.pops.len(), 1);
        assert_eq!(result.pops[0].target, Multiindex::ones(2));
        assert_eq!(result.solves_for(1), Some(1));
    }

    #[test]
    fn volkmer_oracle_check() {
        let opts = RunOptions {
            sign: Some(Sign::Plus),
            ..RunOptions::new(SolverConfig::default())
        };
        let check = oracle_check(&volkmer_example(), &opts).unwrap();
        assert_eq!(check.found, 64);
        assert!(check.hausdorff < 1e-10, "{}", check.hausdorff);
        assert!(check.bijection);
        assert!(!check.delta0_definite);
    }

    #[test]
    fn objective_parsing() {
        assert_eq!("3".parse::<Objective>().unwrap(), Objective::Component(3));
        assert_eq!(
            "0,1,1".parse::<Objective>().unwrap(),
            Objective::Direction(DVector::from_row_slice(&[0.0, 1.0, 1.0]))
        );
        assert!("x".parse::<Objective>().is_err());
        assert!("1,nan".parse::<Objective>().is_err());
    }

    #[test]
    fn order_of_exact_quadratic_sequence() {
        let r = [1e-1, 1e-2, 1e-4, 1e-8];
        assert!((convergence_order(&r).unwrap() - 2.0).abs() < 1e-12);
        assert!((convergence_order(&[0.5, 0.25]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(convergence_order(&[1e-14]), None);
    }

    #[test]
    fn order_uses_trailing_decreasing_run() {
        let r = [1e-1, 1e-3, 1e-1, 1e-2, 1e-4];
        assert!((convergence_order(&r).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn laguerre_default_globalizes() {
        assert!(default_config(Some("laguerre")).globalize);
        assert!(!default_config(Some("well-conditioned")).globalize);
        assert!(!default_config(None).globalize);
    }
}
