use std::time::{Duration, Instant};

use mepsolve::bench::{
    converged_lambdas, convergence_order, frontier, oracle_check, summarize, sweep, Objective, RunOptions,
};
use mepsolve::eig::hermitian_spectrum;
use mepsolve::gallery::{
    check_left_definite_sampled, check_right_definite_sampled, congruence_transform, ellipsoidal_wave, gen_laguerre,
    gen_left_right, gen_well_conditioned, left_right_mu, perturb_hermitian, random_unit_triangular,
    symmetrize_diagonal, volkmer_example, EllipsoidConfig, Family, RandomSpec,
};
use mepsolve::newton::{f_index, jacobian};
use mepsolve::problem::{pencil, CMatrix};
use mepsolve::{solve, InitialVectors, Lambda, MepProblem, Multiindex, Sign, SolverConfig, Target};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (
        t < limit,
        format!("{:.2}s of {:.0}s", t.as_secs_f64(), limit.as_secs_f64()),
    )
}

fn signed(config: SolverConfig) -> RunOptions {
    RunOptions {
        sign: Some(Sign::Plus),
        ..RunOptions::new(config)
    }
}

fn nearest(point: &DVector<f64>, set: &[DVector<f64>]) -> f64 {
    set.iter().map(|q| (q - point).amax()).fold(f64::INFINITY, f64::min)
}

fn volkmer_listed() -> [DVector<f64>; 4] {
    let s = 12f64.sqrt();
    [
        [-1.0, -3.0, 1.0, 1.0],
        [-1.0, 1.0, -3.0, 1.0],
        [-1.0, 1.0, 1.0, -3.0],
        [3.0, 1.0, 1.0, 1.0],
    ]
    .map(|v| DVector::from_row_slice(&v) / s)
}

fn volkmer_golden() -> Outcome {
    let p = volkmer_example();
    let start = Instant::now();
    let records = sweep(&p, &signed(SolverConfig::default())).unwrap();
    let (fast, time) = within(start, Duration::from_secs(1));
    let summary = summarize(&records);
    let max_iter = records
        .iter()
        .filter_map(|r| r.iterations())
        .max()
        .unwrap_or(usize::MAX);
    let lambdas = converged_lambdas(&records);
    let listed = volkmer_listed();
    let reproduced = listed.iter().map(|l| nearest(l, &lambdas)).fold(0.0, f64::max);
    let matched: Vec<DVector<f64>> = listed
        .iter()
        .map(|l| {
            lambdas
                .iter()
                .min_by(|a, b| (*a - l).amax().total_cmp(&(*b - l).amax()))
                .cloned()
                .unwrap_or_else(|| DVector::from_element(4, f64::NAN))
        })
        .collect();
    let sum = matched.iter().fold(DVector::zeros(4), |acc, l| acc + l).amax();
    let pass = summary.found == 64
        && summary.max_residual <= 1e-12
        && max_iter <= 3
        && reproduced <= 1e-12
        && sum <= 1e-12
        && fast;
    outcome(
        pass,
        format!(
            "found {}/64, max residual {:.1e}, max iterations {max_iter}, listed error {reproduced:.1e}, sum {sum:.1e}, {time}",
            summary.found, summary.max_residual
        ),
    )
}

fn congruence_robustness() -> Outcome {
    let p = volkmer_example();
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for seed in 0..3u64 {
        let transforms: Vec<CMatrix> = (0..3)
            .map(|k| random_unit_triangular(4, seed * 3 + k).map(|x| Complex64::new(x, 0.0)))
            .collect();
        let congruent = congruence_transform(&p, &transforms).unwrap();
        let perturbed = perturb_hermitian(&p, 1e-3, seed).unwrap();
        for (name, q) in [("congruence", congruent), ("perturbation", perturbed)] {
            let s = summarize(&sweep(&q, &signed(SolverConfig::default())).unwrap());
            pass &= s.found == 64 && s.max_residual <= 1e-8;
            details.push(format!("{name} seed {seed}: {}/64 ({:.1e})", s.found, s.max_residual));
        }
    }
    let (fast, time) = within(start, Duration::from_secs(5));
    outcome(pass && fast, format!("{}, {time}", details.join("; ")))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut runs = 0;
    for family in [Family::Laguerre, Family::WellConditioned] {
        for (n, m) in [(3, 2), (4, 2), (3, 3), (4, 3)] {
            for seed in 0..20 {
                let spec = RandomSpec { n, m, seed, family };
                let p = mepsolve::gallery::generate(&spec).unwrap();
                let opts = RunOptions::new(mepsolve::bench::default_config(Some(family.as_str())));
                runs += 1;
                match oracle_check(&p, &opts) {
                    Ok(c) => {
                        worst = worst.max(c.hausdorff);
                        if !(c.hausdorff <= 1e-8 && c.bijection && c.found == c.total) {
                            failures.push(format!(
                                "{} ({:.1e}, bijection {})",
                                spec.id(),
                                c.hausdorff,
                                c.bijection
                            ));
                        }
                    }
                    Err(e) => failures.push(format!("{}: {e}", spec.id())),
                }
            }
        }
    }
    let (fast, time) = within(start, Duration::from_secs(60));
    outcome(
        failures.is_empty() && fast,
        format!(
            "{runs} problems, worst Hausdorff {worst:.1e}, failures {:?}, {time}",
            failures
        ),
    )
}

fn quadratic_order() -> Outcome {
    let start = Instant::now();
    let mut good = 0;
    let mut orders = Vec::new();
    for seed in 0..20u64 {
        let p = gen_well_conditioned(&RandomSpec {
            n: 50,
            m: 3,
            seed,
            family: Family::WellConditioned,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let index = Multiindex::from_vec((0..3).map(|_| rng.random_range(1..=50)).collect());
        let config = SolverConfig {
            seed,
            ..SolverConfig::default()
        };
        let order = solve(&p, &Target::Index(index), &config, None)
            .ok()
            .filter(|r| r.converged())
            .and_then(|r| convergence_order(&r.residuals));
        if order.is_some_and(|o| o >= 1.8) {
            good += 1;
        }
        orders.push(order.map_or("-".to_string(), |o| format!("{o:.2}")));
    }
    let (fast, time) = within(start, Duration::from_secs(30));
    outcome(
        good >= 16 && fast,
        format!("{good}/20 runs with order >= 1.8 [{}], {time}", orders.join(" ")),
    )
}

fn left_right_instances() -> Vec<MepProblem> {
    (0..3)
        .map(|seed| {
            gen_left_right(&RandomSpec {
                n: 6,
                m: 3,
                seed,
                family: Family::LeftRight,
            })
            .unwrap()
        })
        .collect()
}

fn monotone_objective() -> Outcome {
    let start = Instant::now();
    let mu = left_right_mu(3);
    let mut pass = true;
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    let mut details = Vec::new();
    for (i, p) in left_right_instances().iter().enumerate() {
        let definite = check_right_definite_sampled(p, 500, i as u64).pass
            && check_left_definite_sampled(p, &mu, 500, i as u64).pass;
        pass &= definite;
        let mut converged = 0;
        for seed in 0..10 {
            let config = SolverConfig {
                seed,
                ..SolverConfig::default()
            };
            let Ok(report) = solve(p, &Target::Index(Multiindex::ones(3)), &config, None) else {
                continue;
            };
            if report.converged() {
                converged += 1;
            }
            let values: Vec<f64> = report.iterates.iter().map(|l| mu.dot(l)).collect();
            for w in values.windows(2) {
                worst_rise = worst_rise.max(w[1] - w[0]);
            }
        }
        pass &= converged == 10;
        details.push(format!("instance {i}: definite {definite}, {converged}/10 converged"));
    }
    pass &= worst_rise <= 1e-12;
    let (fast, time) = within(start, Duration::from_secs(10));
    outcome(
        pass && fast,
        format!("{}, largest increase {worst_rise:.1e}, {time}", details.join("; ")),
    )
}

fn index_monotonicity() -> Outcome {
    let start = Instant::now();
    let mu = left_right_mu(3);
    let mut pass = true;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut found = 0;
    for p in left_right_instances() {
        let records = sweep(&p, &RunOptions::new(SolverConfig::default())).unwrap();
        let solved: Vec<(Multiindex, f64)> = records
            .iter()
            .filter(|r| r.converged())
            .map(|r| (r.target.clone(), mu.dot(&r.lambda().unwrap())))
            .collect();
        found += solved.len();
        pass &= solved.len() == records.len();
        for (i, a) in &solved {
            for (j, b) in &solved {
                if i.le(j) {
                    worst = worst.max(a - b);
                }
            }
        }
    }
    pass &= worst <= 1e-10;
    let (fast, time) = within(start, Duration::from_secs(10));
    outcome(
        pass && fast,
        format!("{found}/648 eigenvalues, largest violation {worst:.1e}, {time}"),
    )
}

fn simple_at(p: &MepProblem, index: &Multiindex, lifted: &DVector<f64>) -> bool {
    (0..p.m()).all(|k| {
        let s = hermitian_spectrum(&pencil(p, k, lifted.as_slice())).unwrap();
        let r = index.entries()[k] - 1;
        let scale = s[0].abs().max(s[s.len() - 1].abs());
        let gap_above = if r > 0 { s[r - 1] - s[r] } else { f64::INFINITY };
        let gap_below = if r + 1 < s.len() {
            s[r] - s[r + 1]
        } else {
            f64::INFINITY
        };
        gap_above.min(gap_below) > 1e-3 * scale
    })
}

fn jacobian_check() -> Outcome {
    let problems = [
        gen_laguerre(&RandomSpec {
            n: 5,
            m: 2,
            seed: 0,
            family: Family::Laguerre,
        })
        .unwrap(),
        gen_laguerre(&RandomSpec {
            n: 4,
            m: 3,
            seed: 1,
            family: Family::Laguerre,
        })
        .unwrap(),
        gen_well_conditioned(&RandomSpec {
            n: 6,
            m: 3,
            seed: 2,
            family: Family::WellConditioned,
        })
        .unwrap(),
        gen_well_conditioned(&RandomSpec {
            n: 5,
            m: 4,
            seed: 3,
            family: Family::WellConditioned,
        })
        .unwrap(),
        gen_left_right(&RandomSpec {
            n: 6,
            m: 3,
            seed: 4,
            family: Family::LeftRight,
        })
        .unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for p in &problems {
        let m = p.m();
        let mut taken = 0;
        while taken < 10 {
            let lambda = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
            let index = Multiindex::from_vec(p.dims().iter().map(|&n| rng.random_range(1..=n)).collect());
            let point = Lambda::Inhomogeneous(lambda.clone());
            if !simple_at(p, &index, &point.lifted()) {
                continue;
            }
            let eval = f_index(p, &index, &point).unwrap();
            let analytic = jacobian(p, &eval).unwrap();
            let mut numeric = DMatrix::zeros(m, m);
            for l in 0..m {
                let mut plus = lambda.clone();
                plus[l] += h;
                let mut minus = lambda.clone();
                minus[l] -= h;
                let fp = f_index(p, &index, &Lambda::Inhomogeneous(plus)).unwrap().values;
                let fm = f_index(p, &index, &Lambda::Inhomogeneous(minus)).unwrap().values;
                numeric.set_column(l, &((fp - fm) / (2.0 * h)));
            }
            worst = worst.max((&analytic - &numeric).norm() / analytic.norm());
            taken += 1;
            points += 1;
        }
    }
    outcome(
        worst <= 1e-5,
        format!("{points} points, worst relative error {worst:.1e}"),
    )
}

fn ellipsoid_reproduction() -> Outcome {
    let start = Instant::now();
    let objective = Objective::Component(3);
    let run = |n: usize, count: usize| {
        let p = ellipsoidal_wave(&EllipsoidConfig {
            n,
            ..EllipsoidConfig::default()
        })
        .unwrap();
        frontier(&p, count, &objective, &RunOptions::new(SolverConfig::default())).unwrap()
    };
    let coarse = run(60, 20);
    let fine = run(80, 5);
    let s13 = coarse.solves_for(13).unwrap_or(usize::MAX);
    let s20 = coarse.solves_for(20).unwrap_or(usize::MAX);
    let etas = |r: &mepsolve::bench::FrontierResult| -> Vec<f64> {
        r.pops.iter().take(5).filter_map(|p| p.lambda()).map(|l| l[3]).collect()
    };
    let (a, b) = (etas(&coarse), etas(&fine));
    let drift = if a.len() == 5 && b.len() == 5 {
        a.iter().zip(&b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let (fast, time) = within(start, Duration::from_secs(120));
    let shown: Vec<String> = a.iter().map(|x| format!("{x:.9}")).collect();
    outcome(
        s13 <= 20 && s20 <= 30 && drift <= 1e-6 && fast,
        format!(
            "13 pops: {s13} solves, 20 pops: {s20} solves, smallest eta [{}], N=60/80 drift {drift:.1e}, {time}",
            shown.join(", ")
        ),
    )
}

fn scaled_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut pass = true;
    for seed in 0..10u64 {
        let h = gen_well_conditioned(&RandomSpec {
            n: 5,
            m: 3,
            seed,
            family: Family::WellConditioned,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut diag = || DVector::from_fn(5, |_, _| rng.random_range(0.5..2.0));
        let left: Vec<DVector<f64>> = (0..3).map(|_| diag()).collect();
        let right: Vec<DVector<f64>> = (0..3).map(|_| diag()).collect();
        let scaled_matrices = (0..3)
            .map(|k| {
                (0..=3)
                    .map(|l| {
                        let a = h.matrix(k, l);
                        CMatrix::from_fn(5, 5, |i, j| a[(i, j)] / (left[k][i] * right[k][j]))
                    })
                    .collect()
            })
            .collect();
        let scaled = MepProblem::new(scaled_matrices, false).unwrap();
        let sym = symmetrize_diagonal(&scaled, &left, &right).unwrap();
        let u = mepsolve::newton::random_vectors(&sym.problem, seed);
        let map = |maps: &[DVector<f64>]| -> Vec<_> {
            u.iter()
                .zip(maps)
                .map(|(u, d)| u.component_mul(&d.map(|x| Complex64::new(x, 0.0))))
                .collect()
        };
        let scaled_init = InitialVectors {
            right: map(&sym.right_maps),
            left: Some(map(&sym.left_maps)),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let index = Multiindex::from_vec((0..3).map(|_| rng.random_range(1..=5)).collect());
        let target = Target::Index(index);
        let config = SolverConfig::default();
        let scaled_run = solve(&scaled, &target, &config, Some(scaled_init));
        let symmetric_run = solve(&sym.problem, &target, &config, Some(InitialVectors::right(u.clone())));
        match (scaled_run, symmetric_run) {
            (Ok(a), Ok(b)) => {
                pass &= a.converged() && b.converged();
                for (x, y) in a.iterates.iter().zip(&b.iterates) {
                    worst = worst.max((x - y).amax());
                    compared += 1;
                }
            }
            _ => pass = false,
        }
    }
    outcome(
        pass && worst <= 1e-10,
        format!("{compared} iterates compared, worst difference {worst:.1e}"),
    )
}

fn cost_scaling() -> Outcome {
    let sizes = [25usize, 50, 100, 200];
    let mut means = Vec::new();
    let mut pass = true;
    for &n in &sizes {
        let mut total = 0.0;
        let mut count = 0;
        for seed in 0..5u64 {
            let p = gen_well_conditioned(&RandomSpec {
                n,
                m: 3,
                seed,
                family: Family::WellConditioned,
            })
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..2 {
                let index = Multiindex::from_vec((0..3).map(|_| rng.random_range(1..=n)).collect());
                let config = SolverConfig {
                    seed,
                    ..SolverConfig::default()
                };
                match solve(&p, &Target::Index(index), &config, None) {
                    Ok(r) if r.converged() => {
                        total += r.wall_time.as_secs_f64();
                        count += 1;
                    }
                    _ => pass = false,
                }
            }
        }
        means.push(total / count.max(1) as f64);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|t| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let shown: Vec<String> = means.iter().map(|t| format!("{:.2}ms", t * 1e3)).collect();
    outcome(
        pass && slope <= 3.5,
        format!("mean time per eigenvalue [{}], slope {slope:.2}", shown.join(", ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Volkmer golden sweep", volkmer_golden),
        ("congruence robustness", congruence_robustness),
        ("oracle equivalence", oracle_equivalence),
        ("quadratic convergence order", quadratic_order),
        ("global monotone convergence", monotone_objective),
        ("index monotonicity", index_monotonicity),
        ("Jacobian against finite differences", jacobian_check),
        ("ellipsoidal wave frontier", ellipsoid_reproduction),
        ("scaled iteration equivalence", scaled_equivalence),
        ("cost scaling", cost_scaling),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
