use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mepsolve::bench::{
    default_config, frontier, oracle_check, summarize, sweep, write_csv, Objective, Outcome, ProblemInfo, RunOptions,
    RunRecord,
};
use mepsolve::gallery::{ellipsoidal_wave, generate, volkmer_example, EllipsoidConfig, Family, RandomSpec};
use mepsolve::io::ProblemFile;
use mepsolve::{solve, MepError, Multiindex, Sign, SolverConfig, Target};

#[derive(Parser)]
#[command(
    name = "mepsolve",
    version,
    about = "Semismooth Newton solver for multiparameter eigenvalue problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for one (signed) multiindex.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        multiindex: Multiindex,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<Sign>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also write the run as a one-row CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every multiindex and write a CSV.
    Sweep {
        problem: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<Sign>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        threads: Option<usize>,
        /// Permit sweeps over more than a million multiindices.
        #[arg(long)]
        allow_large: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate eigenvalues in increasing objective order.
    Frontier {
        problem: PathBuf,
        #[arg(long)]
        count: usize,
        /// Component index `l` of λ or a comma-separated direction `μ`.
        #[arg(long, allow_hyphen_values = true)]
        objective: Objective,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<Sign>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a sweep against the operator determinant spectrum.
    OracleCheck {
        problem: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<Sign>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write a gallery problem.
    Generate(GenerateArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Damped iteration; defaults to on for the laguerre family.
    #[arg(long)]
    globalize: Option<bool>,
}

impl SolverArgs {
    fn config(&self, family: Option<&str>) -> SolverConfig {
        let mut config = default_config(family);
        if let Some(tol) = self.tol {
            config.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            config.max_iter = max_iter;
        }
        if let Some(tau) = self.tau {
            config.tau = tau;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(globalize) = self.globalize {
            config.globalize = globalize;
        }
        config
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GalleryFamily {
    Laguerre,
    WellConditioned,
    LeftRight,
    Volkmer,
    Ellipsoid,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: GalleryFamily,
    /// Matrix size, or the number of collocation points for the ellipsoid.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, MepError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("MEPSOLVE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| MepError::InvalidConfig(format!("MEPSOLVE_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path, solver: &SolverArgs, sign: Option<Sign>) -> Result<(ProblemFile, RunOptions), MepError> {
    let file = ProblemFile::read(path)?;
    let family = file.family.as_deref();
    let mut opts = RunOptions::new(solver.config(family));
    opts.sign = sign;
    opts.info = ProblemInfo {
        id: file.id.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "unnamed".into())
        }),
        family: file.family.clone().unwrap_or_else(|| "custom".into()),
    };
    Ok((file, opts))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, MepError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|source| MepError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn emit_csv(path: Option<&Path>, m: usize, records: &[RunRecord]) -> Result<(), MepError> {
    let io_err = |source| MepError::Io {
        path: path.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()),
        source,
    };
    let mut out = output(path)?;
    write_csv(&mut out, m, records).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn run(cli: Cli) -> Result<ExitCode, MepError> {
    match cli.command {
        Command::Solve {
            problem,
            multiindex,
            sign,
            solver,
            out,
        } => {
            let (file, opts) = load(&problem, &solver, sign)?;
            let p = &file.problem;
            multiindex.check(p.dims())?;
            let target = match sign {
                Some(s) => Target::Signed(multiindex.clone(), s),
                None => Target::Index(multiindex.clone()),
            };
            let report = solve(p, &target, &opts.config, None)?;
            let lambda = report.pair.lambda.lifted();
            let shown: Vec<String> = lambda.iter().map(|x| format!("{x:.12}")).collect();
            println!("multiindex: {}", multiindex);
            if let Some(s) = sign {
                println!("sign: {}", s.symbol());
            }
            println!("lambda: {}", shown.join(" "));
            println!("residual: {:e}", report.final_residual());
            println!("iterations: {}", report.iterations);
            println!("status: {}", report.status.as_str());
            let converged = report.converged();
            if let Some(path) = out {
                let record = RunRecord {
                    info: opts.info.clone(),
                    n: p.dims().iter().copied().max().unwrap_or(0),
                    m: p.m(),
                    target: multiindex,
                    sign,
                    wall_time_s: report.wall_time.as_secs_f64(),
                    outcome: Outcome::Finished(report),
                    solve_order: None,
                    attempts: 1,
                };
                emit_csv(Some(&path), p.m(), std::slice::from_ref(&record))?;
            }
            Ok(if converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Sweep {
            problem,
            sign,
            solver,
            threads: t,
            allow_large,
            out,
        } => {
            let (file, mut opts) = load(&problem, &solver, sign)?;
            opts.threads = threads(t)?;
            opts.allow_large = allow_large;
            let records = sweep(&file.problem, &opts)?;
            emit_csv(out.as_deref(), file.problem.m(), &records)?;
            let s = summarize(&records);
            eprintln!(
                "found {}/{} failed {} max residual {:e}",
                s.found,
                records.len(),
                s.failed,
                s.max_residual
            );
            Ok(if s.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Frontier {
            problem,
            count,
            objective,
            sign,
            solver,
            out,
        } => {
            let (file, opts) = load(&problem, &solver, sign)?;
            let result = frontier(&file.problem, count, &objective, &opts)?;
            emit_csv(out.as_deref(), file.problem.m(), &result.pops)?;
            eprintln!("pops {} solves {}", result.pops.len(), result.solves);
            Ok(if result.pops.len() == count {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::OracleCheck {
            problem,
            sign,
            solver,
            threads: t,
        } => {
            let (file, mut opts) = load(&problem, &solver, sign)?;
            opts.threads = threads(t)?;
            let c = oracle_check(&file.problem, &opts)?;
            let mu: Vec<String> = c.mu.iter().map(|x| format!("{x:.6}")).collect();
            println!("hausdorff: {:e}", c.hausdorff);
            println!("found: {}/{}", c.found, c.total);
            println!("bijection: {}", if c.bijection { "ok" } else { "FAILED" });
            println!(
                "delta0 positive definite: {}",
                if c.delta0_definite { "yes" } else { "no" }
            );
            println!("mu: {}", mu.join(" "));
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate(args) => {
            let file = generated(&args)?;
            match &args.out {
                Some(path) => file.write(path)?,
                None => print!("{}", file.to_json()),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn generated(args: &GenerateArgs) -> Result<ProblemFile, MepError> {
    let random = |family: Family| -> Result<ProblemFile, MepError> {
        let spec = RandomSpec {
            n: args.n.unwrap_or(4),
            m: args.m,
            seed: args.seed,
            family,
        };
        Ok(ProblemFile {
            problem: generate(&spec)?,
            family: Some(family.as_str().into()),
            id: Some(spec.id()),
        })
    };
    match args.family {
        GalleryFamily::Laguerre => random(Family::Laguerre),
        GalleryFamily::WellConditioned => random(Family::WellConditioned),
        GalleryFamily::LeftRight => random(Family::LeftRight),
        GalleryFamily::Volkmer => Ok(ProblemFile {
            problem: volkmer_example(),
            family: Some("volkmer".into()),
            id: Some("volkmer".into()),
        }),
        GalleryFamily::Ellipsoid => {
            let config = EllipsoidConfig {
                n: args.n.unwrap_or(EllipsoidConfig::default().n),
                ..EllipsoidConfig::default()
            };
            Ok(ProblemFile {
                problem: ellipsoidal_wave(&config)?,
                family: Some("ellipsoid".into()),
                id: Some(format!("ellipsoid-n{}", config.n)),
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(2)
        }
    }
}
