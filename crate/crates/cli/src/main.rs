//! `fptas`: solve, query and check stochastic dynamic programs from JSON files.
//!
//! Exit codes: 0 success, 2 invalid input or a failed check, 3 a budget or
//! iteration limit, 4 an internal contract violation.

mod validate;

use clap::{Parser, Subcommand, ValueEnum};
use fptas_core::convolve::compress_convolution;
use fptas_core::io::{load_instance, ConvolveSpec};
use fptas_core::model::DpInstance;
use fptas_core::oracle::hard;
use fptas_core::rat::{self, Rat};
use fptas_core::scheme::{self, policy_query, Scheme, SchemeOptions, ValueFnApprox};
use fptas_core::Error;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fptas",
    version,
    about = "Relative-error value functions for stochastic dynamic programs"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// Explicit piecewise-linear costs.
    #[value(name = "1")]
    One,
    /// Costs used only through evaluations.
    #[value(name = "2")]
    Two,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate the value functions and write them with their certificate.
    Solve {
        instance: PathBuf,
        /// Override the instance's accuracy.
        #[arg(long)]
        eps: Option<String>,
        /// Default: 1 for explicit costs, 2 otherwise.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Solution file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scheme 2: use the nominal per-stage accuracy without shrinking it.
        #[arg(long)]
        nominal_budget: bool,
    },
    /// Action and values of the stored policy at one state.
    Policy {
        instance: PathBuf,
        /// Solution written by `solve`; solved on the fly when omitted.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        stage: usize,
        #[arg(long)]
        state: String,
    },
    /// Compress the CDF of a weighted sum of independent variables.
    Convolve {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the engine with an independent reference and report pass/fail.
    Validate {
        instance: PathBuf,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Monte-Carlo paths for a policy rollout (0 skips it).
        #[arg(long, default_value_t = 0)]
        paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Grid points per state space for the continuous-noise reference.
        #[arg(long, default_value_t = 33)]
        grid: usize,
        /// Cells per continuous variable for the continuous-noise reference.
        #[arg(long, default_value_t = 16)]
        cells: usize,
    },
    /// Generate and verify a bivariate function indexed by an integer partition.
    GenHard {
        #[arg(long = "U", visible_alias = "u")]
        u: i64,
        /// Comma-separated nondecreasing parts summing to U.
        #[arg(long, value_delimiter = ',', required_unless_present = "all")]
        partition: Vec<i64>,
        #[arg(long, default_value_t = 0)]
        offset: i64,
        /// Verify every partition of U instead of one.
        #[arg(long)]
        all: bool,
    },
    /// Dump a stored value function as CSV `x,v` pairs.
    Inspect {
        solution: PathBuf,
        #[arg(long, default_value_t = 1)]
        stage: usize,
        /// Decimal instead of exact rational output.
        #[arg(long)]
        float: bool,
    },
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Input(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Failed(_) => 2,
            CliError::Core(e) => match e {
                Error::Validation { .. } | Error::Schema(_) | Error::Distribution(_) | Error::Domain(_) => 2,
                Error::Precondition(_) | Error::IterationLimit(_) => 3,
                Error::Contract(_) | Error::Infeasible | Error::Unbounded => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn parse_rat(s: &str, what: &str) -> CliResult<Rat> {
    rat::parse(s).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> CliResult<String> {
    serde_json::to_string_pretty(x).map_err(|e| CliError::Failed(format!("serialization failed: {e}")))
}

fn load(path: &Path, eps: Option<&str>) -> CliResult<DpInstance> {
    let mut inst = load_instance(path)?;
    if let Some(e) = eps {
        inst.eps = parse_rat(e, "--eps")?;
        inst.validate()?;
    }
    Ok(inst)
}

/// Runs the requested scheme; scheme 2 on an explicit instance hides its costs first.
fn run_scheme(
    inst: &DpInstance,
    choice: Option<SchemeArg>,
    opts: SchemeOptions,
) -> CliResult<(DpInstance, ValueFnApprox)> {
    let scheme = match choice {
        Some(SchemeArg::One) => Some(Scheme::Explicit),
        Some(SchemeArg::Two) => Some(Scheme::Oracle),
        None => None,
    };
    let used = if scheme == Some(Scheme::Oracle) {
        inst.with_oracle_costs()
    } else {
        inst.clone()
    };
    let vfa = scheme::solve(&used, scheme, opts)?;
    Ok((used, vfa))
}

fn load_solution(path: &Path) -> CliResult<ValueFnApprox> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Input(format!("{}: not a solution file: {e}", path.display())))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Input(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Solve {
            instance,
            eps,
            scheme,
            out,
            nominal_budget,
        } => {
            let inst = load(&instance, eps.as_deref())?;
            let opts = SchemeOptions {
                strict_budget: !nominal_budget,
            };
            let (_, vfa) = run_scheme(&inst, scheme, opts)?;
            let value = vfa.value_at(&inst.initial_state)?;
            let c = &vfa.certificate;
            eprintln!(
                "value {} (~{:.6}) at I1 = {}; claim K = {:.6}, within 1 + eps: {}, {} ms",
                rat::format(&value),
                rat::to_f64(&value),
                rat::format(&inst.initial_state),
                rat::to_f64(&c.final_claim.k),
                c.within_eps,
                c.millis
            );
            emit(&to_json(&vfa)?, out.as_deref())
        }
        Command::Policy {
            instance,
            solution,
            stage,
            state,
        } => {
            let inst = load(&instance, None)?;
            let state = parse_rat(&state, "--state")?;
            let (used, vfa) = match solution {
                Some(p) => {
                    let vfa = load_solution(&p)?;
                    let used = if vfa.certificate.scheme == Scheme::Oracle {
                        inst.with_oracle_costs()
                    } else {
                        inst
                    };
                    (used, vfa)
                }
                None => run_scheme(&inst, None, SchemeOptions::default())?,
            };
            if vfa.stages.len() != used.horizon() {
                return Err(CliError::Input("solution does not match the instance horizon".into()));
            }
            let ans = policy_query(&used, &vfa, stage, &state)?;
            emit(&to_json(&ans)?, None)
        }
        Command::Convolve { spec, out } => {
            let (vars, weights, k) = ConvolveSpec::parse(&read(&spec)?)?;
            let conv = compress_convolution(&vars, &weights, &k)?;
            eprintln!("{} points, claim K = {}", conv.cdf.len(), rat::format(&conv.cdf.k));
            emit(&to_json(&conv)?, out.as_deref())
        }
        Command::Validate {
            instance,
            eps,
            scheme,
            paths,
            seed,
            grid,
            cells,
        } => {
            let inst = load(&instance, eps.as_deref())?;
            let (used, vfa) = run_scheme(&inst, scheme, SchemeOptions::default())?;
            let report = validate::report(
                &used,
                &vfa,
                validate::Settings {
                    paths,
                    seed,
                    grid,
                    cells,
                },
            )?;
            for line in &report {
                println!("{line}");
            }
            let failed = report.iter().filter(|l| !l.passed).count();
            if failed > 0 {
                return Err(CliError::Failed(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
        Command::GenHard {
            u,
            partition,
            offset,
            all,
        } => {
            if all {
                let parts = hard::partitions(u);
                let mut bad = 0usize;
                for p in &parts {
                    let check = hard::verify(&hard::generate(u, p, offset)?);
                    if !check.passed() {
                        bad += 1;
                        println!("FAIL {p:?}: {check:?}");
                    }
                }
                println!("{} partitions of {u}, {bad} failed", parts.len());
                if bad > 0 {
                    return Err(CliError::Failed(format!("{bad} partition(s) failed the grid check")));
                }
                return Ok(());
            }
            let h = hard::generate(u, &partition, offset)?;
            let check = hard::verify(&h);
            emit(&to_json(&serde_json::json!({ "function": h, "check": check }))?, None)?;
            if !check.passed() {
                return Err(CliError::Failed("grid check failed".into()));
            }
            Ok(())
        }
        Command::Inspect { solution, stage, float } => {
            let vfa = load_solution(&solution)?;
            let art = stage
                .checked_sub(1)
                .and_then(|i| vfa.stages.get(i))
                .ok_or_else(|| CliError::Input(format!("--stage must lie in 1..={}", vfa.stages.len())))?;
            let mut out = String::from("x,v\n");
            for (x, v) in art.approx.points() {
                if float {
                    out.push_str(&format!("{},{}\n", rat::to_f64(x), rat::to_f64(v)));
                } else {
                    out.push_str(&format!("{},{}\n", rat::format(x), rat::format(v)));
                }
            }
            print!("{out}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
