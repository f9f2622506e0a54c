//! Command-line front end: `solve` runs one configuration on one problem and
//! emits a convergence trace; `bench` runs solver/problem grids and emits the
//! overhead comparison table.

use beast_flex::{
    reference_spectrum, run, EigenProblem64, Interval, IterationMode, QuadConfig, RuleKind,
    SolveStatus, SolverConfig64,
};
use beast_flex_cli::{
    bench_to_csv, compare_with_oracle, desk_suite, load_matrix_problem, load_problem, parse_suite,
    run_bench, trace_to_csv, ProblemSpec,
};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "beast-flex", about = "Contour-integration eigensolver with flexible subspace iteration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one eigenproblem with one solver configuration.
    Solve(SolveArgs),
    /// Run a suite of problems against several solvers and emit a CSV table.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix A in Matrix Market format
    #[arg(long, conflicts_with_all = ["toy", "laplacian"])]
    matrix: Option<PathBuf>,
    /// Matrix B in Matrix Market format (generalized problem)
    #[arg(long, requires = "matrix")]
    matrix_b: Option<PathBuf>,
    /// Built-in 100x100 diagonal test problem
    #[arg(long, conflicts_with = "laplacian")]
    toy: bool,
    /// Built-in 1-D Laplacian of the given size
    #[arg(long)]
    laplacian: Option<usize>,
    /// Search interval
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    interval: Option<Vec<f64>>,
    /// Expected in-interval eigenvalue count (default: from the dense oracle)
    #[arg(long)]
    n_expect: Option<usize>,
    /// Iteration scheme: c, m-in, or m-out
    #[arg(long, default_value = "c")]
    mode: String,
    /// Switch to single-moment iterations on stagnation
    #[arg(long, default_value = "off", value_parser = ["on", "off"])]
    switch: String,
    /// Adapt the quadrature node count in single-moment iterations
    #[arg(long, default_value = "off", value_parser = ["on", "off"])]
    adaptive_q: String,
    /// Number of moments s in m-in / m-out modes
    #[arg(long, default_value_t = 4)]
    moments: usize,
    /// Quadrature rule: gauss or trapezoid
    #[arg(long, default_value = "gauss", value_parser = ["gauss", "trapezoid"])]
    quad: String,
    /// Quadrature node count on the full contour
    #[arg(long, default_value_t = 16)]
    q: usize,
    /// Contour eccentricity (imaginary semi-axis / real semi-axis)
    #[arg(long, default_value_t = 0.1)]
    ecc: f64,
    /// Subspace oversampling factor
    #[arg(long, default_value_t = 1.5)]
    subspace_factor: f64,
    /// Residual tolerance
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the per-iteration convergence trace to this CSV file
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Score the result against the dense reference spectrum
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite file; omit for the built-in desk suite
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Comma-separated solver names
    #[arg(long, default_value = "beast_c_n,beast_m_x_out")]
    solvers: String,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    configure_thread_pool();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let msg = e.to_string();
            // keep usage help on stdout readable, but fail with a single line
            if e.use_stderr() {
                eprintln!("error: {}", msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: "));
                return ExitCode::from(1);
            }
            print!("{msg}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// BEAST_FLEX_THREADS caps worker parallelism; 0 or unset keeps the default.
fn configure_thread_pool() {
    if let Ok(v) = std::env::var("BEAST_FLEX_THREADS") {
        if let Ok(k) = v.trim().parse::<usize>() {
            if k > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<u8, String> {
    let mut problem = build_problem(&args)?;
    if let Some(k) = args.n_expect {
        problem.n_expect = k;
    }

    let mode = match args.mode.as_str() {
        "c" => IterationMode::Single,
        "m-in" => IterationMode::MomentInner,
        "m-out" => IterationMode::MomentOuter,
        other => return Err(format!("unknown mode {other:?} (expected c, m-in, or m-out)")),
    };
    let rule_kind = match args.quad.as_str() {
        "gauss" => RuleKind::GaussLegendre,
        "trapezoid" => RuleKind::Trapezoidal,
        other => return Err(format!("unknown quadrature {other:?}")),
    };

    let mut config = SolverConfig64::new(mode, problem.n_expect.max(1));
    config.switch_on_stagnation = args.switch == "on";
    config.adaptive_q = args.adaptive_q == "on";
    config.s_initial = if mode == IterationMode::Single { 1 } else { args.moments };
    config.subspace_factor = args.subspace_factor;
    config.tol = args.tol;
    config.max_iter = args.max_iter;
    config.rng_seed = args.seed;
    config.quad = QuadConfig {
        rule_kind,
        q: args.q,
        ecc: args.ecc,
        half_contour: true,
    };

    let result = run(&problem, &config).map_err(|e| e.to_string())?;

    if let Some(path) = &args.trace {
        std::fs::write(path, trace_to_csv(&result.trace))
            .map_err(|e| format!("cannot write trace {}: {e}", path.display()))?;
    }

    println!(
        "problem={} status={} iterations={} found={} rhs_ovl={} bls_ovl={}",
        problem.label,
        result.status,
        result.trace.len(),
        result.found_count(),
        result.counters.rhs_ovl,
        result.counters.bls_ovl
    );
    for (lambda, res) in result.eigenvalues.iter().zip(&result.residuals) {
        println!("  lambda={lambda:.15e}  residual={res:.3e}");
    }

    let mut verified = true;
    if args.verify {
        let (reference, _) = reference_spectrum(&problem).map_err(|e| e.to_string())?;
        let (found, missed, spurious) =
            compare_with_oracle(&result.eigenvalues, &reference, problem.interval);
        verified = missed.is_empty() && spurious.is_empty() && found == reference.len();
        println!(
            "verify: found={found} expected={} missed={} spurious={}",
            reference.len(),
            missed.len(),
            spurious.len()
        );
    }

    if result.status == SolveStatus::Converged && verified {
        Ok(0)
    } else {
        Ok(2)
    }
}

fn build_problem(args: &SolveArgs) -> Result<EigenProblem64, String> {
    let interval = match &args.interval {
        Some(v) => Some(Interval::new(v[0], v[1]).map_err(|e| e.to_string())?),
        None => None,
    };
    if args.toy {
        let mut p = load_problem(&ProblemSpec::Toy)?;
        if let Some(iv) = interval {
            p.interval = iv;
            p.n_expect = reference_spectrum(&p).map_err(|e| e.to_string())?.0.len();
        }
        return Ok(p);
    }
    if let Some(n) = args.laplacian {
        let iv = interval.ok_or("--laplacian requires --interval LO HI")?;
        return load_problem(&ProblemSpec::Laplacian { n, lo: iv.lo, hi: iv.hi });
    }
    if let Some(path) = &args.matrix {
        let iv = interval.ok_or("--matrix requires --interval LO HI")?;
        return load_matrix_problem(path, args.matrix_b.as_deref(), iv.lo, iv.hi, args.n_expect);
    }
    Err("no problem selected: use --toy, --laplacian N, or --matrix PATH".into())
}

fn cmd_bench(args: BenchArgs) -> Result<u8, String> {
    let specs = match &args.suite {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read suite {}: {e}", path.display()))?;
            parse_suite(&text)?
        }
        None => desk_suite(),
    };
    if specs.is_empty() {
        return Err("suite contains no problems".into());
    }
    let solvers: Vec<String> = args
        .solvers
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if solvers.is_empty() {
        return Err("no solvers selected".into());
    }
    if args.repeats == 0 {
        return Err("--repeats must be >= 1".into());
    }

    let (rows, aggregates) = run_bench(&specs, &solvers, args.repeats, args.seed)?;
    let csv = bench_to_csv(&rows, &aggregates);
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(0)
}
