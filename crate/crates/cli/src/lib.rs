//! Benchmark harness and CSV plumbing for the solver CLI: trace
//! serialization, oracle scoring, the desk-scale problem suite, and the
//! per-solver overhead comparison tables.

use beast_flex::{
    clustered_hermitian_problem, laplacian_problem, read_matrix_market, reference_spectrum, run,
    toy_problem, EigenProblem64, HermitianPencil, Interval, IterationMode, IterationRecord,
    SolveStatus, SolverConfig64,
};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// The supported solver configurations by name. `c` is single-moment,
/// `m` multi-moment (s = 4); `n`/`x` is switching off/on; `in`/`out` the
/// restart style; `ad` enables adaptive quadrature.
pub const SOLVER_NAMES: [&str; 6] = [
    "beast_c_n",
    "beast_c_ad",
    "beast_m_n_in",
    "beast_m_x_in",
    "beast_m_n_out",
    "beast_m_x_out",
];

/// Map a solver name to its base configuration.
pub fn solver_config(name: &str, n_expect: usize) -> Option<SolverConfig64> {
    let (mode, switch, adaptive) = match name {
        "beast_c_n" => (IterationMode::Single, false, false),
        "beast_c_ad" => (IterationMode::Single, false, true),
        "beast_m_n_in" => (IterationMode::MomentInner, false, false),
        "beast_m_x_in" => (IterationMode::MomentInner, true, false),
        "beast_m_n_out" => (IterationMode::MomentOuter, false, false),
        "beast_m_x_out" => (IterationMode::MomentOuter, true, false),
        _ => return None,
    };
    let mut config = SolverConfig64::new(mode, n_expect.max(1));
    config.switch_on_stagnation = switch;
    config.adaptive_q = adaptive;
    Some(config)
}

pub const TRACE_HEADER: &str =
    "iteration,mode,s,q,rhs_1,rank,res_min,res_avg,res_max,locked,rhs_ovl,bls_ovl";

/// Serialize a trace to CSV with the fixed column order.
pub fn trace_to_csv(records: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{:e},{:e},{:e},{},{},{}",
            r.iteration,
            r.mode,
            r.s,
            r.q,
            r.rhs_1,
            r.rank,
            r.res_min,
            r.res_avg,
            r.res_max,
            r.locked,
            r.rhs_ovl,
            r.bls_ovl
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn parse_mode(token: &str) -> Result<IterationMode, String> {
    match token {
        "m_in" => Ok(IterationMode::MomentInner),
        "m_out" => Ok(IterationMode::MomentOuter),
        "c" => Ok(IterationMode::Single),
        other => Err(format!("unknown mode token {other:?}")),
    }
}

/// Parse a trace CSV back into records (the inverse of [`trace_to_csv`]).
pub fn parse_trace(text: &str) -> Result<Vec<IterationRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => return Err(format!("bad trace header: {other:?}")),
    }
    let mut records = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(format!("line {}: expected 12 fields, got {}", ln + 2, f.len()));
        }
        let num = |i: usize| -> Result<usize, String> {
            f[i].parse().map_err(|e| format!("line {}: {e}", ln + 2))
        };
        let flt = |i: usize| -> Result<f64, String> {
            f[i].parse().map_err(|e| format!("line {}: {e}", ln + 2))
        };
        records.push(IterationRecord {
            iteration: num(0)?,
            mode: parse_mode(f[1])?,
            s: num(2)?,
            q: num(3)?,
            rhs_1: num(4)?,
            rank: num(5)?,
            res_min: flt(6)?,
            res_avg: flt(7)?,
            res_max: flt(8)?,
            locked: num(9)?,
            rhs_ovl: f[10].parse().map_err(|e| format!("line {}: {e}", ln + 2))?,
            bls_ovl: f[11].parse().map_err(|e| format!("line {}: {e}", ln + 2))?,
        });
    }
    Ok(records)
}

/// Greedy matching (on sorted values) of computed against reference
/// eigenvalues with per-pair tolerance `1e-8 * max(1, |lambda|)`, counting
/// multiplicity. Returns `(found_count, missed, spurious)` where `missed`
/// are unmatched reference values and `spurious` unmatched computed values
/// inside the interval.
pub fn compare_with_oracle(
    computed: &[f64],
    reference: &[f64],
    interval: Interval<f64>,
) -> (usize, Vec<f64>, Vec<f64>) {
    let mut comp: Vec<f64> = computed.to_vec();
    comp.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut refs: Vec<f64> = reference.to_vec();
    refs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut matched = vec![false; comp.len()];
    let mut missed = Vec::new();
    let mut found = 0usize;
    let mut j = 0usize;
    for &r in &refs {
        let atol = 1e-8 * r.abs().max(1.0);
        while j < comp.len() && comp[j] < r - atol {
            j += 1;
        }
        if j < comp.len() && (comp[j] - r).abs() <= atol {
            matched[j] = true;
            j += 1;
            found += 1;
        } else {
            missed.push(r);
        }
    }
    let spurious: Vec<f64> = comp
        .iter()
        .zip(&matched)
        .filter(|&(v, &m)| !m && interval.contains(*v))
        .map(|(v, _)| *v)
        .collect();
    (found, missed, spurious)
}

/// A problem specification, as read from a suite file.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Toy,
    Laplacian { n: usize, lo: f64, hi: f64 },
    Clustered {
        n: usize,
        n_inside: usize,
        cluster_size: usize,
        cluster_width: f64,
        boundary_gap: f64,
        seed: u64,
    },
    Matrix {
        path: PathBuf,
        path_b: Option<PathBuf>,
        lo: f64,
        hi: f64,
        n_expect: Option<usize>,
    },
}

/// Suite files are line-based: `toy`, `laplacian N LO HI`,
/// `clustered N N_INSIDE CLUSTER_SIZE WIDTH GAP SEED`, or
/// `matrix PATH LO HI [N_EXPECT] [PATH_B]`. `#` starts a comment.
pub fn parse_suite(text: &str) -> Result<Vec<ProblemSpec>, String> {
    let mut specs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        let ctx = |e: String| format!("suite line {}: {e}", ln + 1);
        let spec = match t[0] {
            "toy" => ProblemSpec::Toy,
            "laplacian" if t.len() == 4 => ProblemSpec::Laplacian {
                n: t[1].parse().map_err(|e| ctx(format!("{e}")))?,
                lo: t[2].parse().map_err(|e| ctx(format!("{e}")))?,
                hi: t[3].parse().map_err(|e| ctx(format!("{e}")))?,
            },
            "clustered" if t.len() == 7 => ProblemSpec::Clustered {
                n: t[1].parse().map_err(|e| ctx(format!("{e}")))?,
                n_inside: t[2].parse().map_err(|e| ctx(format!("{e}")))?,
                cluster_size: t[3].parse().map_err(|e| ctx(format!("{e}")))?,
                cluster_width: t[4].parse().map_err(|e| ctx(format!("{e}")))?,
                boundary_gap: t[5].parse().map_err(|e| ctx(format!("{e}")))?,
                seed: t[6].parse().map_err(|e| ctx(format!("{e}")))?,
            },
            "matrix" if t.len() >= 4 && t.len() <= 6 => ProblemSpec::Matrix {
                path: PathBuf::from(t[1]),
                lo: t[2].parse().map_err(|e| ctx(format!("{e}")))?,
                hi: t[3].parse().map_err(|e| ctx(format!("{e}")))?,
                n_expect: t.get(4).map(|s| s.parse()).transpose().map_err(|e| ctx(format!("{e}")))?,
                path_b: t.get(5).map(PathBuf::from),
            },
            other => {
                return Err(ctx(format!("unknown problem kind {other:?}")));
            }
        };
        specs.push(spec);
    }
    Ok(specs)
}

/// Instantiate a problem spec. When the expected count is not given it is
/// taken from the dense reference spectrum (desk scale only).
pub fn load_problem(spec: &ProblemSpec) -> Result<EigenProblem64, String> {
    match spec {
        ProblemSpec::Toy => Ok(toy_problem::<f64>()),
        ProblemSpec::Laplacian { n, lo, hi } => {
            if *n < 2 {
                return Err("laplacian needs n >= 2".into());
            }
            if lo >= hi {
                return Err(format!("invalid interval [{lo}, {hi}]"));
            }
            Ok(laplacian_problem::<f64>(*n, *lo, *hi))
        }
        ProblemSpec::Clustered {
            n,
            n_inside,
            cluster_size,
            cluster_width,
            boundary_gap,
            seed,
        } => {
            if n_inside >= n || *cluster_size == 0 {
                return Err("clustered needs n_inside < n and cluster_size >= 1".into());
            }
            Ok(clustered_hermitian_problem::<f64>(
                *n,
                *n_inside,
                *cluster_size,
                *cluster_width,
                *boundary_gap,
                *seed,
            ))
        }
        ProblemSpec::Matrix {
            path,
            path_b,
            lo,
            hi,
            n_expect,
        } => load_matrix_problem(path, path_b.as_deref(), *lo, *hi, *n_expect),
    }
}

pub fn load_matrix_problem(
    path: &Path,
    path_b: Option<&Path>,
    lo: f64,
    hi: f64,
    n_expect: Option<usize>,
) -> Result<EigenProblem64, String> {
    let a = read_matrix_market::<f64>(path).map_err(|e| e.to_string())?;
    let b = path_b
        .map(|p| read_matrix_market::<f64>(p).map_err(|e| e.to_string()))
        .transpose()?;
    let pencil = HermitianPencil::new(a, b).map_err(|e| e.to_string())?;
    let interval = Interval::new(lo, hi).map_err(|e| e.to_string())?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "matrix".to_string());
    let mut problem = EigenProblem64 {
        pencil,
        interval,
        n_expect: 0,
        label,
    };
    problem.n_expect = match n_expect {
        Some(k) => k,
        None => reference_spectrum(&problem).map_err(|e| e.to_string())?.0.len(),
    };
    Ok(problem)
}

/// The built-in desk suite: the toy problem plus three Laplacian intervals.
pub fn desk_suite() -> Vec<ProblemSpec> {
    vec![
        ProblemSpec::Toy,
        ProblemSpec::Laplacian { n: 200, lo: 0.01, hi: 0.1 },
        ProblemSpec::Laplacian { n: 200, lo: 1.8, hi: 2.2 },
        ProblemSpec::Laplacian { n: 200, lo: 3.8, hi: 3.95 },
    ]
}

/// One scored run of one solver on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub problem: String,
    pub solver: String,
    pub repeat: usize,
    pub rhs_ovl: u64,
    pub bls_ovl: u64,
    pub iterations: usize,
    pub found_count: usize,
    pub expected_count: usize,
    pub success: bool,
    pub status: String,
}

/// Per-solver mean overheads over the problems every solver solved.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchAggregate {
    pub solver: String,
    pub mean_rhs_ovl: f64,
    pub mean_bls_ovl: f64,
    pub problems_counted: usize,
}

/// Run `solvers x problems x repeats`, score each run against the dense
/// reference, and aggregate. Per-row failures are recorded in the row's
/// status, never aborting the suite. Rows come back in deterministic
/// (problem, solver, repeat) order.
pub fn run_bench(
    specs: &[ProblemSpec],
    solvers: &[String],
    repeats: usize,
    base_seed: u64,
) -> Result<(Vec<BenchRow>, Vec<BenchAggregate>), String> {
    for s in solvers {
        if !SOLVER_NAMES.contains(&s.as_str()) {
            return Err(format!(
                "unknown solver {s:?}; available: {}",
                SOLVER_NAMES.join(", ")
            ));
        }
    }
    let problems: Vec<EigenProblem64> = specs
        .iter()
        .map(load_problem)
        .collect::<Result<_, _>>()?;
    let references: Vec<Vec<f64>> = problems
        .par_iter()
        .map(|p| reference_spectrum(p).map(|(v, _)| v).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;

    let mut tasks = Vec::new();
    for (pi, problem) in problems.iter().enumerate() {
        for solver in solvers {
            for repeat in 0..repeats {
                tasks.push((pi, problem, solver.clone(), repeat));
            }
        }
    }
    let rows: Vec<BenchRow> = tasks
        .par_iter()
        .map(|(pi, problem, solver, repeat)| {
            bench_one(problem, &references[*pi], solver, *repeat, base_seed)
        })
        .collect();

    let aggregates = aggregate_rows(&rows, solvers);
    Ok((rows, aggregates))
}

fn bench_one(
    problem: &EigenProblem64,
    reference: &[f64],
    solver: &str,
    repeat: usize,
    base_seed: u64,
) -> BenchRow {
    let mut config =
        solver_config(solver, problem.n_expect).expect("solver names validated upfront");
    config.rng_seed = base_seed.wrapping_add(repeat as u64);
    let expected = reference.len();
    match run(problem, &config) {
        Ok(result) => {
            let (found, missed, _spurious) =
                compare_with_oracle(&result.eigenvalues, reference, problem.interval);
            BenchRow {
                problem: problem.label.clone(),
                solver: solver.to_string(),
                repeat,
                rhs_ovl: result.counters.rhs_ovl,
                bls_ovl: result.counters.bls_ovl,
                iterations: result.trace.len(),
                found_count: result.found_count(),
                expected_count: expected,
                success: result.status == SolveStatus::Converged
                    && found == expected
                    && missed.is_empty(),
                status: result.status.to_string(),
            }
        }
        Err(e) => BenchRow {
            problem: problem.label.clone(),
            solver: solver.to_string(),
            repeat,
            rhs_ovl: 0,
            bls_ovl: 0,
            iterations: 0,
            found_count: 0,
            expected_count: expected,
            success: false,
            status: format!("error: {e}").replace(',', ";"),
        },
    }
}

/// Mean overheads per solver, excluding problems where any solver (in any
/// repeat) missed eigenpairs.
pub fn aggregate_rows(rows: &[BenchRow], solvers: &[String]) -> Vec<BenchAggregate> {
    let mut clean_problems: Vec<&str> = rows.iter().map(|r| r.problem.as_str()).collect();
    clean_problems.dedup();
    clean_problems.retain(|p| rows.iter().filter(|r| r.problem == *p).all(|r| r.success));

    solvers
        .iter()
        .map(|solver| {
            let selected: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| &r.solver == solver && clean_problems.contains(&r.problem.as_str()))
                .collect();
            let (mean_rhs_ovl, mean_bls_ovl) = if selected.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let k = selected.len() as f64;
                (
                    selected.iter().map(|r| r.rhs_ovl as f64).sum::<f64>() / k,
                    selected.iter().map(|r| r.bls_ovl as f64).sum::<f64>() / k,
                )
            };
            BenchAggregate {
                solver: solver.clone(),
                mean_rhs_ovl,
                mean_bls_ovl,
                problems_counted: clean_problems.len(),
            }
        })
        .collect()
}

pub const BENCH_HEADER: &str =
    "problem,solver,repeat,rhs_ovl,bls_ovl,iterations,found_count,expected_count,success,status";

pub fn bench_to_csv(rows: &[BenchRow], aggregates: &[BenchAggregate]) -> String {
    let mut out = String::new();
    out.push_str(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.problem,
            r.solver,
            r.repeat,
            r.rhs_ovl,
            r.bls_ovl,
            r.iterations,
            r.found_count,
            r.expected_count,
            r.success,
            r.status
        )
        .expect("writing to a String cannot fail");
    }
    for a in aggregates {
        writeln!(
            out,
            "aggregate,{},,{},{},,,,,mean_over_{}_problems",
            a.solver, a.mean_rhs_ovl, a.mean_bls_ovl, a.problems_counted
        )
        .expect("writing to a String cannot fail");
    }
    out
}
