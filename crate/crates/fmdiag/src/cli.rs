//! Command-line interface. Exit codes: 0 on success, 1 on domain errors
//! (parse failures, infeasible synthesis, impossible diagnosis), 2 on
//! usage errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fmdiag_core::{
    analyze, encode, generate_tests, parse_model, parse_test_suite, preprocess, synth_model,
    synth_tests, ClauseDb, DebugSession, FeatureModel, Solver, SynthParams, TestKind, TestSuite,
};

use crate::bench::{run_bench, BenchParams};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "fmdiag",
    version,
    about = "Feature model testing and debugging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check each test case against the encoded model, one line per test
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tests: PathBuf,
    },
    /// Dump the labeled CNF encoding of a model
    Encode {
        #[arg(long)]
        model: PathBuf,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a minimal diagnosis for the failing positive tests
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tests: PathBuf,
        /// Constraint labels to consider faulty (default: all but c0)
        #[arg(long, value_delimiter = ',')]
        consider: Option<Vec<String>>,
        /// Print one line per recursion node
        #[arg(long)]
        trace: bool,
    },
    /// Report void status, dead features, and false optionals
    Analyze {
        #[arg(long)]
        model: PathBuf,
    },
    /// Generate a test suite from analysis operations
    GenTests {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize a seeded random model and test suite
    Synth {
        /// Encoded constraint count excluding the root constraint
        #[arg(long)]
        constraints: usize,
        #[arg(long, default_value_t = 0)]
        tests: usize,
        /// Share of inconsistency-inducing tests
        #[arg(long, default_value_t = 0.30)]
        share: f64,
        /// Defaults to FMDIAG_SEED or 42
        #[arg(long)]
        seed: Option<u64>,
        /// Lower bound on the cross-tree share of constraints
        #[arg(long, default_value_t = 0.2)]
        ctc_ratio: f64,
        /// Relationship-kind weights: mandatory,optional,alternative,or
        #[arg(long, value_delimiter = ',', num_args = 4)]
        kind_weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 4)]
        group_size_max: usize,
        #[arg(long)]
        out_model: PathBuf,
        #[arg(long)]
        out_tests: Option<PathBuf>,
    },
    /// Run the benchmark grid and write per-repetition CSV data
    Bench {
        /// Test-set sizes (grid rows)
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
        /// Constraint-set sizes (grid columns)
        #[arg(long, value_delimiter = ',')]
        cols: Option<Vec<usize>>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Defaults to FMDIAG_SEED or 42
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.30)]
        share: f64,
        /// Worker threads; keep at 1 for clean timings
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Dead,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.exit_code() == 0 { 0 } else { 2 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("fmdiag: {err:#}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Check { model, tests } => check(&model, &tests),
        Command::Encode { model, out } => encode_cmd(&model, out.as_deref()),
        Command::Diagnose {
            model,
            tests,
            consider,
            trace,
        } => diagnose_cmd(&model, &tests, consider, trace),
        Command::Analyze { model } => analyze_cmd(&model),
        Command::GenTests { model, kind, out } => gen_tests_cmd(&model, kind, &out),
        Command::Synth {
            constraints,
            tests,
            share,
            seed,
            ctc_ratio,
            kind_weights,
            group_size_max,
            out_model,
            out_tests,
        } => {
            let mut params = SynthParams::new(constraints, resolve_seed(seed));
            params.num_tests = tests;
            params.inconsistency_share = share;
            params.ctc_ratio = ctc_ratio;
            if let Some(w) = kind_weights {
                params.kind_weights = [w[0], w[1], w[2], w[3]];
            }
            params.group_size_max = group_size_max;
            synth_cmd(&params, &out_model, out_tests.as_deref())
        }
        Command::Bench {
            rows,
            cols,
            reps,
            seed,
            share,
            jobs,
            out,
        } => {
            let mut params = BenchParams {
                reps,
                seed: resolve_seed(seed),
                share,
                jobs,
                ..BenchParams::default()
            };
            if let Some(rows) = rows {
                params.rows = rows;
            }
            if let Some(cols) = cols {
                params.cols = cols;
            }
            bench_cmd(&params, &out)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    if let Some(seed) = flag {
        return seed;
    }
    std::env::var("FMDIAG_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

fn load_model(path: &Path) -> Result<FeatureModel> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading model file `{}`", path.display()))?;
    parse_model(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_suite(path: &Path, model: &FeatureModel) -> Result<TestSuite> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading test-suite file `{}`", path.display()))?;
    parse_test_suite(&text, Some(model)).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn check(model_path: &Path, tests_path: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let suite = load_suite(tests_path, &model)?;
    let cs = encode(&model);
    let mut solver = Solver::new();
    let base: Vec<fmdiag_core::Clause> = cs.all_clauses().cloned().collect();

    for test in suite.positives.iter().chain(&suite.negatives) {
        let mut aux = fmdiag_core::AuxAllocator::new(cs.vars());
        let clauses = fmdiag_core::encode_formula(&test.formula, cs.vars(), &mut aux)
            .map_err(|e| anyhow!("{e}"))?;
        let db = ClauseDb::new(aux.num_vars());
        let mut all: Vec<&[fmdiag_core::Lit]> = base.iter().map(|c| c.as_slice()).collect();
        all.extend(clauses.iter().map(|c| c.as_slice()));
        let verdict = if solver.solve_refs(&db, &all).is_sat() {
            "SAT"
        } else {
            "UNSAT"
        };
        println!("{}: {verdict}", test.label);
    }
    Ok(())
}

fn encode_cmd(model_path: &Path, out: Option<&Path>) -> Result<()> {
    let model = load_model(model_path)?;
    let dump = encode(&model).to_dimacs_like();
    match out {
        Some(path) => {
            fs::write(path, dump).with_context(|| format!("writing `{}`", path.display()))?
        }
        None => print!("{dump}"),
    }
    Ok(())
}

fn build_session(
    model_path: &Path,
    tests_path: &Path,
    consider: Option<Vec<String>>,
) -> Result<DebugSession> {
    let model = load_model(model_path)?;
    let suite = load_suite(tests_path, &model)?;
    let cs = encode(&model);
    let consider: Vec<String> = match consider {
        Some(labels) => labels,
        None => cs
            .labels()
            .filter(|l| *l != "c0")
            .map(str::to_string)
            .collect(),
    };
    let refs: Vec<&str> = consider.iter().map(String::as_str).collect();
    preprocess(&cs, &refs, &suite.positives, &suite.negatives).map_err(|e| anyhow!("{e}"))
}

/// `label:` alone for an empty list, `label: a b c` otherwise.
fn list_line(label: &str, items: &[String]) -> String {
    if items.is_empty() {
        format!("{label}:")
    } else {
        format!("{label}: {}", items.join(" "))
    }
}

fn diagnose_cmd(
    model_path: &Path,
    tests_path: &Path,
    consider: Option<Vec<String>>,
    trace: bool,
) -> Result<()> {
    let mut session = build_session(model_path, tests_path, consider)?;
    println!("{}", list_line("filtered", session.filtered_labels()));
    if !session.dropped_negative_labels().is_empty() {
        println!(
            "notice: dropped inconsistent negative tests: {}",
            session.dropped_negative_labels().join(" ")
        );
    }
    let result = if trace {
        let (result, nodes) = session.diagnose_with_trace();
        for node in &nodes {
            println!("{}", node.to_line());
        }
        result
    } else {
        session.diagnose()
    };
    println!("{}", list_line("gamma", &result.gamma));
    println!("{}", list_line("delta", &result.delta));
    println!(
        "nodes: {}  solver-calls: {}",
        result.recursion_nodes, result.solver_calls
    );
    Ok(())
}

fn analyze_cmd(model_path: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let cs = encode(&model);
    let report = analyze(&cs, &model);
    println!("void: {}", report.void);
    println!("{}", list_line("dead", &report.dead_features));
    println!("{}", list_line("false-optional", &report.false_optionals));
    Ok(())
}

fn gen_tests_cmd(model_path: &Path, kind: GenKind, out: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let kinds = match kind {
        GenKind::Dead => [TestKind::DeadFeature],
    };
    let tests = generate_tests(&model, &kinds);
    let suite = TestSuite {
        positives: tests,
        negatives: Vec::new(),
    };
    fs::write(out, suite.to_tc_string()).with_context(|| format!("writing `{}`", out.display()))?;
    println!("wrote {} tests to {}", suite.positives.len(), out.display());
    Ok(())
}

fn synth_cmd(params: &SynthParams, out_model: &Path, out_tests: Option<&Path>) -> Result<()> {
    let model = synth_model(params).map_err(|e| anyhow!("{e}"))?;
    fs::write(out_model, model.to_fm_string())
        .with_context(|| format!("writing `{}`", out_model.display()))?;
    println!(
        "model: {} features, {} constraints -> {}",
        model.features.len(),
        params.num_constraints,
        out_model.display()
    );
    if let Some(path) = out_tests {
        let tests = synth_tests(&model, params).map_err(|e| anyhow!("{e}"))?;
        let count = tests.len();
        let suite = TestSuite {
            positives: tests,
            negatives: Vec::new(),
        };
        fs::write(path, suite.to_tc_string())
            .with_context(|| format!("writing `{}`", path.display()))?;
        println!("tests: {} -> {}", count, path.display());
    }
    Ok(())
}

fn bench_cmd(params: &BenchParams, out: &Path) -> Result<()> {
    let report = run_bench(params);
    fs::write(out, report.to_csv()).with_context(|| format!("writing `{}`", out.display()))?;
    println!("mean diagnosis time (ms), seed {}", report.base_seed);
    print!("{}", report.text_table());
    for (t_pi, cf, err) in &report.failed {
        eprintln!("cell ({t_pi}, {cf}) failed: {err}");
    }
    println!("environment: {}", report.environment);
    println!("csv: {}", out.display());
    Ok(())
}
