//! Benchmark harness: synthesizes model/test-suite instances over a grid
//! of test-set and constraint-set cardinalities and measures diagnosis
//! wall time (preprocessing plus the divide-and-conquer run; synthesis,
//! parsing, and encoding are excluded).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use fmdiag_core::{derive_seed, encode, preprocess, synth_model, synth_tests, SynthParams};

/// Grid parameters. Defaults mirror the usual evaluation layout: seven
/// test-set sizes by six constraint-set sizes, three repetitions.
#[derive(Clone, Debug)]
pub struct BenchParams {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub share: f64,
    pub jobs: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            rows: vec![5, 10, 25, 50, 100, 250, 500],
            cols: vec![10, 20, 50, 100, 500, 1000],
            reps: 3,
            seed: 42,
            share: 0.30,
            jobs: 1,
        }
    }
}

/// One repetition of one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSample {
    pub t_pi: usize,
    pub cf: usize,
    pub rep: usize,
    pub seed: u64,
    pub diagnosis_ms: f64,
    pub solver_calls: u64,
    pub nodes: u64,
    pub delta_size: usize,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub reps: usize,
    pub base_seed: u64,
    /// Samples in row-major cell order, repetitions adjacent.
    pub samples: Vec<CellSample>,
    /// Cells that failed to synthesize, with the error text.
    pub failed: Vec<(usize, usize, String)>,
    pub environment: String,
}

impl BenchReport {
    /// Mean diagnosis time of a cell, if it produced samples.
    pub fn mean_ms(&self, t_pi: usize, cf: usize) -> Option<f64> {
        let cell: Vec<&CellSample> = self
            .samples
            .iter()
            .filter(|s| s.t_pi == t_pi && s.cf == cf)
            .collect();
        if cell.is_empty() {
            return None;
        }
        Some(cell.iter().map(|s| s.diagnosis_ms).sum::<f64>() / cell.len() as f64)
    }

    /// CSV rendering; floats use the shortest round-tripping form so
    /// [`parse_csv`] reproduces the numbers exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_pi,cf,rep,seed,diagnosis_ms,solver_calls,nodes,delta_size\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.t_pi, s.cf, s.rep, s.seed, s.diagnosis_ms, s.solver_calls, s.nodes, s.delta_size
            ));
        }
        out
    }

    /// Aligned table of per-cell means, constraint counts across.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:>8}", "|T_pi|"));
        for &cf in &self.cols {
            out.push_str(&format!("{cf:>10}"));
        }
        out.push('\n');
        for &t_pi in &self.rows {
            out.push_str(&format!("{t_pi:>8}"));
            for &cf in &self.cols {
                match self.mean_ms(t_pi, cf) {
                    Some(ms) => out.push_str(&format!("{ms:>10.1}")),
                    None => out.push_str(&format!("{:>10}", "fail")),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Parses [`BenchReport::to_csv`] output back into samples.
pub fn parse_csv(text: &str) -> Result<Vec<CellSample>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty CSV")?;
    if header != "t_pi,cf,rep,seed,diagnosis_ms,solver_calls,nodes,delta_size" {
        return Err(format!("unexpected header `{header}`"));
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(format!("line {}: expected 8 fields", i + 2));
        }
        let parse = |j: usize| -> Result<u64, String> {
            fields[j]
                .parse()
                .map_err(|e| format!("line {}: {e}", i + 2))
        };
        samples.push(CellSample {
            t_pi: parse(0)? as usize,
            cf: parse(1)? as usize,
            rep: parse(2)? as usize,
            seed: parse(3)?,
            diagnosis_ms: fields[4]
                .parse()
                .map_err(|e| format!("line {}: {e}", i + 2))?,
            solver_calls: parse(5)?,
            nodes: parse(6)?,
            delta_size: parse(7)? as usize,
        });
    }
    Ok(samples)
}

enum CellOutcome {
    Samples(Vec<CellSample>),
    Failed(String),
}

/// Runs the grid. Each cell repetition synthesizes a fresh instance from
/// a seed derived from `(seed, |T_pi|, |CF|, rep)`, so results (not
/// timings) are reproducible. With `jobs > 1` whole cells run on worker
/// threads; all repetitions of a cell stay on one worker.
pub fn run_bench(params: &BenchParams) -> BenchReport {
    assert!(params.reps >= 1, "reps must be at least 1");
    assert!(params.jobs >= 1, "jobs must be at least 1");

    let cells: Vec<(usize, usize)> = params
        .rows
        .iter()
        .flat_map(|&r| params.cols.iter().map(move |&c| (r, c)))
        .collect();

    let outcomes: Vec<Option<CellOutcome>> = if params.jobs == 1 {
        cells
            .iter()
            .map(|&(t_pi, cf)| Some(run_cell(params, t_pi, cf)))
            .collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<CellOutcome>>> =
            Mutex::new((0..cells.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..params.jobs.min(cells.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&(t_pi, cf)) = cells.get(i) else {
                        break;
                    };
                    let outcome = run_cell(params, t_pi, cf);
                    slots.lock().expect("bench worker poisoned")[i] = Some(outcome);
                });
            }
        });
        slots.into_inner().expect("bench workers joined")
    };

    let mut samples = Vec::new();
    let mut failed = Vec::new();
    for (&(t_pi, cf), outcome) in cells.iter().zip(outcomes) {
        match outcome.expect("every cell visited") {
            CellOutcome::Samples(s) => samples.extend(s),
            CellOutcome::Failed(e) => failed.push((t_pi, cf, e)),
        }
    }

    BenchReport {
        rows: params.rows.clone(),
        cols: params.cols.clone(),
        reps: params.reps,
        base_seed: params.seed,
        samples,
        failed,
        environment: format!(
            "{} {} ({} jobs)",
            std::env::consts::OS,
            std::env::consts::ARCH,
            params.jobs
        ),
    }
}

fn run_cell(params: &BenchParams, t_pi: usize, cf: usize) -> CellOutcome {
    let mut samples = Vec::with_capacity(params.reps);
    for rep in 1..=params.reps {
        let seed = derive_seed(params.seed, &[t_pi as u64, cf as u64, rep as u64]);
        let mut sp = SynthParams::new(cf, seed);
        sp.num_tests = t_pi;
        sp.inconsistency_share = params.share;

        let model = match synth_model(&sp) {
            Ok(m) => m,
            Err(e) => return CellOutcome::Failed(e.to_string()),
        };
        let tests = match synth_tests(&model, &sp) {
            Ok(t) => t,
            Err(e) => return CellOutcome::Failed(e.to_string()),
        };
        let cs = encode(&model);
        let consider: Vec<&str> = cs.labels().filter(|l| *l != "c0").collect();

        let start = Instant::now();
        let mut session = match preprocess(&cs, &consider, &tests, &[]) {
            Ok(s) => s,
            Err(e) => return CellOutcome::Failed(e.to_string()),
        };
        let result = session.diagnose();
        let diagnosis_ms = start.elapsed().as_secs_f64() * 1e3;

        samples.push(CellSample {
            t_pi,
            cf,
            rep,
            seed,
            diagnosis_ms,
            solver_calls: session.solver_calls(),
            nodes: result.recursion_nodes,
            delta_size: result.delta.len(),
        });
    }
    CellOutcome::Samples(samples)
}
