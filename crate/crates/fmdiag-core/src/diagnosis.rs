//! Test-driven debugging of a constraint set: preprocessing, consistency
//! filtering, divide-and-conquer search for a maximal satisfiable subset,
//! diagnosis extraction, minimality verification, and a brute-force
//! enumeration oracle for small instances.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::encode::{encode_formula, AuxAllocator, ConstraintSet};
use crate::model::{Formula, Polarity, TestCase};
use crate::sat::{Clause, ClauseDb, Lit, Solver};

/// Largest consideration set the enumeration oracle accepts.
pub const ORACLE_MAX_CONSTRAINTS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DebugError {
    /// A positive test case contradicts the background knowledge alone;
    /// no deletion of considered constraints can ever satisfy it.
    NoDiagnosisPossible {
        test: String,
    },
    /// The consideration set is not a duplicate-free subset of the
    /// constraint labels excluding the root constraint.
    InvalidConsiderationSet {
        label: String,
    },
    DuplicateTestLabel {
        label: String,
    },
    UnknownLabel {
        label: String,
    },
    UnknownFeature {
        name: String,
    },
    /// The consideration set exceeds [`ORACLE_MAX_CONSTRAINTS`].
    TooLarge {
        size: usize,
        limit: usize,
    },
}

impl fmt::Display for DebugError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DebugError::NoDiagnosisPossible { test } => write!(
                f,
                "no diagnosis possible: test `{test}` contradicts the background knowledge"
            ),
            DebugError::InvalidConsiderationSet { label } => {
                write!(f, "invalid consideration set entry `{label}`")
            }
            DebugError::DuplicateTestLabel { label } => {
                write!(f, "duplicate test label `{label}`")
            }
            DebugError::UnknownLabel { label } => write!(f, "unknown label `{label}`"),
            DebugError::UnknownFeature { name } => {
                write!(f, "unknown feature `{name}` in test case")
            }
            DebugError::TooLarge { size, limit } => {
                write!(
                    f,
                    "consideration set of {size} exceeds the oracle limit of {limit}"
                )
            }
        }
    }
}

/// A test case compiled to clauses over the session variable space.
#[derive(Clone, Debug)]
struct CompiledTest {
    label: String,
    clauses: Vec<Clause>,
}

/// One recorded invocation of the divide-and-conquer recursion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceNode {
    pub id: usize,
    pub consider: Vec<String>,
    pub background: Vec<String>,
    pub tests: Vec<String>,
    pub failing: Vec<String>,
    pub returned: Vec<String>,
}

impl TraceNode {
    /// One-line rendering, stable for golden-file comparison.
    pub fn to_line(&self) -> String {
        format!(
            "node {}: C={{{}}} B={{{}}} T={{{}}} T'={{{}}} return={{{}}}",
            self.id,
            self.consider.join(","),
            self.background.join(","),
            self.tests.join(","),
            self.failing.join(","),
            self.returned.join(","),
        )
    }
}

/// Outcome of [`DebugSession::diagnose`]: the maximal satisfiable subset,
/// its complement (the diagnosis), the tests dropped during preprocessing,
/// and instrumentation counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagnosisResult {
    /// Maximal satisfiable subset of the consideration set, in its order.
    pub gamma: Vec<String>,
    /// The diagnosis: consideration set minus `gamma`, order preserved.
    pub delta: Vec<String>,
    /// Positive tests filtered out as already consistent.
    pub filtered_tests: Vec<String>,
    /// Solver calls spent inside the divide-and-conquer recursion.
    pub solver_calls: u64,
    /// Number of recursion invocations.
    pub recursion_nodes: u64,
}

/// A debugging session over one constraint set.
///
/// Holds the consideration set `C`, the background `B` (root constraint,
/// non-considered constraints, and consistent negative tests in negated
/// form), and the positive tests that survived preprocessing. A session is
/// single-threaded and owns its solver; independent sessions may run
/// concurrently.
#[derive(Debug)]
pub struct DebugSession {
    constraints: ConstraintSet,
    consider: Vec<usize>,
    background_idx: Vec<usize>,
    folded_negatives: Vec<CompiledTest>,
    dropped_negatives: Vec<String>,
    positives: Vec<CompiledTest>,
    active: Vec<usize>,
    filtered: Vec<String>,
    num_vars: usize,
    solver: Solver,
    nodes: u64,
}

/// Builds a [`DebugSession`]: folds consistent negative tests into the
/// background (in suite order), drops inconsistent ones, then keeps
/// exactly the positive tests that are inconsistent with `C` and the
/// final background.
pub fn preprocess(
    cs: &ConstraintSet,
    consider_labels: &[&str],
    positives: &[TestCase],
    negatives: &[TestCase],
) -> Result<DebugSession, DebugError> {
    let mut consider = Vec::with_capacity(consider_labels.len());
    let mut seen = BTreeSet::new();
    for &label in consider_labels {
        let idx = cs
            .constraints()
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| DebugError::InvalidConsiderationSet {
                label: label.to_owned(),
            })?;
        // The root constraint is background by definition and never
        // diagnosable; duplicates are rejected too.
        let is_root = matches!(
            cs.constraints()[idx].provenance,
            crate::encode::Provenance::Root
        );
        if is_root || !seen.insert(idx) {
            return Err(DebugError::InvalidConsiderationSet {
                label: label.to_owned(),
            });
        }
        consider.push(idx);
    }
    let background_idx: Vec<usize> = (0..cs.len()).filter(|i| !seen.contains(i)).collect();

    let mut labels = BTreeSet::new();
    for t in positives.iter().chain(negatives) {
        if !labels.insert(t.label.as_str()) {
            return Err(DebugError::DuplicateTestLabel {
                label: t.label.clone(),
            });
        }
    }

    let mut session = DebugSession {
        constraints: cs.clone(),
        consider: consider.clone(),
        background_idx,
        folded_negatives: Vec::new(),
        dropped_negatives: Vec::new(),
        positives: Vec::new(),
        active: Vec::new(),
        filtered: Vec::new(),
        num_vars: cs.vars().feature_count(),
        solver: Solver::new(),
        nodes: 0,
    };

    let mut aux = AuxAllocator::new(cs.vars());
    let compile = |formula: &Formula, aux: &mut AuxAllocator| {
        encode_formula(formula, cs.vars(), aux)
            .map_err(|e| DebugError::UnknownFeature { name: e.0 })
    };

    for t in negatives {
        debug_assert_eq!(t.polarity, Polarity::Negative);
        let original = compile(&t.formula, &mut aux)?;
        session.num_vars = aux.num_vars();
        let consistent = session.solve_with(true, true, &[], &consider, None, Some(&original));
        if consistent {
            let negated = Formula::Not(alloc::boxed::Box::new(t.formula.clone()));
            let clauses = compile(&negated, &mut aux)?;
            session.num_vars = aux.num_vars();
            session.folded_negatives.push(CompiledTest {
                label: t.label.clone(),
                clauses,
            });
        } else {
            session.dropped_negatives.push(t.label.clone());
        }
    }

    for t in positives {
        debug_assert_eq!(t.polarity, Polarity::Positive);
        let clauses = compile(&t.formula, &mut aux)?;
        session.num_vars = aux.num_vars();
        session.positives.push(CompiledTest {
            label: t.label.clone(),
            clauses,
        });
    }
    for i in 0..session.positives.len() {
        let consistent = session.solve_with(true, true, &[], &consider, Some(i), None);
        if consistent {
            session.filtered.push(session.positives[i].label.clone());
        } else if session.solve_with(true, true, &[], &[], Some(i), None) {
            session.active.push(i);
        } else {
            return Err(DebugError::NoDiagnosisPossible {
                test: session.positives[i].label.clone(),
            });
        }
    }

    Ok(session)
}

impl DebugSession {
    /// Consideration-set labels, in order.
    pub fn consider_labels(&self) -> Vec<String> {
        self.constraint_labels(&self.consider)
    }

    /// Background labels: constraints first, then folded negative tests.
    pub fn background_labels(&self) -> Vec<String> {
        let mut out = self.constraint_labels(&self.background_idx);
        out.extend(self.folded_negatives.iter().map(|t| t.label.clone()));
        out
    }

    /// Labels of positive tests kept for diagnosis, in suite order.
    pub fn active_labels(&self) -> Vec<String> {
        self.active
            .iter()
            .map(|&i| self.positives[i].label.clone())
            .collect()
    }

    /// Labels of positive tests filtered out as consistent.
    pub fn filtered_labels(&self) -> &[String] {
        &self.filtered
    }

    /// Negative tests dropped because they were already inconsistent.
    pub fn dropped_negative_labels(&self) -> &[String] {
        &self.dropped_negatives
    }

    /// Cumulative solver calls of this session.
    pub fn solver_calls(&self) -> u64 {
        self.solver.calls()
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    fn constraint_labels(&self, idxs: &[usize]) -> Vec<String> {
        idxs.iter()
            .map(|&i| self.constraints.constraints()[i].label.clone())
            .collect()
    }

    fn constraint_index(&self, label: &str) -> Result<usize, DebugError> {
        self.constraints
            .constraints()
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| DebugError::UnknownLabel {
                label: label.to_owned(),
            })
    }

    fn positive_index(&self, label: &str) -> Result<usize, DebugError> {
        self.positives
            .iter()
            .position(|t| t.label == label)
            .ok_or_else(|| DebugError::UnknownLabel {
                label: label.to_owned(),
            })
    }

    /// One solver call over the chosen constraint clauses, optionally the
    /// session background and folded negatives, and at most one test case.
    fn solve_with(
        &mut self,
        include_background: bool,
        include_folded: bool,
        b_ext: &[usize],
        c_part: &[usize],
        test: Option<usize>,
        extra: Option<&[Clause]>,
    ) -> bool {
        fn push_constraints<'a>(
            all: &'a [crate::encode::LabeledConstraint],
            idxs: &[usize],
            refs: &mut Vec<&'a [Lit]>,
        ) {
            for &i in idxs {
                for clause in &all[i].clauses {
                    refs.push(clause.as_slice());
                }
            }
        }

        let mut refs: Vec<&[Lit]> = Vec::new();
        let all = self.constraints.constraints();
        if include_background {
            push_constraints(all, &self.background_idx, &mut refs);
        }
        if include_folded {
            for t in &self.folded_negatives {
                for clause in &t.clauses {
                    refs.push(clause.as_slice());
                }
            }
        }
        push_constraints(all, b_ext, &mut refs);
        push_constraints(all, c_part, &mut refs);
        if let Some(i) = test {
            for clause in &self.positives[i].clauses {
                refs.push(clause.as_slice());
            }
        }
        if let Some(clauses) = extra {
            for clause in clauses {
                refs.push(clause.as_slice());
            }
        }
        let db = ClauseDb::new(self.num_vars);
        self.solver.solve_refs(&db, &refs).is_sat()
    }

    /// One solver call per test, in order; returns whether all passed and
    /// the failing (inconsistent) tests, order preserved.
    fn is_consistent_idx(
        &mut self,
        c_part: &[usize],
        b_ext: &[usize],
        tests: &[usize],
    ) -> (bool, Vec<usize>) {
        let mut failing = Vec::new();
        for &ti in tests {
            if !self.solve_with(true, true, b_ext, c_part, Some(ti), None) {
                failing.push(ti);
            }
        }
        (failing.is_empty(), failing)
    }

    /// Consistency check of `c_part` and `b` against the given positive
    /// tests, one solver call per test. `b` lists constraint labels;
    /// negative tests folded during preprocessing are always part of the
    /// background.
    pub fn is_consistent(
        &mut self,
        c_part: &[&str],
        b: &[&str],
        tests: &[&str],
    ) -> Result<(bool, Vec<String>), DebugError> {
        debug_assert!(!tests.is_empty());
        let c_idx = self.resolve_constraints(c_part)?;
        let b_idx = self.resolve_constraints(b)?;
        let t_idx = self.resolve_tests(tests)?;
        let mut failing = Vec::new();
        for &ti in &t_idx {
            if !self.solve_with(false, true, &b_idx, &c_idx, Some(ti), None) {
                failing.push(self.positives[ti].label.clone());
            }
        }
        Ok((failing.is_empty(), failing))
    }

    fn resolve_constraints(&self, labels: &[&str]) -> Result<Vec<usize>, DebugError> {
        labels.iter().map(|l| self.constraint_index(l)).collect()
    }

    fn resolve_tests(&self, labels: &[&str]) -> Result<Vec<usize>, DebugError> {
        labels.iter().map(|l| self.positive_index(l)).collect()
    }

    /// The divide-and-conquer search for a maximal satisfiable subset of
    /// `c` with respect to `b` (additional constraint labels on top of the
    /// session background) and the given tests.
    pub fn direct_debug(
        &mut self,
        c: &[&str],
        b: &[&str],
        tests: &[&str],
    ) -> Result<Vec<String>, DebugError> {
        assert!(!c.is_empty(), "consideration set must be non-empty");
        let c_idx = self.resolve_constraints(c)?;
        let mut b_idx = self.resolve_constraints(b)?;
        let t_idx = self.resolve_tests(tests)?;
        let gamma = self.dd(&c_idx, &mut b_idx, &t_idx, &mut None);
        Ok(self.constraint_labels(&gamma))
    }

    fn dd(
        &mut self,
        c: &[usize],
        b_ext: &mut Vec<usize>,
        tests: &[usize],
        trace: &mut Option<Vec<TraceNode>>,
    ) -> Vec<usize> {
        self.nodes += 1;
        let slot = if let Some(tr) = trace.as_mut() {
            let mut background = self.background_labels();
            background.extend(self.constraint_labels(b_ext));
            tr.push(TraceNode {
                id: tr.len() + 1,
                consider: self.constraint_labels(c),
                background,
                tests: tests
                    .iter()
                    .map(|&i| self.positives[i].label.clone())
                    .collect(),
                failing: Vec::new(),
                returned: Vec::new(),
            });
            Some(tr.len() - 1)
        } else {
            None
        };

        let (all_ok, failing) = self.is_consistent_idx(c, b_ext, tests);
        if let (Some(i), Some(tr)) = (slot, trace.as_mut()) {
            tr[i].failing = failing
                .iter()
                .map(|&ti| self.positives[ti].label.clone())
                .collect();
        }

        let result = if all_ok {
            c.to_vec()
        } else if c.len() == 1 {
            Vec::new()
        } else {
            let k = c.len() / 2;
            let (c1, c2) = c.split_at(k);
            // Both recursive calls receive this node's failing set.
            let gamma2 = self.dd(c1, b_ext, &failing, trace);
            let added = gamma2.len();
            b_ext.extend_from_slice(&gamma2);
            let gamma1 = self.dd(c2, b_ext, &failing, trace);
            b_ext.truncate(b_ext.len() - added);
            let mut out = gamma2;
            out.extend(gamma1);
            out
        };

        if let (Some(i), Some(tr)) = (slot, trace.as_mut()) {
            tr[i].returned = self.constraint_labels(&result);
        }
        result
    }

    /// Computes the diagnosis for this session. With no active tests the
    /// result is the empty diagnosis and the recursion never runs.
    pub fn diagnose(&mut self) -> DiagnosisResult {
        self.run_diagnosis(&mut None)
    }

    /// Like [`DebugSession::diagnose`], also recording one trace node per
    /// recursion invocation.
    pub fn diagnose_with_trace(&mut self) -> (DiagnosisResult, Vec<TraceNode>) {
        let mut trace = Some(Vec::new());
        let result = self.run_diagnosis(&mut trace);
        (result, trace.unwrap_or_default())
    }

    fn run_diagnosis(&mut self, trace: &mut Option<Vec<TraceNode>>) -> DiagnosisResult {
        self.nodes = 0;
        let consider = self.consider.clone();
        let active = self.active.clone();
        if active.is_empty() {
            return DiagnosisResult {
                gamma: self.constraint_labels(&consider),
                delta: Vec::new(),
                filtered_tests: self.filtered.clone(),
                solver_calls: 0,
                recursion_nodes: 0,
            };
        }

        let calls_before = self.solver.calls();
        let mut b_ext = Vec::new();
        let gamma_idx = self.dd(&consider, &mut b_ext, &active, trace);
        let solver_calls = self.solver.calls() - calls_before;

        let gamma_set: BTreeSet<usize> = gamma_idx.iter().copied().collect();
        let delta_idx: Vec<usize> = consider
            .iter()
            .copied()
            .filter(|i| !gamma_set.contains(i))
            .collect();

        // Post-hoc validation against the full positive suite, not just the
        // active tests: consistent tests must stay consistent under deletion.
        for i in 0..self.positives.len() {
            let ok = self.solve_with(true, true, &[], &gamma_idx, Some(i), None);
            assert!(
                ok,
                "internal error: diagnosis leaves test `{}` inconsistent",
                self.positives[i].label
            );
        }

        DiagnosisResult {
            gamma: self.constraint_labels(&gamma_idx),
            delta: self.constraint_labels(&delta_idx),
            filtered_tests: self.filtered.clone(),
            solver_calls,
            recursion_nodes: self.nodes,
        }
    }

    /// Checks that `delta` is a valid diagnosis and that no single-element
    /// removal keeps it valid. `delta` must name considered constraints.
    pub fn verify_minimal(&mut self, delta: &[&str]) -> Result<bool, DebugError> {
        let delta_idx = self.resolve_constraints(delta)?;
        for &d in &delta_idx {
            if !self.consider.contains(&d) {
                return Err(DebugError::InvalidConsiderationSet {
                    label: self.constraints.constraints()[d].label.clone(),
                });
            }
        }
        let delta_set: BTreeSet<usize> = delta_idx.iter().copied().collect();
        let keep: Vec<usize> = self
            .consider
            .iter()
            .copied()
            .filter(|i| !delta_set.contains(i))
            .collect();

        let active = self.active.clone();
        for &ti in &active {
            if !self.solve_with(true, true, &[], &keep, Some(ti), None) {
                return Ok(false);
            }
        }
        for &d in &delta_idx {
            let mut kept_plus: Vec<usize> = keep.clone();
            kept_plus.push(d);
            let some_test_fails = active
                .iter()
                .any(|&ti| !self.solve_with(true, true, &[], &kept_plus, Some(ti), None));
            if !some_test_fails {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Enumerates every inclusion-minimal diagnosis by checking subsets of
    /// the consideration set in increasing cardinality (lexicographic
    /// within a cardinality). Exponential; limited to
    /// [`ORACLE_MAX_CONSTRAINTS`] constraints.
    pub fn all_minimal_diagnoses(&mut self) -> Result<Vec<Vec<String>>, DebugError> {
        let n = self.consider.len();
        if n > ORACLE_MAX_CONSTRAINTS {
            return Err(DebugError::TooLarge {
                size: n,
                limit: ORACLE_MAX_CONSTRAINTS,
            });
        }
        let consider = self.consider.clone();
        let active = self.active.clone();
        let mut minimal_masks: Vec<u32> = Vec::new();
        let mut result: Vec<Vec<String>> = Vec::new();

        for cardinality in 0..=n {
            let mut positions: Vec<usize> = (0..cardinality).collect();
            let mut all_covered = true;
            loop {
                let mask: u32 = positions.iter().fold(0, |m, &p| m | 1 << p);
                let covered = minimal_masks.iter().any(|&m| m | mask == mask);
                if !covered {
                    all_covered = false;
                    let keep: Vec<usize> = consider
                        .iter()
                        .enumerate()
                        .filter(|(p, _)| mask & (1 << p) == 0)
                        .map(|(_, &i)| i)
                        .collect();
                    let valid = active
                        .iter()
                        .all(|&ti| self.solve_with(true, true, &[], &keep, Some(ti), None));
                    if valid {
                        minimal_masks.push(mask);
                        let labels: Vec<usize> = positions.iter().map(|&p| consider[p]).collect();
                        result.push(self.constraint_labels(&labels));
                    }
                }
                if !next_combination(&mut positions, n) {
                    break;
                }
            }
            // Once every subset of a cardinality is covered by an emitted
            // diagnosis, every larger subset is covered too.
            if cardinality > 0 && all_covered {
                break;
            }
        }
        Ok(result)
    }
}

/// Advances to the lexicographically next k-combination of `0..n`.
fn next_combination(positions: &mut [usize], n: usize) -> bool {
    let k = positions.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if positions[i] != i + n - k {
            positions[i] += 1;
            for j in i + 1..k {
                positions[j] = positions[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
