//! Propositional satisfiability under assumption clauses.
//!
//! This is the single consistency primitive used by encoding checks,
//! preprocessing, diagnosis and analysis. The search is a plain DPLL with
//! unit propagation and a fixed branching rule (lowest unassigned variable
//! first, `true` before `false`), so results and witnesses are fully
//! deterministic for a given input.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Not;

/// A literal: a variable index with a sign, packed into one word.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        debug_assert!(var < (u32::MAX >> 1) as usize);
        Lit((var as u32) << 1 | u32::from(!positive))
    }

    pub fn pos(var: usize) -> Lit {
        Lit::new(var, true)
    }

    pub fn neg(var: usize) -> Lit {
        Lit::new(var, false)
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn code(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_positive() {
            write!(f, "x{}", self.var())
        } else {
            write!(f, "!x{}", self.var())
        }
    }
}

/// A disjunction of literals.
pub type Clause = Vec<Lit>;

/// A fixed set of clauses over a fixed variable count.
///
/// An empty clause passed to [`ClauseDb::add_clause`] is not stored; it
/// marks the whole database as trivially unsatisfiable instead.
#[derive(Clone, Debug, Default)]
pub struct ClauseDb {
    num_vars: usize,
    clauses: Vec<Clause>,
    trivially_unsat: bool,
}

impl ClauseDb {
    pub fn new(num_vars: usize) -> ClauseDb {
        ClauseDb {
            num_vars,
            clauses: Vec::new(),
            trivially_unsat: false,
        }
    }

    pub fn add_clause(&mut self, clause: Clause) {
        if clause.is_empty() {
            self.trivially_unsat = true;
            return;
        }
        debug_assert!(clause.iter().all(|l| l.var() < self.num_vars));
        self.clauses.push(clause);
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_trivially_unsat(&self) -> bool {
        self.trivially_unsat
    }
}

/// Outcome of a [`Solver::solve`] call. A witness is a total assignment
/// over all variables of the database, auxiliaries included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn witness(&self) -> Option<&[bool]> {
        match self {
            SatResult::Sat(w) => Some(w),
            SatResult::Unsat => None,
        }
    }
}

#[derive(Copy, Clone, Debug)]
struct Decision {
    var: usize,
    trail_mark: usize,
    flipped: bool,
}

/// Backtracking SAT solver with a per-session call counter.
///
/// A solver instance is single-threaded; independent instances may run
/// concurrently on disjoint inputs. Scratch buffers are kept between calls
/// so repeated solving over the same variable space does not reallocate.
#[derive(Debug)]
pub struct Solver {
    calls: u64,
    values: Vec<Option<bool>>,
    occ: Vec<Vec<u32>>,
    trail: Vec<Lit>,
    decisions: Vec<Decision>,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            calls: 0,
            values: Vec::new(),
            occ: Vec::new(),
            trail: Vec::new(),
            decisions: Vec::new(),
        }
    }

    /// Number of `solve` calls since construction or the last reset.
    /// Increments by exactly one per call.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn reset_calls(&mut self) {
        self.calls = 0;
    }

    /// Decides satisfiability of `db` plus the given assumption clauses.
    pub fn solve(&mut self, db: &ClauseDb, assumptions: &[Clause]) -> SatResult {
        let refs: Vec<&[Lit]> = assumptions.iter().map(|c| c.as_slice()).collect();
        self.solve_refs(db, &refs)
    }

    /// Same as [`Solver::solve`] but with borrowed assumption clauses, so
    /// callers that assemble large clause sets per call avoid copies.
    pub fn solve_refs(&mut self, db: &ClauseDb, assumptions: &[&[Lit]]) -> SatResult {
        self.calls += 1;
        if db.trivially_unsat {
            return SatResult::Unsat;
        }
        if assumptions.iter().any(|c| c.is_empty()) {
            return SatResult::Unsat;
        }
        debug_assert!(assumptions
            .iter()
            .all(|c| c.iter().all(|l| l.var() < db.num_vars)));

        let result = self.search(db.num_vars, db.clauses(), assumptions);

        #[cfg(debug_assertions)]
        if let SatResult::Sat(w) = &result {
            let holds = |c: &[Lit]| c.iter().any(|l| w[l.var()] == l.is_positive());
            assert!(
                db.clauses().iter().all(|c| holds(c)) && assumptions.iter().all(|c| holds(c)),
                "SAT witness does not satisfy all clauses"
            );
        }

        result
    }

    fn search(&mut self, num_vars: usize, base: &[Clause], extra: &[&[Lit]]) -> SatResult {
        let n_clauses = base.len() + extra.len();
        let clause = |i: usize| -> &[Lit] {
            if i < base.len() {
                &base[i]
            } else {
                extra[i - base.len()]
            }
        };

        let values = &mut self.values;
        let occ = &mut self.occ;
        let trail = &mut self.trail;
        let decisions = &mut self.decisions;

        values.clear();
        values.resize(num_vars, None);
        for bucket in occ.iter_mut() {
            bucket.clear();
        }
        occ.resize(2 * num_vars, Vec::new());
        trail.clear();
        decisions.clear();

        for i in 0..n_clauses {
            for &lit in clause(i) {
                occ[lit.code()].push(i as u32);
            }
        }

        // Enqueue a literal; false means it contradicts the current values.
        macro_rules! enqueue {
            ($lit:expr) => {{
                let lit: Lit = $lit;
                match values[lit.var()] {
                    None => {
                        values[lit.var()] = Some(lit.is_positive());
                        trail.push(lit);
                        true
                    }
                    Some(v) => v == lit.is_positive(),
                }
            }};
        }

        let mut head = 0usize;
        // Process newly assigned literals; on conflict reports failure.
        macro_rules! propagate {
            () => {{
                let mut conflict = false;
                'outer: while head < trail.len() {
                    let lit = trail[head];
                    head += 1;
                    let watch = (!lit).code();
                    for k in 0..occ[watch].len() {
                        let ci = occ[watch][k] as usize;
                        let cl = clause(ci);
                        let mut unassigned = None;
                        let mut open = 0usize;
                        let mut satisfied = false;
                        for &l in cl {
                            match values[l.var()] {
                                Some(v) if v == l.is_positive() => {
                                    satisfied = true;
                                    break;
                                }
                                Some(_) => {}
                                None => {
                                    open += 1;
                                    if open == 1 {
                                        unassigned = Some(l);
                                    }
                                }
                            }
                        }
                        if satisfied {
                            continue;
                        }
                        match open {
                            0 => {
                                conflict = true;
                                break 'outer;
                            }
                            1 => {
                                let implied = unassigned.expect("open literal tracked");
                                let ok = enqueue!(implied);
                                debug_assert!(ok);
                            }
                            _ => {}
                        }
                    }
                }
                !conflict
            }};
        }

        for i in 0..n_clauses {
            let cl = clause(i);
            if cl.len() == 1 && !enqueue!(cl[0]) {
                return SatResult::Unsat;
            }
        }
        if !propagate!() {
            return SatResult::Unsat;
        }

        let mut search_from = 0usize;
        loop {
            while search_from < num_vars && values[search_from].is_some() {
                search_from += 1;
            }
            if search_from == num_vars {
                let witness: Vec<bool> = values.iter().map(|v| v.unwrap_or(true)).collect();
                return SatResult::Sat(witness);
            }

            let var = search_from;
            decisions.push(Decision {
                var,
                trail_mark: trail.len(),
                flipped: false,
            });
            let ok = enqueue!(Lit::pos(var));
            debug_assert!(ok);

            while !propagate!() {
                let flipped = loop {
                    let Some(d) = decisions.pop() else {
                        return SatResult::Unsat;
                    };
                    while trail.len() > d.trail_mark {
                        let undone = trail.pop().expect("trail non-empty above mark");
                        values[undone.var()] = None;
                    }
                    head = trail.len();
                    if search_from > d.var {
                        search_from = d.var;
                    }
                    if !d.flipped {
                        break d;
                    }
                };
                decisions.push(Decision {
                    flipped: true,
                    ..flipped
                });
                let ok = enqueue!(Lit::neg(flipped.var));
                debug_assert!(ok);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn empty_db_is_sat() {
        let db = ClauseDb::new(0);
        let mut solver = Solver::new();
        let res = solver.solve(&db, &[]);
        assert_eq!(res, SatResult::Sat(vec![]));
    }

    #[test]
    fn unit_conflict_is_unsat() {
        let mut db = ClauseDb::new(1);
        db.add_clause(vec![Lit::pos(0)]);
        db.add_clause(vec![Lit::neg(0)]);
        let mut solver = Solver::new();
        assert_eq!(solver.solve(&db, &[]), SatResult::Unsat);
    }

    #[test]
    fn propagation_chain() {
        // x0, x0 -> x1, x1 -> x2
        let mut db = ClauseDb::new(3);
        db.add_clause(vec![Lit::pos(0)]);
        db.add_clause(vec![Lit::neg(0), Lit::pos(1)]);
        db.add_clause(vec![Lit::neg(1), Lit::pos(2)]);
        let mut solver = Solver::new();
        assert_eq!(solver.solve(&db, &[]), SatResult::Sat(vec![true; 3]));
    }

    #[test]
    fn assumptions_flip_result() {
        let mut db = ClauseDb::new(2);
        db.add_clause(vec![Lit::neg(0), Lit::pos(1)]);
        let mut solver = Solver::new();
        assert!(solver.solve(&db, &[vec![Lit::pos(0)]]).is_sat());
        assert_eq!(
            solver.solve(&db, &[vec![Lit::pos(0)], vec![Lit::neg(1)]]),
            SatResult::Unsat
        );
    }

    #[test]
    fn empty_clause_input_is_trivially_unsat() {
        let mut db = ClauseDb::new(2);
        db.add_clause(vec![]);
        assert!(db.is_trivially_unsat());
        assert_eq!(db.clauses().len(), 0);
        let mut solver = Solver::new();
        assert_eq!(solver.solve(&db, &[]), SatResult::Unsat);

        let db = ClauseDb::new(2);
        assert_eq!(solver.solve(&db, &[vec![]]), SatResult::Unsat);
    }

    #[test]
    fn branching_requires_backtracking() {
        // (x0 | x1) & (!x0 | x1) & (x0 | !x1) forces x0=x1=true after
        // exploring x0=true first by the fixed branching rule.
        let mut db = ClauseDb::new(2);
        db.add_clause(vec![Lit::pos(0), Lit::pos(1)]);
        db.add_clause(vec![Lit::neg(0), Lit::pos(1)]);
        db.add_clause(vec![Lit::pos(0), Lit::neg(1)]);
        let mut solver = Solver::new();
        assert_eq!(solver.solve(&db, &[]), SatResult::Sat(vec![true, true]));
    }

    #[test]
    fn pigeonhole_two_in_one_is_unsat() {
        // Two pigeons, one hole: p0h0, p1h0, not both.
        let mut db = ClauseDb::new(2);
        db.add_clause(vec![Lit::pos(0)]);
        db.add_clause(vec![Lit::pos(1)]);
        db.add_clause(vec![Lit::neg(0), Lit::neg(1)]);
        let mut solver = Solver::new();
        assert_eq!(solver.solve(&db, &[]), SatResult::Unsat);
    }

    #[test]
    fn call_counter_counts_and_resets() {
        let db = ClauseDb::new(1);
        let mut solver = Solver::new();
        solver.solve(&db, &[]);
        solver.solve(&db, &[]);
        solver.solve(&db, &[]);
        assert_eq!(solver.calls(), 3);
        solver.reset_calls();
        assert_eq!(solver.calls(), 0);
    }

    #[test]
    fn witness_is_total_and_deterministic() {
        let mut db = ClauseDb::new(4);
        db.add_clause(vec![Lit::neg(1), Lit::pos(3)]);
        let mut solver = Solver::new();
        let a = solver.solve(&db, &[]);
        let b = solver.solve(&db, &[]);
        assert_eq!(a, b);
        assert_eq!(a.witness().map(<[bool]>::len), Some(4));
    }

    #[test]
    fn lit_encoding_roundtrip() {
        let l = Lit::new(7, false);
        assert_eq!(l.var(), 7);
        assert!(!l.is_positive());
        assert_eq!(!l, Lit::pos(7));
        assert_eq!(!!l, l);
    }
}
