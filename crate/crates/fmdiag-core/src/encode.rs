//! Compilation of a feature model into a labeled CNF constraint set, and
//! of test-case formulas into clauses.
//!
//! Clause forms per relationship kind (parent `a`, children `b`/`f1..fk`):
//!
//! - mandatory: `(!a | b)`, `(!b | a)`
//! - optional: `(!b | a)`
//! - alternative: `(!fi | a)` for each i, `(!fi | !fj)` for each i<j,
//!   `(!a | f1 | .. | fk)`
//! - or: `(!fi | a)` for each i, `(!a | f1 | .. | fk)`
//! - requires: `(!a | b)`
//! - excludes: `(!a | !b)`
//!
//! Each form is verified equivalent to the corresponding logic formula by
//! exhaustive truth tables in the test suite.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::model::{CtcKind, FeatureModel, Formula, RelationshipKind};
use crate::sat::{Clause, Lit};

/// Bidirectional feature name <-> variable index table. Indices follow the
/// model's feature order; auxiliary variables created by formula encoding
/// live past [`VarTable::feature_count`] and have no name.
#[derive(Clone, Debug)]
pub struct VarTable {
    names: Vec<String>,
    by_name: BTreeMap<String, usize>,
}

impl VarTable {
    pub fn from_model(model: &FeatureModel) -> VarTable {
        let names: Vec<String> = model.features.clone();
        let by_name = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        VarTable { names, by_name }
    }

    pub fn feature_count(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn name_of(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }
}

/// What a labeled constraint encodes.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// The root constraint `c0`.
    Root,
    /// Index into [`FeatureModel::relationships`].
    Relationship(usize),
    /// Index into [`FeatureModel::cross_tree`].
    CrossTree(usize),
}

/// One model constraint: a stable label, its CNF clauses, where it came
/// from, and a human-readable rendering of its logic formula.
#[derive(Clone, Debug)]
pub struct LabeledConstraint {
    pub label: String,
    pub clauses: Vec<Clause>,
    pub provenance: Provenance,
    pub display: String,
}

/// The ordered, labeled constraint set of a model: `c0` (root) followed by
/// one constraint per relationship and cross-tree constraint in model
/// order.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    constraints: Vec<LabeledConstraint>,
    vars: VarTable,
}

impl ConstraintSet {
    pub fn constraints(&self) -> &[LabeledConstraint] {
        &self.constraints
    }

    pub fn vars(&self) -> &VarTable {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&LabeledConstraint> {
        self.constraints.iter().find(|c| c.label == label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.constraints.iter().map(|c| c.label.as_str())
    }

    /// All clauses of all constraints, in label order.
    pub fn all_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.constraints.iter().flat_map(|c| c.clauses.iter())
    }

    /// A copy with the named constraints removed; the remaining constraints
    /// keep their labels. Used to apply a diagnosis to the model.
    pub fn without_labels(&self, labels: &[&str]) -> ConstraintSet {
        ConstraintSet {
            constraints: self
                .constraints
                .iter()
                .filter(|c| !labels.contains(&c.label.as_str()))
                .cloned()
                .collect(),
            vars: self.vars.clone(),
        }
    }

    /// Text dump with DIMACS-style header and clause lines, plus one
    /// comment line per constraint mapping it to its 1-based clause range:
    /// `c label <ci> clauses <j..k> :: <display>`.
    pub fn to_dimacs_like(&self) -> String {
        let total: usize = self.constraints.iter().map(|c| c.clauses.len()).sum();
        let mut out = String::new();
        let _ = writeln!(out, "p cnf {} {}", self.vars.feature_count(), total);
        let mut next = 1usize;
        for c in &self.constraints {
            let last = next + c.clauses.len() - 1;
            let _ = writeln!(
                out,
                "c label {} clauses {}..{} :: {}",
                c.label, next, last, c.display
            );
            for clause in &c.clauses {
                for &lit in clause {
                    let v = lit.var() as i64 + 1;
                    let _ = write!(out, "{} ", if lit.is_positive() { v } else { -v });
                }
                out.push_str("0\n");
            }
            next = last + 1;
        }
        out
    }
}

/// Formula-to-CNF failure: an atom that names no known feature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownAtom(pub String);

impl fmt::Display for UnknownAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown feature `{}` in formula", self.0)
    }
}

/// Compiles a feature model into its labeled constraint set. The input
/// must satisfy the [`FeatureModel`] invariants.
pub fn encode(model: &FeatureModel) -> ConstraintSet {
    debug_assert_eq!(model.validate(), Ok(()));
    let vars = VarTable::from_model(model);
    let idx = |name: &str| vars.index_of(name).expect("validated feature name");

    let mut constraints =
        Vec::with_capacity(1 + model.relationships.len() + model.cross_tree.len());
    constraints.push(LabeledConstraint {
        label: "c0".into(),
        clauses: alloc::vec![alloc::vec![Lit::pos(idx(&model.root))]],
        provenance: Provenance::Root,
        display: format!("{} = t", model.root),
    });

    let mut label = 1usize;
    for (ri, rel) in model.relationships.iter().enumerate() {
        let a = idx(&rel.parent);
        let children: Vec<usize> = rel.children.iter().map(|c| idx(c)).collect();
        let mut clauses: Vec<Clause> = Vec::new();
        let display = match rel.kind {
            RelationshipKind::Mandatory => {
                let b = children[0];
                clauses.push(alloc::vec![Lit::neg(a), Lit::pos(b)]);
                clauses.push(alloc::vec![Lit::neg(b), Lit::pos(a)]);
                format!("{} \u{2194} {}", rel.parent, rel.children[0])
            }
            RelationshipKind::Optional => {
                let b = children[0];
                clauses.push(alloc::vec![Lit::neg(b), Lit::pos(a)]);
                format!("{} \u{2192} {}", rel.children[0], rel.parent)
            }
            RelationshipKind::Alternative => {
                for &c in &children {
                    clauses.push(alloc::vec![Lit::neg(c), Lit::pos(a)]);
                }
                for i in 0..children.len() {
                    for j in i + 1..children.len() {
                        clauses.push(alloc::vec![Lit::neg(children[i]), Lit::neg(children[j])]);
                    }
                }
                let mut big: Clause = alloc::vec![Lit::neg(a)];
                big.extend(children.iter().map(|&c| Lit::pos(c)));
                clauses.push(big);
                alternative_display(&rel.parent, &rel.children)
            }
            RelationshipKind::Or => {
                for &c in &children {
                    clauses.push(alloc::vec![Lit::neg(c), Lit::pos(a)]);
                }
                let mut big: Clause = alloc::vec![Lit::neg(a)];
                big.extend(children.iter().map(|&c| Lit::pos(c)));
                clauses.push(big);
                let body = rel.children.join(" \u{2228} ");
                format!("{} \u{2194} {}", rel.parent, body)
            }
        };
        constraints.push(LabeledConstraint {
            label: format!("c{label}"),
            clauses,
            provenance: Provenance::Relationship(ri),
            display,
        });
        label += 1;
    }

    for (ci, ctc) in model.cross_tree.iter().enumerate() {
        let a = idx(&ctc.lhs);
        let b = idx(&ctc.rhs);
        let (clauses, display) = match ctc.kind {
            CtcKind::Requires => (
                alloc::vec![alloc::vec![Lit::neg(a), Lit::pos(b)]],
                format!("{} \u{2192} {}", ctc.lhs, ctc.rhs),
            ),
            CtcKind::Excludes => (
                alloc::vec![alloc::vec![Lit::neg(a), Lit::neg(b)]],
                format!("\u{00ac}({} \u{2227} {})", ctc.lhs, ctc.rhs),
            ),
        };
        constraints.push(LabeledConstraint {
            label: format!("c{label}"),
            clauses,
            provenance: Provenance::CrossTree(ci),
            display,
        });
        label += 1;
    }

    ConstraintSet { constraints, vars }
}

/// Per-child equivalence rendering of an alternative group, matching the
/// logic formula the clauses implement.
fn alternative_display(parent: &str, children: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, child) in children.iter().enumerate() {
        let mut body: Vec<String> = children
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, other)| format!("\u{00ac}{other}"))
            .collect();
        body.push(parent.into());
        parts.push(format!("({} \u{2194} {})", child, body.join(" \u{2227} ")));
    }
    parts.join(" \u{2227} ")
}

/// Allocates auxiliary variables past the feature block.
#[derive(Clone, Debug)]
pub struct AuxAllocator {
    next: usize,
}

impl AuxAllocator {
    pub fn new(vars: &VarTable) -> AuxAllocator {
        AuxAllocator {
            next: vars.feature_count(),
        }
    }

    /// Total variable count consumed so far, features included.
    pub fn num_vars(&self) -> usize {
        self.next
    }

    fn fresh(&mut self) -> usize {
        let v = self.next;
        self.next += 1;
        v
    }
}

/// Compiles a formula to equisatisfiable CNF over the given variable
/// table.
///
/// A conjunction of literals becomes exactly its unit clauses with no
/// auxiliary variables. Anything else goes through a structural (Tseitin)
/// transformation; fresh gate variables are drawn from `aux`, after all
/// feature variables. For every assignment of the feature variables the
/// gate values are uniquely determined, so satisfiability projected onto
/// the features matches the formula exactly.
pub fn encode_formula(
    formula: &Formula,
    vars: &VarTable,
    aux: &mut AuxAllocator,
) -> Result<Vec<Clause>, UnknownAtom> {
    if let Some(units) = literal_conjunction(formula, vars)? {
        return Ok(units.into_iter().map(|l| alloc::vec![l]).collect());
    }
    let mut clauses = Vec::new();
    let root = tseitin(formula, vars, aux, &mut clauses)?;
    clauses.push(alloc::vec![root]);
    Ok(clauses)
}

/// The literals of a pure conjunction (atoms and negated atoms joined by
/// AND), or `None` if the formula has any other structure.
fn literal_conjunction(
    formula: &Formula,
    vars: &VarTable,
) -> Result<Option<Vec<Lit>>, UnknownAtom> {
    fn walk(f: &Formula, vars: &VarTable, out: &mut Vec<Lit>) -> Result<bool, UnknownAtom> {
        match f {
            Formula::Atom { feature, value } => {
                let v = vars
                    .index_of(feature)
                    .ok_or_else(|| UnknownAtom(feature.clone()))?;
                out.push(Lit::new(v, *value));
                Ok(true)
            }
            Formula::Not(inner) => match &**inner {
                Formula::Atom { feature, value } => {
                    let v = vars
                        .index_of(feature)
                        .ok_or_else(|| UnknownAtom(feature.clone()))?;
                    out.push(Lit::new(v, !*value));
                    Ok(true)
                }
                _ => Ok(false),
            },
            Formula::And(a, b) => Ok(walk(a, vars, out)? && walk(b, vars, out)?),
            _ => Ok(false),
        }
    }
    let mut lits = Vec::new();
    if walk(formula, vars, &mut lits)? {
        Ok(Some(lits))
    } else {
        // Surface unknown atoms even when the shape check fails early.
        for name in formula.atoms() {
            if vars.index_of(name).is_none() {
                return Err(UnknownAtom(name.into()));
            }
        }
        Ok(None)
    }
}

/// Returns a literal equivalent to the subformula, emitting gate-defining
/// clauses along the way.
fn tseitin(
    formula: &Formula,
    vars: &VarTable,
    aux: &mut AuxAllocator,
    clauses: &mut Vec<Clause>,
) -> Result<Lit, UnknownAtom> {
    Ok(match formula {
        Formula::Atom { feature, value } => {
            let v = vars
                .index_of(feature)
                .ok_or_else(|| UnknownAtom(feature.clone()))?;
            Lit::new(v, *value)
        }
        Formula::Not(inner) => !tseitin(inner, vars, aux, clauses)?,
        Formula::And(lhs, rhs) => {
            let a = tseitin(lhs, vars, aux, clauses)?;
            let b = tseitin(rhs, vars, aux, clauses)?;
            let g = Lit::pos(aux.fresh());
            clauses.push(alloc::vec![!g, a]);
            clauses.push(alloc::vec![!g, b]);
            clauses.push(alloc::vec![g, !a, !b]);
            g
        }
        Formula::Or(lhs, rhs) => {
            let a = tseitin(lhs, vars, aux, clauses)?;
            let b = tseitin(rhs, vars, aux, clauses)?;
            let g = Lit::pos(aux.fresh());
            clauses.push(alloc::vec![!g, a, b]);
            clauses.push(alloc::vec![g, !a]);
            clauses.push(alloc::vec![g, !b]);
            g
        }
        Formula::Implies(lhs, rhs) => {
            let a = tseitin(lhs, vars, aux, clauses)?;
            let b = tseitin(rhs, vars, aux, clauses)?;
            let g = Lit::pos(aux.fresh());
            clauses.push(alloc::vec![!g, !a, b]);
            clauses.push(alloc::vec![g, a]);
            clauses.push(alloc::vec![g, !b]);
            g
        }
        Formula::Iff(lhs, rhs) => {
            let a = tseitin(lhs, vars, aux, clauses)?;
            let b = tseitin(rhs, vars, aux, clauses)?;
            let g = Lit::pos(aux.fresh());
            clauses.push(alloc::vec![!g, !a, b]);
            clauses.push(alloc::vec![!g, a, !b]);
            clauses.push(alloc::vec![g, !a, !b]);
            clauses.push(alloc::vec![g, a, b]);
            g
        }
    })
}
