//! Well-formedness analysis of an encoded model and test-case generation
//! from analysis operations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::encode::ConstraintSet;
use crate::model::{FeatureModel, Formula, Polarity, RelationshipKind, TestCase};
use crate::sat::{ClauseDb, Lit, Solver};

/// Analysis outcome. On a void model the feature lists are empty; the
/// per-feature checks are meaningless when no configuration exists at all.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnalysisReport {
    pub void: bool,
    pub dead_features: Vec<String>,
    pub false_optionals: Vec<String>,
}

/// Analysis operations that can seed generated test cases.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TestKind {
    DeadFeature,
}

/// Runs the well-formedness checks on `cs = encode(model)`:
///
/// - void: the whole constraint set (root constraint included) is
///   unsatisfiable;
/// - dead feature `f`: the constraint set forbids `f = true`;
/// - false optional `f`: `f` is declared optional or as a group child,
///   is not dead, and still cannot be false while its parent is selected.
///
/// On a non-void model this issues exactly `1 + |features| + |candidates|`
/// solver calls, where candidates are the non-mandatory-declared features.
pub fn analyze(cs: &ConstraintSet, model: &FeatureModel) -> AnalysisReport {
    analyze_with_solver(&mut Solver::new(), cs, model)
}

/// [`analyze`] with a caller-supplied solver, so call counts can be
/// observed.
pub fn analyze_with_solver(
    solver: &mut Solver,
    cs: &ConstraintSet,
    model: &FeatureModel,
) -> AnalysisReport {
    let db = ClauseDb::new(cs.vars().feature_count());
    let clauses: Vec<&[Lit]> = cs.all_clauses().map(|c| c.as_slice()).collect();
    let check = |solver: &mut Solver, extra: &[Lit]| -> bool {
        let mut refs = clauses.clone();
        let unit_storage: Vec<[Lit; 1]> = extra.iter().map(|&l| [l]).collect();
        for unit in &unit_storage {
            refs.push(unit);
        }
        solver.solve_refs(&db, &refs).is_sat()
    };

    if !check(solver, &[]) {
        return AnalysisReport {
            void: true,
            dead_features: Vec::new(),
            false_optionals: Vec::new(),
        };
    }

    let index = |name: &str| cs.vars().index_of(name).expect("feature in table");
    let mut dead_features = Vec::new();
    for name in &model.features {
        if !check(solver, &[Lit::pos(index(name))]) {
            dead_features.push(name.clone());
        }
    }

    let parents = model.parent_map();
    let mut false_optionals = Vec::new();
    for rel in &model.relationships {
        if rel.kind == RelationshipKind::Mandatory {
            continue;
        }
        for child in &rel.children {
            let parent = parents[child.as_str()];
            let forced = !check(solver, &[Lit::pos(index(parent)), Lit::neg(index(child))]);
            if forced && !dead_features.contains(child) {
                false_optionals.push(child.clone());
            }
        }
    }

    AnalysisReport {
        void: false,
        dead_features,
        false_optionals,
    }
}

/// Generates positive test cases from analysis operations. For
/// [`TestKind::DeadFeature`]: one `f=t` test per non-root feature, labeled
/// `gen_dead_<f>`, in model feature order.
pub fn generate_tests(model: &FeatureModel, kinds: &[TestKind]) -> Vec<TestCase> {
    let mut out = Vec::new();
    if kinds.contains(&TestKind::DeadFeature) {
        for name in &model.features {
            if *name == model.root {
                continue;
            }
            out.push(TestCase {
                label: format!("gen_dead_{name}"),
                formula: Formula::atom(name, true),
                polarity: Polarity::Positive,
            });
        }
    }
    out
}
