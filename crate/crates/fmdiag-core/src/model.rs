//! Feature-model domain types: the feature tree, cross-tree constraints,
//! test-case formulas, and canonical text serialization.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Hierarchy relationship kinds.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RelationshipKind {
    Mandatory,
    Optional,
    Alternative,
    Or,
}

impl RelationshipKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RelationshipKind::Mandatory => "mandatory",
            RelationshipKind::Optional => "optional",
            RelationshipKind::Alternative => "alternative",
            RelationshipKind::Or => "or",
        }
    }

    pub fn is_group(self) -> bool {
        matches!(self, RelationshipKind::Alternative | RelationshipKind::Or)
    }
}

/// One parent/children edge of the feature tree. Mandatory and optional
/// relationships have exactly one child; groups have at least two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relationship {
    pub kind: RelationshipKind,
    pub parent: String,
    pub children: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CtcKind {
    Requires,
    Excludes,
}

impl CtcKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CtcKind::Requires => "requires",
            CtcKind::Excludes => "excludes",
        }
    }
}

/// A requires/excludes constraint between two features outside the tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossTreeConstraint {
    pub kind: CtcKind,
    pub lhs: String,
    pub rhs: String,
}

/// A feature model: named features arranged in a rooted tree with typed
/// relationships plus cross-tree constraints.
///
/// Relationship order is significant: it fixes the labels of the encoded
/// constraints (`c1`, `c2`, ...) and must be preserved by parsers and
/// generators. All types here are immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureModel {
    pub features: Vec<String>,
    pub root: String,
    pub relationships: Vec<Relationship>,
    pub cross_tree: Vec<CrossTreeConstraint>,
}

/// Structural invariant violation found by [`FeatureModel::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelError {
    EmptyName,
    DuplicateFeature(String),
    UnknownFeature(String),
    RootIsChild(String),
    ChildOfTwoRelationships(String),
    OrphanFeature(String),
    UndersizedGroup(String),
    BadChildCount(String),
    SelfReference(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::EmptyName => write!(f, "empty feature name"),
            ModelError::DuplicateFeature(n) => write!(f, "duplicate feature `{n}`"),
            ModelError::UnknownFeature(n) => write!(f, "unknown feature `{n}`"),
            ModelError::RootIsChild(n) => write!(f, "root feature `{n}` appears as a child"),
            ModelError::ChildOfTwoRelationships(n) => {
                write!(f, "feature `{n}` is a child of two relationships")
            }
            ModelError::OrphanFeature(n) => {
                write!(f, "feature `{n}` is not attached to the tree")
            }
            ModelError::UndersizedGroup(p) => {
                write!(f, "group under `{p}` needs at least two children")
            }
            ModelError::BadChildCount(p) => {
                write!(f, "relationship under `{p}` needs exactly one child")
            }
            ModelError::SelfReference(n) => {
                write!(f, "cross-tree constraint relates `{n}` to itself")
            }
        }
    }
}

impl FeatureModel {
    /// Checks every structural invariant: unique non-empty names, exactly
    /// one root that is never a child, every non-root feature the child of
    /// exactly one relationship, group sizes, and known references.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = BTreeSet::new();
        for name in &self.features {
            if name.is_empty() {
                return Err(ModelError::EmptyName);
            }
            if !seen.insert(name.as_str()) {
                return Err(ModelError::DuplicateFeature(name.clone()));
            }
        }
        if !seen.contains(self.root.as_str()) {
            return Err(ModelError::UnknownFeature(self.root.clone()));
        }

        let mut child_of = BTreeSet::new();
        for rel in &self.relationships {
            if !seen.contains(rel.parent.as_str()) {
                return Err(ModelError::UnknownFeature(rel.parent.clone()));
            }
            match rel.kind {
                RelationshipKind::Mandatory | RelationshipKind::Optional => {
                    if rel.children.len() != 1 {
                        return Err(ModelError::BadChildCount(rel.parent.clone()));
                    }
                }
                RelationshipKind::Alternative | RelationshipKind::Or => {
                    if rel.children.len() < 2 {
                        return Err(ModelError::UndersizedGroup(rel.parent.clone()));
                    }
                }
            }
            for child in &rel.children {
                if !seen.contains(child.as_str()) {
                    return Err(ModelError::UnknownFeature(child.clone()));
                }
                if *child == self.root {
                    return Err(ModelError::RootIsChild(child.clone()));
                }
                if !child_of.insert(child.as_str()) {
                    return Err(ModelError::ChildOfTwoRelationships(child.clone()));
                }
            }
        }
        for name in &self.features {
            if *name != self.root && !child_of.contains(name.as_str()) {
                return Err(ModelError::OrphanFeature(name.clone()));
            }
        }
        for ctc in &self.cross_tree {
            for name in [&ctc.lhs, &ctc.rhs] {
                if !seen.contains(name.as_str()) {
                    return Err(ModelError::UnknownFeature(name.clone()));
                }
            }
            if ctc.lhs == ctc.rhs {
                return Err(ModelError::SelfReference(ctc.lhs.clone()));
            }
        }
        Ok(())
    }

    /// Parent of each non-root feature, by the unique relationship that
    /// declares it a child.
    pub fn parent_map(&self) -> BTreeMap<&str, &str> {
        let mut map = BTreeMap::new();
        for rel in &self.relationships {
            for child in &rel.children {
                map.insert(child.as_str(), rel.parent.as_str());
            }
        }
        map
    }

    /// Canonical model-file text: the root declaration, then relationships
    /// and cross-tree constraints in order. Reparsing the output yields a
    /// structurally equal model.
    pub fn to_fm_string(&self) -> String {
        let mut out = String::new();
        out.push_str("feature ");
        out.push_str(&self.root);
        out.push_str(" root\n");
        for rel in &self.relationships {
            out.push_str(rel.kind.keyword());
            out.push(' ');
            out.push_str(&rel.parent);
            for child in &rel.children {
                out.push(' ');
                out.push_str(child);
            }
            out.push('\n');
        }
        for ctc in &self.cross_tree {
            out.push_str(ctc.kind.keyword());
            out.push(' ');
            out.push_str(&ctc.lhs);
            out.push(' ');
            out.push_str(&ctc.rhs);
            out.push('\n');
        }
        out
    }
}

/// A propositional formula over feature variables. Atoms fix a feature to
/// a value; test cases may use arbitrary connectives, not just literal
/// conjunctions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Atom { feature: String, value: bool },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(feature: &str, value: bool) -> Formula {
        Formula::Atom {
            feature: feature.to_owned(),
            value,
        }
    }

    /// Left-folds a non-empty list of formulas into a conjunction.
    pub fn conjunction(mut parts: Vec<Formula>) -> Option<Formula> {
        let mut acc = if parts.is_empty() {
            return None;
        } else {
            parts.remove(0)
        };
        for part in parts {
            acc = Formula::And(Box::new(acc), Box::new(part));
        }
        Some(acc)
    }

    /// Feature names referenced by the formula, in first-occurrence order.
    pub fn atoms(&self) -> Vec<&str> {
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a str>) {
            match f {
                Formula::Atom { feature, .. } => {
                    if !out.contains(&feature.as_str()) {
                        out.push(feature);
                    }
                }
                Formula::Not(a) => walk(a, out),
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Implies(a, b)
                | Formula::Iff(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Truth value under a total assignment of the referenced features.
    /// Unknown features evaluate as absent and make this return `None`.
    pub fn eval(&self, assignment: &BTreeMap<&str, bool>) -> Option<bool> {
        match self {
            Formula::Atom { feature, value } => {
                assignment.get(feature.as_str()).map(|v| *v == *value)
            }
            Formula::Not(a) => a.eval(assignment).map(|v| !v),
            Formula::And(a, b) => Some(a.eval(assignment)? && b.eval(assignment)?),
            Formula::Or(a, b) => Some(a.eval(assignment)? || b.eval(assignment)?),
            Formula::Implies(a, b) => Some(!a.eval(assignment)? || b.eval(assignment)?),
            Formula::Iff(a, b) => Some(a.eval(assignment)? == b.eval(assignment)?),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => 0,
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(..) => 4,
            Formula::Atom { .. } => 5,
        }
    }
}

/// Prints in the test-suite expression syntax; the output reparses to the
/// same tree. `&` and `|` chains associate left, `->` and `<->` right.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, sub: &Formula, min_prec: u8) -> fmt::Result {
            if sub.precedence() < min_prec {
                write!(f, "(")?;
                fmt::Display::fmt(sub, f)?;
                write!(f, ")")
            } else {
                fmt::Display::fmt(sub, f)
            }
        }
        match self {
            Formula::Atom { feature, value } => {
                write!(f, "{}={}", feature, if *value { "t" } else { "f" })
            }
            Formula::Not(a) => {
                write!(f, "!")?;
                child(f, a, 4)
            }
            Formula::And(a, b) => {
                child(f, a, 3)?;
                write!(f, " & ")?;
                child(f, b, 4)
            }
            Formula::Or(a, b) => {
                child(f, a, 2)?;
                write!(f, " | ")?;
                child(f, b, 3)
            }
            Formula::Implies(a, b) => {
                child(f, a, 2)?;
                write!(f, " -> ")?;
                child(f, b, 1)
            }
            Formula::Iff(a, b) => {
                child(f, a, 1)?;
                write!(f, " <-> ")?;
                child(f, b, 0)
            }
        }
    }
}

/// Whether a test case states intended behavior (at least one configuration
/// must satisfy it) or unintended behavior (no configuration may).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A labeled test case over feature variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub label: String,
    pub formula: Formula,
    pub polarity: Polarity,
}

/// Parsed test-suite contents, positives and negatives in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TestSuite {
    pub positives: Vec<TestCase>,
    pub negatives: Vec<TestCase>,
}

impl TestSuite {
    /// Canonical test-suite file text, one `positive`/`negative` statement
    /// per line. Labels are positional and not serialized.
    pub fn to_tc_string(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        for t in &self.positives {
            let _ = writeln!(out, "positive {}", t.formula);
        }
        for t in &self.negatives {
            let _ = writeln!(out, "negative {}", t.formula);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn tiny_model() -> FeatureModel {
        FeatureModel {
            features: vec!["a".into(), "b".into(), "c".into()],
            root: "a".into(),
            relationships: vec![
                Relationship {
                    kind: RelationshipKind::Mandatory,
                    parent: "a".into(),
                    children: vec!["b".into()],
                },
                Relationship {
                    kind: RelationshipKind::Optional,
                    parent: "a".into(),
                    children: vec!["c".into()],
                },
            ],
            cross_tree: vec![],
        }
    }

    #[test]
    fn valid_model_passes() {
        assert_eq!(tiny_model().validate(), Ok(()));
    }

    #[test]
    fn child_of_two_relationships_rejected() {
        let mut m = tiny_model();
        m.relationships.push(Relationship {
            kind: RelationshipKind::Optional,
            parent: "b".into(),
            children: vec!["c".into()],
        });
        assert_eq!(
            m.validate(),
            Err(ModelError::ChildOfTwoRelationships("c".into()))
        );
    }

    #[test]
    fn root_as_child_rejected() {
        let mut m = tiny_model();
        m.relationships[0].children = vec!["a".into()];
        m.features.retain(|f| f != "b");
        assert_eq!(m.validate(), Err(ModelError::RootIsChild("a".into())));
    }

    #[test]
    fn orphan_feature_rejected() {
        let mut m = tiny_model();
        m.features.push("d".into());
        assert_eq!(m.validate(), Err(ModelError::OrphanFeature("d".into())));
    }

    #[test]
    fn undersized_group_rejected() {
        let mut m = tiny_model();
        m.relationships[0] = Relationship {
            kind: RelationshipKind::Or,
            parent: "a".into(),
            children: vec!["b".into()],
        };
        assert_eq!(m.validate(), Err(ModelError::UndersizedGroup("a".into())));
    }

    #[test]
    fn self_referential_ctc_rejected() {
        let mut m = tiny_model();
        m.cross_tree.push(CrossTreeConstraint {
            kind: CtcKind::Requires,
            lhs: "b".into(),
            rhs: "b".into(),
        });
        assert_eq!(m.validate(), Err(ModelError::SelfReference("b".into())));
    }

    #[test]
    fn formula_display_parenthesizes_by_precedence() {
        let f = Formula::Implies(
            Box::new(Formula::And(
                Box::new(Formula::atom("a", true)),
                Box::new(Formula::atom("b", true)),
            )),
            Box::new(Formula::atom("c", false)),
        );
        assert_eq!(f.to_string(), "a=t & b=t -> c=f");

        let g = Formula::And(
            Box::new(Formula::Or(
                Box::new(Formula::atom("a", true)),
                Box::new(Formula::atom("b", true)),
            )),
            Box::new(Formula::Not(Box::new(Formula::atom("c", true)))),
        );
        assert_eq!(g.to_string(), "(a=t | b=t) & !c=t");
    }

    #[test]
    fn formula_eval_matches_connectives() {
        let f = Formula::Iff(
            Box::new(Formula::atom("a", true)),
            Box::new(Formula::atom("b", false)),
        );
        let mut assign = BTreeMap::new();
        assign.insert("a", true);
        assign.insert("b", false);
        assert_eq!(f.eval(&assign), Some(true));
        assign.insert("b", true);
        assert_eq!(f.eval(&assign), Some(false));
    }
}
