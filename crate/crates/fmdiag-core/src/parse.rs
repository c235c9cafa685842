//! Line-oriented parsers for the model file format (`.fm`) and the
//! test-suite format (`.tc`).
//!
//! Both are total: any input yields either a value or a diagnostic error
//! with a 1-based line/column position, never a panic. `#` starts a
//! comment, blank lines are ignored.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{
    CrossTreeConstraint, CtcKind, FeatureModel, Formula, Polarity, Relationship, RelationshipKind,
    TestCase, TestSuite,
};

/// Nesting bound for test-case expressions; keeps recursive descent safe
/// on adversarial input.
const MAX_EXPR_DEPTH: usize = 200;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownFeature(String),
    DuplicateFeature(String),
    MultipleRoots,
    MissingRoot,
    NonTreeChild(String),
    UndersizedGroup,
}

/// A diagnostic with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line, column, kind }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, col {}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "{msg}"),
            ParseErrorKind::UnknownFeature(n) => write!(f, "unknown feature `{n}`"),
            ParseErrorKind::DuplicateFeature(n) => write!(f, "duplicate feature `{n}`"),
            ParseErrorKind::MultipleRoots => write!(f, "root feature declared twice"),
            ParseErrorKind::MissingRoot => write!(f, "no root feature declared"),
            ParseErrorKind::NonTreeChild(n) => {
                write!(f, "feature `{n}` is already part of the tree")
            }
            ParseErrorKind::UndersizedGroup => {
                write!(f, "group needs at least two children")
            }
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '&'
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_continue)
}

/// (1-based column, token) pairs of one line, split on ASCII whitespace.
fn tokenize_line(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (column, byte offset)
    let mut col = 0usize;
    let mut prev_end = 0usize;
    for (off, c) in line.char_indices() {
        col += 1;
        if c.is_whitespace() {
            if let Some((tc, to)) = start.take() {
                out.push((tc, &line[to..off]));
            }
        } else if start.is_none() {
            start = Some((col, off));
        }
        prev_end = off + c.len_utf8();
    }
    if let Some((tc, to)) = start {
        out.push((tc, &line[to..prev_end]));
    }
    out
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses the model file format. Relationship order is preserved from file
/// order; it determines the constraint labels downstream.
pub fn parse_model(text: &str) -> Result<FeatureModel, ParseError> {
    let mut features: Vec<String> = Vec::new();
    let mut known: BTreeSet<String> = BTreeSet::new();
    let mut root: Option<String> = None;
    let mut relationships = Vec::new();
    let mut cross_tree = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let tokens = tokenize_line(strip_comment(raw));
        let Some(&(_, keyword)) = tokens.first() else {
            continue;
        };
        let args = &tokens[1..];

        let syntax = |col: usize, msg: String| {
            Err(ParseError::new(lineno, col, ParseErrorKind::Syntax(msg)))
        };
        let ident_at = |i: usize| -> Result<&str, ParseError> {
            match args.get(i) {
                Some(&(col, tok)) if valid_ident(tok) => {
                    let _ = col;
                    Ok(tok)
                }
                Some(&(col, tok)) => Err(ParseError::new(
                    lineno,
                    col,
                    ParseErrorKind::Syntax(format!("invalid feature name `{tok}`")),
                )),
                None => Err(ParseError::new(
                    lineno,
                    raw.chars().count() + 1,
                    ParseErrorKind::Syntax("missing feature name".to_owned()),
                )),
            }
        };
        let expect_end = |n: usize| -> Result<(), ParseError> {
            match args.get(n) {
                Some(&(col, tok)) => Err(ParseError::new(
                    lineno,
                    col,
                    ParseErrorKind::Syntax(format!("unexpected token `{tok}`")),
                )),
                None => Ok(()),
            }
        };

        match keyword {
            "feature" => {
                let name = ident_at(0)?;
                match args.get(1) {
                    Some(&(_, "root")) => {}
                    Some(&(col, tok)) => {
                        return syntax(col, format!("expected `root`, found `{tok}`"))
                    }
                    None => {
                        return syntax(
                            raw.chars().count() + 1,
                            "expected `root` after feature name".to_owned(),
                        )
                    }
                }
                expect_end(2)?;
                if root.is_some() {
                    return Err(ParseError::new(
                        lineno,
                        tokens[0].0,
                        ParseErrorKind::MultipleRoots,
                    ));
                }
                if !known.insert(name.to_owned()) {
                    return Err(ParseError::new(
                        lineno,
                        args[0].0,
                        ParseErrorKind::DuplicateFeature(name.to_owned()),
                    ));
                }
                features.push(name.to_owned());
                root = Some(name.to_owned());
            }
            "mandatory" | "optional" => {
                let kind = if keyword == "mandatory" {
                    RelationshipKind::Mandatory
                } else {
                    RelationshipKind::Optional
                };
                let parent = ident_at(0)?;
                let child = ident_at(1)?;
                expect_end(2)?;
                if !known.contains(parent) {
                    return Err(ParseError::new(
                        lineno,
                        args[0].0,
                        ParseErrorKind::UnknownFeature(parent.to_owned()),
                    ));
                }
                if known.contains(child) {
                    return Err(ParseError::new(
                        lineno,
                        args[1].0,
                        ParseErrorKind::NonTreeChild(child.to_owned()),
                    ));
                }
                known.insert(child.to_owned());
                features.push(child.to_owned());
                relationships.push(Relationship {
                    kind,
                    parent: parent.to_owned(),
                    children: alloc::vec![child.to_owned()],
                });
            }
            "alternative" | "or" => {
                let kind = if keyword == "alternative" {
                    RelationshipKind::Alternative
                } else {
                    RelationshipKind::Or
                };
                let parent = ident_at(0)?;
                if !known.contains(parent) {
                    return Err(ParseError::new(
                        lineno,
                        args[0].0,
                        ParseErrorKind::UnknownFeature(parent.to_owned()),
                    ));
                }
                if args.len() < 3 {
                    return Err(ParseError::new(
                        lineno,
                        tokens[0].0,
                        ParseErrorKind::UndersizedGroup,
                    ));
                }
                let mut children = Vec::new();
                for (i, &(col, _)) in args.iter().enumerate().skip(1) {
                    let child = ident_at(i)?;
                    if children.iter().any(|c| c == child) {
                        return Err(ParseError::new(
                            lineno,
                            col,
                            ParseErrorKind::DuplicateFeature(child.to_owned()),
                        ));
                    }
                    if known.contains(child) {
                        return Err(ParseError::new(
                            lineno,
                            col,
                            ParseErrorKind::NonTreeChild(child.to_owned()),
                        ));
                    }
                    children.push(child.to_owned());
                }
                for child in &children {
                    known.insert(child.clone());
                    features.push(child.clone());
                }
                relationships.push(Relationship {
                    kind,
                    parent: parent.to_owned(),
                    children,
                });
            }
            "requires" | "excludes" => {
                let kind = if keyword == "requires" {
                    CtcKind::Requires
                } else {
                    CtcKind::Excludes
                };
                let lhs = ident_at(0)?;
                let rhs = ident_at(1)?;
                expect_end(2)?;
                for (i, name) in [(0, lhs), (1, rhs)] {
                    if !known.contains(name) {
                        return Err(ParseError::new(
                            lineno,
                            args[i].0,
                            ParseErrorKind::UnknownFeature(name.to_owned()),
                        ));
                    }
                }
                if lhs == rhs {
                    return Err(ParseError::new(
                        lineno,
                        args[1].0,
                        ParseErrorKind::DuplicateFeature(rhs.to_owned()),
                    ));
                }
                cross_tree.push(CrossTreeConstraint {
                    kind,
                    lhs: lhs.to_owned(),
                    rhs: rhs.to_owned(),
                });
            }
            _ => {
                return syntax(tokens[0].0, format!("unknown statement `{keyword}`"));
            }
        }
    }

    let Some(root) = root else {
        return Err(ParseError::new(
            text.lines().count().max(1),
            1,
            ParseErrorKind::MissingRoot,
        ));
    };
    let model = FeatureModel {
        features,
        root,
        relationships,
        cross_tree,
    };
    debug_assert_eq!(model.validate(), Ok(()));
    Ok(model)
}

/// Parses the test-suite format. Positive test cases are labeled `t1..tq`
/// in file order; negatives continue the numbering with `t(q+1)..`.
/// When a model is supplied, every atom must name a declared feature.
pub fn parse_test_suite(text: &str, model: Option<&FeatureModel>) -> Result<TestSuite, ParseError> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = strip_comment(raw);
        let tokens = tokenize_line(line);
        let Some(&(kw_col, keyword)) = tokens.first() else {
            continue;
        };
        let polarity = match keyword {
            "positive" => Polarity::Positive,
            "negative" => Polarity::Negative,
            other => {
                return Err(ParseError::new(
                    lineno,
                    kw_col,
                    ParseErrorKind::Syntax(format!(
                        "expected `positive` or `negative`, found `{other}`"
                    )),
                ));
            }
        };
        // Expression text starts after the keyword; columns stay line-relative.
        let kw_off = line
            .char_indices()
            .nth(kw_col - 1)
            .map(|(o, _)| o)
            .unwrap_or(0);
        let expr_off = kw_off + keyword.len();
        let formula = parse_expression_at(&line[expr_off..], lineno, kw_col + keyword.len())?;
        if let Some(model) = model {
            for atom in formula.atoms() {
                if !model.features.iter().any(|f| f == atom) {
                    return Err(ParseError::new(
                        lineno,
                        kw_col,
                        ParseErrorKind::UnknownFeature(atom.to_owned()),
                    ));
                }
            }
        }
        match polarity {
            Polarity::Positive => positives.push(formula),
            Polarity::Negative => negatives.push(formula),
        }
    }

    let q = positives.len();
    let make = |formulas: Vec<Formula>, polarity, base: usize| {
        formulas
            .into_iter()
            .enumerate()
            .map(|(i, formula)| TestCase {
                label: format!("t{}", base + i + 1),
                formula,
                polarity,
            })
            .collect()
    };
    Ok(TestSuite {
        positives: make(positives, Polarity::Positive, 0),
        negatives: make(negatives, Polarity::Negative, q),
    })
}

/// Parses a standalone test-case expression.
pub fn parse_expression(text: &str) -> Result<Formula, ParseError> {
    parse_expression_at(text, 1, 0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Eq,
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

impl Token {
    fn describe(&self) -> &str {
        match self {
            Token::Ident(_) => "identifier",
            Token::Eq => "`=`",
            Token::Not => "`!`",
            Token::And => "`&`",
            Token::Or => "`|`",
            Token::Implies => "`->`",
            Token::Iff => "`<->`",
            Token::LParen => "`(`",
            Token::RParen => "`)`",
        }
    }
}

struct ExprParser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

fn lex_expression(
    text: &str,
    line: usize,
    col_offset: usize,
) -> Result<Vec<(usize, Token)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut col = col_offset;
    while let Some((off, c)) = chars.next() {
        col += 1;
        match c {
            c if c.is_whitespace() => {}
            '(' => out.push((col, Token::LParen)),
            ')' => out.push((col, Token::RParen)),
            '!' => out.push((col, Token::Not)),
            '&' => out.push((col, Token::And)),
            '|' => out.push((col, Token::Or)),
            '=' => out.push((col, Token::Eq)),
            '-' => match chars.next() {
                Some((_, '>')) => {
                    out.push((col, Token::Implies));
                    col += 1;
                }
                _ => {
                    return Err(ParseError::new(
                        line,
                        col,
                        ParseErrorKind::Syntax("expected `->`".to_owned()),
                    ))
                }
            },
            '<' => {
                let ok = matches!(chars.next(), Some((_, '-')))
                    && matches!(chars.next(), Some((_, '>')));
                if !ok {
                    return Err(ParseError::new(
                        line,
                        col,
                        ParseErrorKind::Syntax("expected `<->`".to_owned()),
                    ));
                }
                out.push((col, Token::Iff));
                col += 2;
            }
            c if is_ident_start(c) => {
                let start = off;
                let mut end = off + c.len_utf8();
                while let Some(&(o, nc)) = chars.peek() {
                    if is_ident_continue(nc) {
                        end = o + nc.len_utf8();
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let tok_col = col - text[start..end].chars().count() + 1;
                out.push((tok_col, Token::Ident(text[start..end].to_owned())));
            }
            other => {
                return Err(ParseError::new(
                    line,
                    col,
                    ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                ));
            }
        }
    }
    Ok(out)
}

fn parse_expression_at(text: &str, line: usize, col_offset: usize) -> Result<Formula, ParseError> {
    let tokens = lex_expression(text, line, col_offset)?;
    let end_col = col_offset + text.chars().count() + 1;
    let mut parser = ExprParser {
        tokens,
        pos: 0,
        line,
        end_col,
    };
    let formula = parser.iff(0)?;
    if let Some((col, tok)) = parser.peek() {
        return Err(ParseError::new(
            parser.line,
            col,
            ParseErrorKind::Syntax(format!("unexpected {}", tok.describe())),
        ));
    }
    Ok(formula)
}

impl ExprParser {
    fn peek(&self) -> Option<(usize, &Token)> {
        self.tokens.get(self.pos).map(|(c, t)| (*c, t))
    }

    fn bump(&mut self) -> Option<(usize, Token)> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn err_here(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some((col, tok)) => ParseError::new(
                self.line,
                col,
                ParseErrorKind::Syntax(format!("expected {expected}, found {}", tok.describe())),
            ),
            None => ParseError::new(
                self.line,
                self.end_col,
                ParseErrorKind::Syntax(format!("expected {expected}, found end of line")),
            ),
        }
    }

    fn iff(&mut self, depth: usize) -> Result<Formula, ParseError> {
        let lhs = self.implies(depth)?;
        if matches!(self.peek(), Some((_, Token::Iff))) {
            self.bump();
            let rhs = self.iff(self.guard(depth)?)?;
            return Ok(Formula::Iff(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn implies(&mut self, depth: usize) -> Result<Formula, ParseError> {
        let lhs = self.or(depth)?;
        if matches!(self.peek(), Some((_, Token::Implies))) {
            self.bump();
            let rhs = self.implies(self.guard(depth)?)?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self, depth: usize) -> Result<Formula, ParseError> {
        let mut lhs = self.and(depth)?;
        while matches!(self.peek(), Some((_, Token::Or))) {
            self.bump();
            let rhs = self.and(depth)?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self, depth: usize) -> Result<Formula, ParseError> {
        let mut lhs = self.unary(depth)?;
        while matches!(self.peek(), Some((_, Token::And))) {
            self.bump();
            let rhs = self.unary(depth)?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self, depth: usize) -> Result<Formula, ParseError> {
        match self.peek() {
            Some((_, Token::Not)) => {
                self.bump();
                let inner = self.unary(self.guard(depth)?)?;
                Ok(Formula::Not(Box::new(inner)))
            }
            Some((_, Token::LParen)) => {
                self.bump();
                let inner = self.iff(self.guard(depth)?)?;
                match self.peek() {
                    Some((_, Token::RParen)) => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => Err(self.err_here("`)`")),
                }
            }
            Some((_, Token::Ident(_))) => {
                let Some((_, Token::Ident(name))) = self.bump() else {
                    unreachable!()
                };
                let mut value = true;
                if matches!(self.peek(), Some((_, Token::Eq))) {
                    self.bump();
                    match self.bump() {
                        Some((_, Token::Ident(v))) if v == "t" => value = true,
                        Some((_, Token::Ident(v))) if v == "f" => value = false,
                        Some((col, tok)) => {
                            return Err(ParseError::new(
                                self.line,
                                col,
                                ParseErrorKind::Syntax(format!(
                                    "expected `t` or `f` after `=`, found {}",
                                    tok.describe()
                                )),
                            ));
                        }
                        None => {
                            return Err(ParseError::new(
                                self.line,
                                self.end_col,
                                ParseErrorKind::Syntax("expected `t` or `f` after `=`".to_owned()),
                            ));
                        }
                    }
                }
                Ok(Formula::Atom {
                    feature: name,
                    value,
                })
            }
            _ => Err(self.err_here("an atom, `!`, or `(`")),
        }
    }

    fn guard(&self, depth: usize) -> Result<usize, ParseError> {
        if depth + 1 > MAX_EXPR_DEPTH {
            let col = self.peek().map(|(c, _)| c).unwrap_or(self.end_col);
            return Err(ParseError::new(
                self.line,
                col,
                ParseErrorKind::Syntax("expression too deeply nested".to_owned()),
            ));
        }
        Ok(depth + 1)
    }
}
