//! Terms over the signature `{1, ->}` with variables and proof-local constants.
//!
//! Concrete syntax:
//!
//! ```text
//! term  := atom | atom "->" term
//! atom  := ident | "1" | "(" term ")"
//! ident := [a-zA-Z_][a-zA-Z0-9_]*
//! ```
//!
//! The arrow associates to the right, so `x -> y -> z` is `x -> (y -> z)`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    /// The designated element `1`.
    Unit,
    /// A proof-local constant, fixed for the duration of one script.
    Const(String),
    Arrow(Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("reserved name `{name}` at byte {offset}: names may not start with a digit")]
    ReservedName { offset: usize, name: String },
    #[error("invalid position: selector {index} does not descend into an arrow")]
    InvalidPosition { index: usize },
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn arrow(left: Term, right: Term) -> Term {
        Term::Arrow(Box::new(left), Box::new(right))
    }

    /// True when the term contains no variables (constants are allowed).
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Unit | Term::Const(_) => true,
            Term::Arrow(l, r) => l.is_ground() && r.is_ground(),
        }
    }

    /// Variables in order of first occurrence, left to right.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names(&mut out, true);
        out
    }

    /// Constants in order of first occurrence, left to right.
    pub fn constants(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names(&mut out, false);
        out
    }

    pub(crate) fn collect_names(&self, out: &mut Vec<String>, vars: bool) {
        match self {
            Term::Var(v) if vars => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(c) if !vars => {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
            Term::Arrow(l, r) => {
                l.collect_names(out, vars);
                r.collect_names(out, vars);
            }
            _ => {}
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Term::Arrow(l, r) => 1 + l.size() + r.size(),
            _ => 1,
        }
    }

    /// All valid positions, in pre-order.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        fn walk(t: &Term, path: &mut Vec<Side>, out: &mut Vec<Position>) {
            out.push(Position(path.clone()));
            if let Term::Arrow(l, r) = t {
                path.push(Side::L);
                walk(l, path, out);
                path.pop();
                path.push(Side::R);
                walk(r, path, out);
                path.pop();
            }
        }
        walk(self, &mut path, &mut out);
        out
    }

    pub fn subterm_at(&self, pos: &Position) -> Result<&Term, TermError> {
        let mut cur = self;
        for (index, side) in pos.0.iter().enumerate() {
            match cur {
                Term::Arrow(l, r) => {
                    cur = match side {
                        Side::L => l,
                        Side::R => r,
                    }
                }
                _ => return Err(TermError::InvalidPosition { index }),
            }
        }
        Ok(cur)
    }

    pub fn replace_at(&self, pos: &Position, replacement: Term) -> Result<Term, TermError> {
        fn go(t: &Term, path: &[Side], index: usize, r: Term) -> Result<Term, TermError> {
            let Some((side, rest)) = path.split_first() else {
                return Ok(r);
            };
            match t {
                Term::Arrow(l, rt) => Ok(match side {
                    Side::L => Term::Arrow(Box::new(go(l, rest, index + 1, r)?), rt.clone()),
                    Side::R => Term::Arrow(l.clone(), Box::new(go(rt, rest, index + 1, r)?)),
                }),
                _ => Err(TermError::InvalidPosition { index }),
            }
        }
        go(self, &pos.0, 0, replacement)
    }

    /// Simultaneous substitution. Unbound variables, constants and `1` stay put.
    pub fn substitute(&self, s: &Substitution) -> Term {
        match self {
            Term::Var(v) => match s.get(v) {
                Some(t) => t.clone(),
                None => self.clone(),
            },
            Term::Unit | Term::Const(_) => self.clone(),
            Term::Arrow(l, r) => Term::arrow(l.substitute(s), r.substitute(s)),
        }
    }

    /// One-way matching: finds the minimal `s` with `pattern.substitute(s) == subject`.
    /// Variables in `subject` are inert symbols.
    pub fn match_pattern(pattern: &Term, subject: &Term) -> Option<Substitution> {
        let mut s = Substitution::new();
        if match_into(pattern, subject, &mut s) {
            Some(s)
        } else {
            None
        }
    }
}

fn match_into(pattern: &Term, subject: &Term, s: &mut Substitution) -> bool {
    match (pattern, subject) {
        (Term::Var(v), _) => match s.get(v) {
            Some(bound) => bound == subject,
            None => {
                s.bind(v, subject.clone());
                true
            }
        },
        (Term::Unit, Term::Unit) => true,
        (Term::Const(a), Term::Const(b)) => a == b,
        (Term::Arrow(pl, pr), Term::Arrow(sl, sr)) => match_into(pl, sl, s) && match_into(pr, sr, s),
        _ => false,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n) | Term::Const(n) => f.write_str(n),
            Term::Unit => f.write_str("1"),
            Term::Arrow(l, r) => {
                if matches!(**l, Term::Arrow(..)) {
                    write!(f, "({l}) -> {r}")
                } else {
                    write!(f, "{l} -> {r}")
                }
            }
        }
    }
}

/// Formats with minimal parentheses; the right argument is never parenthesised.
pub fn format_term(t: &Term) -> String {
    t.to_string()
}

/// Finite mapping from variable names to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<String, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    /// The substitution binding each of `vars` to itself.
    pub fn identity<S: AsRef<str>>(vars: &[S]) -> Self {
        vars.iter()
            .map(|v| (v.as_ref().to_string(), Term::var(v.as_ref())))
            .collect()
    }

    pub fn bind(&mut self, var: &str, t: Term) -> Option<Term> {
        self.0.insert(var.to_string(), t)
    }

    pub fn unbind(&mut self, var: &str) -> Option<Term> {
        self.0.remove(var)
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.0.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    /// `self ; other`: apply `self` first, then `other`.
    pub fn then(&self, other: &Substitution) -> Substitution {
        let mut out: BTreeMap<String, Term> = self
            .0
            .iter()
            .map(|(v, t)| (v.clone(), t.substitute(other)))
            .collect();
        for (v, t) in &other.0 {
            out.entry(v.clone()).or_insert_with(|| t.clone());
        }
        Substitution(out)
    }
}

impl FromIterator<(String, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, Term)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} := {t}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    L,
    R,
}

/// Path from the root; the empty path is the whole term.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(pub Vec<Side>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses a string over `{L, R}`; the empty string is the root.
    pub fn parse(s: &str) -> Option<Position> {
        s.chars()
            .map(|c| match c {
                'L' => Some(Side::L),
                'R' => Some(Side::R),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Position)
    }

    /// True if neither position is a prefix of the other.
    pub fn is_disjoint(&self, other: &Position) -> bool {
        !self.0.starts_with(&other.0) && !other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                Side::L => "L",
                Side::R => "R",
            })?;
        }
        Ok(())
    }
}

/// Parses a term in which every name is a variable.
pub fn parse_term(text: &str) -> Result<Term, TermError> {
    parse_term_with(text, &[] as &[&str])
}

/// Parses a term; names listed in `constants` become [`Term::Const`].
pub fn parse_term_with<S: AsRef<str>>(text: &str, constants: &[S]) -> Result<Term, TermError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        constants: constants.iter().map(|s| s.as_ref()).collect(),
    };
    let t = p.term()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.unexpected("`->` or end of input"));
    }
    Ok(t)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    constants: Vec<&'a str>,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn unexpected(&self, expected: &'static str) -> TermError {
        let found = match self.src.get(self.pos) {
            None => "end of input".to_string(),
            Some(_) => {
                let rest = core::str::from_utf8(&self.src[self.pos..]).unwrap_or("?");
                let c = rest.chars().next().unwrap_or('?');
                alloc::format!("`{c}`")
            }
        };
        TermError::Syntax {
            offset: self.pos,
            expected,
            found,
        }
    }

    fn term(&mut self) -> Result<Term, TermError> {
        let left = self.atom()?;
        self.skip_ws();
        if self.src[self.pos..].starts_with(b"->") {
            self.pos += 2;
            let right = self.term()?;
            Ok(Term::arrow(left, right))
        } else {
            Ok(left)
        }
    }

    fn atom(&mut self) -> Result<Term, TermError> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let t = self.term()?;
                self.skip_ws();
                if self.src.get(self.pos) != Some(&b')') {
                    return Err(self.unexpected("`)`"));
                }
                self.pos += 1;
                Ok(t)
            }
            Some(c) if c.is_ascii_alphanumeric() || *c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                // ASCII-only range, always valid UTF-8.
                let word = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                if word == "1" {
                    Ok(Term::Unit)
                } else if word.as_bytes()[0].is_ascii_digit() {
                    Err(TermError::ReservedName {
                        offset: start,
                        name: word.to_string(),
                    })
                } else if self.constants.contains(&word) {
                    Ok(Term::constant(word))
                } else {
                    Ok(Term::var(word))
                }
            }
            _ => Err(self.unexpected("a name, `1` or `(`")),
        }
    }
}

/// True if `name` is a legal variable or constant name.
pub fn is_identifier(name: &str) -> bool {
    let mut bytes = name.bytes();
    match bytes.next() {
        Some(c) if c.is_ascii_alphabetic() || c == b'_' => {}
        _ => return false,
    }
    bytes.all(|c| c.is_ascii_alphanumeric() || c == b'_')
}
