//! Identities, clauses and quasi-identities. All variables are implicitly
//! universally quantified.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::term::{Substitution, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Equal,
    NotEqual,
}

impl Polarity {
    pub fn negate(self) -> Polarity {
        match self {
            Polarity::Equal => Polarity::NotEqual,
            Polarity::NotEqual => Polarity::Equal,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Polarity::Equal => "=",
            Polarity::NotEqual => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub polarity: Polarity,
    pub lhs: Term,
    pub rhs: Term,
}

impl Literal {
    pub fn eq(lhs: Term, rhs: Term) -> Literal {
        Literal { polarity: Polarity::Equal, lhs, rhs }
    }

    pub fn ne(lhs: Term, rhs: Term) -> Literal {
        Literal { polarity: Polarity::NotEqual, lhs, rhs }
    }

    pub fn negated(&self) -> Literal {
        Literal { polarity: self.polarity.negate(), ..self.clone() }
    }

    pub fn substitute(&self, s: &Substitution) -> Literal {
        Literal {
            polarity: self.polarity,
            lhs: self.lhs.substitute(s),
            rhs: self.rhs.substitute(s),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.lhs.is_ground() && self.rhs.is_ground()
    }

    /// Same polarity and same pair of sides, in either orientation.
    pub fn same_up_to_orientation(&self, other: &Literal) -> bool {
        self.polarity == other.polarity
            && ((self.lhs == other.lhs && self.rhs == other.rhs)
                || (self.lhs == other.rhs && self.rhs == other.lhs))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.polarity.symbol(), self.rhs)
    }
}

/// An equation `lhs = rhs`, used for the hypotheses/conclusion presentation
/// of quasi-identities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Display metadata for a quasi-identity `h1 & ... & hk => c`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuasiForm {
    pub hypotheses: Vec<Equation>,
    pub conclusion: Equation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StatementKind {
    Identity { lhs: Term, rhs: Term },
    Clause(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Statement {
    pub id: String,
    pub kind: StatementKind,
    /// Present only for statements written as quasi-identities; `kind` then
    /// holds the equivalent clause.
    pub quasi: Option<QuasiForm>,
}

impl Statement {
    pub fn identity(id: &str, lhs: Term, rhs: Term) -> Statement {
        Statement {
            id: id.to_string(),
            kind: StatementKind::Identity { lhs, rhs },
            quasi: None,
        }
    }

    pub fn clause(id: &str, literals: Vec<Literal>) -> Statement {
        Statement {
            id: id.to_string(),
            kind: StatementKind::Clause(literals),
            quasi: None,
        }
    }

    /// Stores `hyps => concl` as the clause `concl | !h1 | ... | !hk`.
    pub fn quasi(id: &str, hypotheses: Vec<Equation>, conclusion: Equation) -> Statement {
        let mut literals = Vec::with_capacity(hypotheses.len() + 1);
        literals.push(Literal::eq(conclusion.lhs.clone(), conclusion.rhs.clone()));
        literals.extend(hypotheses.iter().map(|h| Literal::ne(h.lhs.clone(), h.rhs.clone())));
        Statement {
            id: id.to_string(),
            kind: StatementKind::Clause(literals),
            quasi: Some(QuasiForm { hypotheses, conclusion }),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, StatementKind::Identity { .. })
    }

    /// The literals of the clause form.
    pub fn literals(&self) -> Vec<Literal> {
        match &self.kind {
            StatementKind::Identity { lhs, rhs } => alloc::vec![Literal::eq(lhs.clone(), rhs.clone())],
            StatementKind::Clause(lits) => lits.clone(),
        }
    }

    /// Variables in order of first occurrence: across the hypotheses and then
    /// the conclusion for quasi-identities, across the literals otherwise.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(q) = &self.quasi {
            for e in q.hypotheses.iter().chain(core::iter::once(&q.conclusion)) {
                e.lhs.collect_names(&mut out, true);
                e.rhs.collect_names(&mut out, true);
            }
            return out;
        }
        for lit in self.literals() {
            lit.lhs.collect_names(&mut out, true);
            lit.rhs.collect_names(&mut out, true);
        }
        out
    }

    pub fn constants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for lit in self.literals() {
            lit.lhs.collect_names(&mut out, false);
            lit.rhs.collect_names(&mut out, false);
        }
        out
    }

    /// Applies `s` to every term; the result carries the derived id `id[s]`.
    pub fn instantiate(&self, s: &Substitution) -> Statement {
        let kind = match &self.kind {
            StatementKind::Identity { lhs, rhs } => StatementKind::Identity {
                lhs: lhs.substitute(s),
                rhs: rhs.substitute(s),
            },
            StatementKind::Clause(lits) => {
                StatementKind::Clause(lits.iter().map(|l| l.substitute(s)).collect())
            }
        };
        let eq = |e: &Equation| Equation { lhs: e.lhs.substitute(s), rhs: e.rhs.substitute(s) };
        let quasi = self.quasi.as_ref().map(|q| QuasiForm {
            hypotheses: q.hypotheses.iter().map(eq).collect(),
            conclusion: eq(&q.conclusion),
        });
        Statement { id: format!("{}{}", self.id, s), kind, quasi }
    }

    /// The equivalent disjunctive clause: hypotheses negated, conclusion kept.
    pub fn clause_form(&self) -> Statement {
        Statement {
            id: self.id.clone(),
            kind: StatementKind::Clause(self.literals()),
            quasi: None,
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = &self.quasi {
            for (i, h) in q.hypotheses.iter().enumerate() {
                if i > 0 {
                    f.write_str(" & ")?;
                }
                write!(f, "{h}")?;
            }
            return write!(f, " => {}", q.conclusion);
        }
        match &self.kind {
            StatementKind::Identity { lhs, rhs } => write!(f, "{lhs} = {rhs}"),
            StatementKind::Clause(lits) => {
                for (i, l) in lits.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
        }
    }
}

/// A named set of axioms, referenced by statement id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomSystem {
    pub name: String,
    pub members: Vec<String>,
}
