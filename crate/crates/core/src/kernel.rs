//! Proof replay.
//!
//! Three script shapes are accepted:
//!
//! * **identity**: a chain of [`Rewrite`] steps taking the target's left side
//!   to its right side;
//! * **clause**: a [`ProofStep::ClauseInstantiate`] followed by literal
//!   eliminations and in-literal rewrites, ending at the target clause (up to
//!   literal order and orientation);
//! * **refutation**: ground hypotheses negating an instance of the target
//!   clause under fresh constants, then either one case split whose branches
//!   all close, or a single closed branch.
//!
//! Rewriting only ever uses verified identities and equational hypotheses.
//! Every substitution applied to a statement must bind exactly that
//! statement's variables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::hash::Hasher;

use thiserror::Error;

use crate::statement::{Literal, Polarity, Statement, StatementKind};
use crate::term::{is_identifier, Position, Side, Substitution, Term, TermError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::LeftToRight => Direction::RightToLeft,
            Direction::RightToLeft => Direction::LeftToRight,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::LeftToRight => "l2r",
            Direction::RightToLeft => "r2l",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Justification {
    Statement(String),
    /// Index into the script's hypotheses; inside a split branch, the index
    /// one past the last hypothesis names the branch literal.
    Hypothesis(usize),
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Statement(id) => f.write_str(id),
            Justification::Hypothesis(i) => write!(f, "hyp {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rewrite {
    pub by: Justification,
    pub subst: Substitution,
    pub at: Position,
    pub dir: Direction,
}

impl fmt::Display for Rewrite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rewrite by {} {} at ", self.by, self.dir.as_str())?;
        if self.at.is_root() {
            f.write_str("root")?;
        } else {
            write!(f, "{}", self.at)?;
        }
        if !self.subst.is_empty() {
            write!(f, " with {}", self.subst)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProofStep {
    Rewrite(Rewrite),
    ClauseInstantiate {
        clause: String,
        subst: Substitution,
    },
    /// Deletes a disequation `s != t` after proving `s = t` with `chain`.
    LiteralElim {
        literal: usize,
        chain: Vec<Rewrite>,
    },
    /// Rewrites inside one literal. The first selector of the position picks
    /// the side (`L` = lhs, `R` = rhs); the rest addresses the subterm.
    ClauseLiteralRewrite {
        literal: usize,
        rewrite: Rewrite,
    },
    Split {
        clause: String,
        subst: Substitution,
        branches: Vec<Vec<ProofStep>>,
    },
    CloseConflict {
        hypothesis: usize,
    },
    CloseRefl,
}

impl ProofStep {
    pub fn rule_name(&self) -> &'static str {
        match self {
            ProofStep::Rewrite(_) => "rewrite",
            ProofStep::ClauseInstantiate { .. } => "clause-instantiate",
            ProofStep::LiteralElim { .. } => "literal-elim",
            ProofStep::ClauseLiteralRewrite { .. } => "clause-literal-rewrite",
            ProofStep::Split { .. } => "split",
            ProofStep::CloseConflict { .. } => "close-conflict",
            ProofStep::CloseRefl => "close-refl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProofScript {
    pub id: String,
    pub target: String,
    pub constants: Vec<String>,
    pub hypotheses: Vec<Literal>,
    pub depends_on: Vec<String>,
    pub steps: Vec<ProofStep>,
    /// Free-form remark kept with the script, e.g. how an implicit step was
    /// reconstructed.
    pub note: Option<String>,
}

impl ProofScript {
    /// Statement ids referenced anywhere in the steps, in first-use order.
    pub fn referenced_statements(&self) -> Vec<String> {
        fn rw(r: &Rewrite, out: &mut Vec<String>) {
            if let Justification::Statement(id) = &r.by {
                push(out, id);
            }
        }
        fn push(out: &mut Vec<String>, id: &str) {
            if !out.iter().any(|x| x == id) {
                out.push(id.to_string());
            }
        }
        fn walk(steps: &[ProofStep], out: &mut Vec<String>) {
            for s in steps {
                match s {
                    ProofStep::Rewrite(r) => rw(r, out),
                    ProofStep::ClauseInstantiate { clause, .. } => push(out, clause),
                    ProofStep::LiteralElim { chain, .. } => chain.iter().for_each(|r| rw(r, out)),
                    ProofStep::ClauseLiteralRewrite { rewrite, .. } => rw(rewrite, out),
                    ProofStep::Split { clause, branches, .. } => {
                        push(out, clause);
                        branches.iter().for_each(|b| walk(b, out));
                    }
                    ProofStep::CloseConflict { .. } | ProofStep::CloseRefl => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.steps, &mut out);
        out
    }

    /// FNV-1a of the script's canonical rendering.
    pub fn fingerprint(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        h.write(format!("{self}").as_bytes());
        h.finish()
    }
}

fn write_steps(f: &mut fmt::Formatter<'_>, steps: &[ProofStep], indent: usize) -> fmt::Result {
    let pad = " ".repeat(indent);
    for (i, step) in steps.iter().enumerate() {
        let n = i + 1;
        match step {
            ProofStep::Rewrite(r) => writeln!(f, "{pad}{n}. {r}")?,
            ProofStep::ClauseInstantiate { clause, subst } => {
                writeln!(f, "{pad}{n}. instantiate {clause} with {subst}")?
            }
            ProofStep::LiteralElim { literal, chain } => {
                writeln!(f, "{pad}{n}. eliminate literal {literal}, proving its sides equal:")?;
                for (j, r) in chain.iter().enumerate() {
                    writeln!(f, "{pad}   {}.{}. {r}", n, j + 1)?;
                }
            }
            ProofStep::ClauseLiteralRewrite { literal, rewrite } => {
                writeln!(f, "{pad}{n}. in literal {literal}: {rewrite}")?
            }
            ProofStep::Split { clause, subst, branches } => {
                writeln!(f, "{pad}{n}. split on {clause} with {subst}")?;
                for (j, b) in branches.iter().enumerate() {
                    writeln!(f, "{pad}   branch {j}:")?;
                    write_steps(f, b, indent + 6)?;
                }
            }
            ProofStep::CloseConflict { hypothesis } => {
                writeln!(f, "{pad}{n}. close: conflict with hyp {hypothesis}")?
            }
            ProofStep::CloseRefl => writeln!(f, "{pad}{n}. close: reflexivity")?,
        }
    }
    Ok(())
}

impl fmt::Display for ProofScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "script {} proves {}", self.id, self.target)?;
        if let Some(note) = &self.note {
            for line in note.lines() {
                writeln!(f, "  # {line}")?;
            }
        }
        if !self.constants.is_empty() {
            writeln!(f, "  constants: {}", self.constants.join(", "))?;
        }
        for (i, h) in self.hypotheses.iter().enumerate() {
            writeln!(f, "  hyp {i}: {h}")?;
        }
        writeln!(f, "  depends on: {}", self.depends_on.join(", "))?;
        write_steps(f, &self.steps, 2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Axiom,
    Proof { script: String, fingerprint: u64 },
}

/// A statement the environment vouches for. Only axiom admission and
/// [`replay_proof`] construct these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiedStatement {
    statement: Statement,
    origin: Origin,
    sequence: u64,
}

impl VerifiedStatement {
    pub fn statement(&self) -> &Statement {
        &self.statement
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    /// Position in the environment's append order. Stands in for a wall-clock
    /// timestamp so that replay stays deterministic.
    pub fn sequence(&self) -> u64 {
        self.sequence
    }
}

/// Known statements plus the append-only set of verified ones.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    declared: BTreeMap<String, Statement>,
    verified: BTreeMap<String, VerifiedStatement>,
    next_sequence: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvironmentError {
    #[error("statement `{0}` declared twice")]
    Duplicate(String),
    #[error("unknown statement `{0}`")]
    Unknown(String),
    #[error("statement `{0}` is already verified")]
    AlreadyVerified(String),
    #[error("verified statement `{0}` does not match its declaration")]
    Mismatch(String),
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, st: Statement) -> Result<(), EnvironmentError> {
        if self.declared.contains_key(&st.id) {
            return Err(EnvironmentError::Duplicate(st.id));
        }
        self.declared.insert(st.id.clone(), st);
        Ok(())
    }

    pub fn admit_axiom(&mut self, id: &str) -> Result<&VerifiedStatement, EnvironmentError> {
        let st = self
            .declared
            .get(id)
            .ok_or_else(|| EnvironmentError::Unknown(id.to_string()))?
            .clone();
        self.append(VerifiedStatement { statement: st, origin: Origin::Axiom, sequence: 0 })
    }

    /// Appends a statement produced by [`replay_proof`] against this environment.
    pub fn record(&mut self, v: VerifiedStatement) -> Result<&VerifiedStatement, EnvironmentError> {
        match self.declared.get(&v.statement.id) {
            None => return Err(EnvironmentError::Unknown(v.statement.id.clone())),
            Some(d) if *d != v.statement => return Err(EnvironmentError::Mismatch(v.statement.id)),
            _ => {}
        }
        self.append(v)
    }

    fn append(&mut self, mut v: VerifiedStatement) -> Result<&VerifiedStatement, EnvironmentError> {
        let id = v.statement.id.clone();
        if self.verified.contains_key(&id) {
            return Err(EnvironmentError::AlreadyVerified(id));
        }
        v.sequence = self.next_sequence;
        self.next_sequence += 1;
        Ok(self.verified.entry(id).or_insert(v))
    }

    pub fn declared(&self, id: &str) -> Option<&Statement> {
        self.declared.get(id)
    }

    pub fn verified(&self, id: &str) -> Option<&VerifiedStatement> {
        self.verified.get(id)
    }

    pub fn is_verified(&self, id: &str) -> bool {
        self.verified.contains_key(id)
    }

    /// Verified statements in append order.
    pub fn verified_in_order(&self) -> Vec<&VerifiedStatement> {
        let mut v: Vec<_> = self.verified.values().collect();
        v.sort_by_key(|s| s.sequence);
        v
    }
}

/// One segment of a step location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loc {
    Step(usize),
    Branch(usize),
    Chain(usize),
}

/// Where inside a script a failure happened; steps are displayed 1-based,
/// branches 0-based (matching literal indices).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepPath(pub Vec<Loc>);

impl StepPath {
    fn with(&self, loc: Loc) -> StepPath {
        let mut v = self.0.clone();
        v.push(loc);
        StepPath(v)
    }

    /// 1-based index of the outermost step, if any.
    pub fn top_step(&self) -> Option<usize> {
        self.0.iter().find_map(|l| match l {
            Loc::Step(i) => Some(i + 1),
            _ => None,
        })
    }
}

impl fmt::Display for StepPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("script header");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match l {
                Loc::Step(s) => write!(f, "step {}", s + 1)?,
                Loc::Branch(b) => write!(f, "branch {b}")?,
                Loc::Chain(c) => write!(f, "chain step {}", c + 1)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unknown statement `{0}`")]
    UnknownStatement(String),
    #[error("statement `{0}` is used but not listed in depends_on")]
    UndeclaredDependency(String),
    #[error("dependency `{0}` is not verified yet (dependency order violated)")]
    DependencyNotVerified(String),
    #[error("target `{0}` is already verified")]
    AlreadyVerified(String),
    #[error("`{0}` is not an identity; only identities rewrite")]
    NotAnIdentity(String),
    #[error("hypothesis {index} does not exist ({available} available)")]
    HypothesisOutOfRange { index: usize, available: usize },
    #[error("hypothesis {0} is a disequation and cannot rewrite")]
    HypothesisNotEquation(usize),
    #[error("substitution must bind exactly {{{expected}}}, found {{{found}}}")]
    SubstitutionDomain { expected: String, found: String },
    #[error("instance is not ground: `{0}`")]
    NotGround(Term),
    #[error("position: {0}")]
    Position(TermError),
    #[error("instantiated source does not match: expected `{expected}`, found `{found}`")]
    SourceMismatch { expected: Term, found: Term },
    #[error("chain ends at the wrong term: expected `{expected}`, found `{found}`")]
    ChainEnd { expected: Term, found: Term },
    #[error("literal {index} does not exist (clause has {len} literals)")]
    LiteralOutOfRange { index: usize, len: usize },
    #[error("literal {index} is `{literal}`; only a disequation can be eliminated")]
    NotDisequation { index: usize, literal: Literal },
    #[error("derived clause does not match target: expected `{expected}`, found `{found}`")]
    ClauseMismatch { expected: String, found: String },
    #[error("malformed script: {0}")]
    Shape(&'static str),
    #[error("split on a {literals}-literal clause needs {literals} branches, found {branches}")]
    BranchCount { literals: usize, branches: usize },
    #[error("branch does not end in a closing step")]
    UnclosedBranch,
    #[error("no conflict: `{established}` does not contradict `{hypothesis}`")]
    NoConflict { established: String, hypothesis: Literal },
    #[error("hypotheses do not negate an instance of the target under distinct fresh constants: {0}")]
    HypothesesMismatch(String),
    #[error("invalid constant name `{0}`")]
    InvalidConstant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("script `{script}`, {at}: {error}")]
pub struct ReplayError {
    pub script: String,
    pub at: StepPath,
    pub error: CheckError,
}

struct Ctx<'a> {
    env: &'a Environment,
    allowed: Option<BTreeSet<&'a str>>,
    facts: Vec<Literal>,
    ground: bool,
}

impl Ctx<'_> {
    fn statement(&self, id: &str) -> Result<&Statement, CheckError> {
        if let Some(allowed) = &self.allowed {
            if !allowed.contains(id) {
                return Err(if self.env.declared(id).is_none() && !self.env.is_verified(id) {
                    CheckError::UnknownStatement(id.to_string())
                } else {
                    CheckError::UndeclaredDependency(id.to_string())
                });
            }
        }
        match self.env.verified(id) {
            Some(v) => Ok(&v.statement),
            None if self.env.declared(id).is_some() => {
                Err(CheckError::DependencyNotVerified(id.to_string()))
            }
            None => Err(CheckError::UnknownStatement(id.to_string())),
        }
    }

    fn rewrite(&self, current: &Term, step: &Rewrite) -> Result<Term, CheckError> {
        let (lhs, rhs) = match &step.by {
            Justification::Statement(id) => {
                let st = self.statement(id)?;
                let StatementKind::Identity { lhs, rhs } = &st.kind else {
                    return Err(CheckError::NotAnIdentity(id.clone()));
                };
                check_domain(&st.variables(), &step.subst)?;
                (lhs.substitute(&step.subst), rhs.substitute(&step.subst))
            }
            Justification::Hypothesis(k) => {
                let fact = self.facts.get(*k).ok_or(CheckError::HypothesisOutOfRange {
                    index: *k,
                    available: self.facts.len(),
                })?;
                if fact.polarity != Polarity::Equal {
                    return Err(CheckError::HypothesisNotEquation(*k));
                }
                check_domain::<String>(&[], &step.subst)?;
                (fact.lhs.clone(), fact.rhs.clone())
            }
        };
        let (source, target) = match step.dir {
            Direction::LeftToRight => (lhs, rhs),
            Direction::RightToLeft => (rhs, lhs),
        };
        if self.ground {
            for t in [&source, &target] {
                if !t.is_ground() {
                    return Err(CheckError::NotGround(t.clone()));
                }
            }
        }
        let found = current.subterm_at(&step.at).map_err(CheckError::Position)?;
        if *found != source {
            return Err(CheckError::SourceMismatch { expected: source, found: found.clone() });
        }
        current.replace_at(&step.at, target).map_err(CheckError::Position)
    }

    fn chain(
        &self,
        start: &Term,
        end: &Term,
        chain: &[Rewrite],
        at: &StepPath,
        loc: fn(usize) -> Loc,
    ) -> Result<(), (StepPath, CheckError)> {
        let mut cur = start.clone();
        for (i, r) in chain.iter().enumerate() {
            cur = self.rewrite(&cur, r).map_err(|e| (at.with(loc(i)), e))?;
        }
        if cur != *end {
            // A top-level chain is blamed on its last step.
            let blame = match chain.len() {
                n if n > 0 && at.0.is_empty() => at.with(loc(n - 1)),
                _ => at.clone(),
            };
            return Err((blame, CheckError::ChainEnd { expected: end.clone(), found: cur }));
        }
        Ok(())
    }
}

fn check_domain<S: AsRef<str>>(vars: &[S], subst: &Substitution) -> Result<(), CheckError> {
    let expected: BTreeSet<&str> = vars.iter().map(|v| v.as_ref()).collect();
    let found: BTreeSet<&str> = subst.domain().map(|v| v.as_str()).collect();
    if expected != found {
        let join = |s: &BTreeSet<&str>| s.iter().copied().collect::<Vec<_>>().join(", ");
        return Err(CheckError::SubstitutionDomain { expected: join(&expected), found: join(&found) });
    }
    Ok(())
}

/// Checks one rewrite step against verified identities and the equational
/// literals in `hyps`, returning the rewritten term.
pub fn verify_rewrite(
    current: &Term,
    step: &Rewrite,
    env: &Environment,
    hyps: &[Literal],
) -> Result<Term, CheckError> {
    let ctx = Ctx {
        env,
        allowed: None,
        facts: hyps.to_vec(),
        ground: !hyps.is_empty(),
    };
    ctx.rewrite(current, step)
}

/// Replays `script` against `env`. The environment is not modified; append
/// the result with [`Environment::record`].
pub fn replay_proof(script: &ProofScript, env: &Environment) -> Result<VerifiedStatement, ReplayError> {
    let fail = |at: StepPath, error: CheckError| ReplayError {
        script: script.id.clone(),
        at,
        error,
    };
    let header = |e| fail(StepPath::default(), e);

    let target = env
        .declared(&script.target)
        .ok_or_else(|| header(CheckError::UnknownStatement(script.target.clone())))?;
    if env.is_verified(&script.target) {
        return Err(header(CheckError::AlreadyVerified(script.target.clone())));
    }
    for dep in &script.depends_on {
        if env.declared(dep).is_none() {
            return Err(header(CheckError::UnknownStatement(dep.clone())));
        }
        if !env.is_verified(dep) {
            return Err(header(CheckError::DependencyNotVerified(dep.clone())));
        }
    }
    for c in &script.constants {
        if !is_identifier(c) || script.constants.iter().filter(|d| *d == c).count() > 1 {
            return Err(header(CheckError::InvalidConstant(c.clone())));
        }
    }
    for h in &script.hypotheses {
        for side in [&h.lhs, &h.rhs] {
            if !side.is_ground() {
                return Err(header(CheckError::NotGround(side.clone())));
            }
            for c in side.constants() {
                if !script.constants.contains(&c) {
                    return Err(header(CheckError::InvalidConstant(c)));
                }
            }
        }
    }

    let ctx = Ctx {
        env,
        allowed: Some(script.depends_on.iter().map(|s| s.as_str()).collect()),
        facts: script.hypotheses.clone(),
        ground: !script.hypotheses.is_empty(),
    };

    let result = if !script.hypotheses.is_empty() {
        replay_refutation(&ctx, script, target)
    } else if matches!(script.steps.first(), Some(ProofStep::ClauseInstantiate { .. })) {
        replay_clause(&ctx, script, target)
    } else {
        replay_identity(&ctx, script, target)
    };
    result.map_err(|(at, e)| fail(at, e))?;

    Ok(VerifiedStatement {
        statement: target.clone(),
        origin: Origin::Proof { script: script.id.clone(), fingerprint: script.fingerprint() },
        sequence: 0,
    })
}

type Failure = (StepPath, CheckError);

fn replay_identity(ctx: &Ctx<'_>, script: &ProofScript, target: &Statement) -> Result<(), Failure> {
    let root = StepPath::default();
    let StatementKind::Identity { lhs, rhs } = &target.kind else {
        return Err((root, CheckError::Shape("a rewrite chain can only prove an identity")));
    };
    if !script.constants.is_empty() {
        return Err((root, CheckError::Shape("constants are only allowed in refutations")));
    }
    let mut chain = Vec::with_capacity(script.steps.len());
    for (i, s) in script.steps.iter().enumerate() {
        match s {
            ProofStep::Rewrite(r) => chain.push(r.clone()),
            _ => {
                return Err((
                    root.with(Loc::Step(i)),
                    CheckError::Shape("an identity proof consists of rewrite steps only"),
                ))
            }
        }
    }
    ctx.chain(lhs, rhs, &chain, &root, Loc::Step)
}

fn instantiate_clause(ctx: &Ctx<'_>, id: &str, subst: &Substitution) -> Result<Vec<Literal>, CheckError> {
    let st = ctx.statement(id)?;
    check_domain(&st.variables(), subst)?;
    Ok(st.literals().iter().map(|l| l.substitute(subst)).collect())
}

fn render_clause(lits: &[Literal]) -> String {
    if lits.is_empty() {
        return "<empty clause>".to_string();
    }
    lits.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" | ")
}

fn replay_clause(ctx: &Ctx<'_>, script: &ProofScript, target: &Statement) -> Result<(), Failure> {
    let root = StepPath::default();
    if !script.constants.is_empty() {
        return Err((root, CheckError::Shape("constants are only allowed in refutations")));
    }
    let Some(ProofStep::ClauseInstantiate { clause, subst }) = script.steps.first() else {
        unreachable!("caller checked the first step");
    };
    let at0 = root.with(Loc::Step(0));
    let mut lits = instantiate_clause(ctx, clause, subst).map_err(|e| (at0, e))?;

    for (i, step) in script.steps.iter().enumerate().skip(1) {
        let at = root.with(Loc::Step(i));
        match step {
            ProofStep::LiteralElim { literal, chain } => {
                let lit = lits
                    .get(*literal)
                    .ok_or(CheckError::LiteralOutOfRange { index: *literal, len: lits.len() })
                    .map_err(|e| (at.clone(), e))?;
                if lit.polarity != Polarity::NotEqual {
                    let e = CheckError::NotDisequation { index: *literal, literal: lit.clone() };
                    return Err((at, e));
                }
                ctx.chain(&lit.lhs, &lit.rhs, chain, &at, Loc::Chain)?;
                lits.remove(*literal);
            }
            ProofStep::ClauseLiteralRewrite { literal, rewrite } => {
                if matches!(rewrite.by, Justification::Hypothesis(_)) {
                    return Err((at, CheckError::Shape("clause rewrites use identities, not hypotheses")));
                }
                let len = lits.len();
                let lit = lits
                    .get_mut(*literal)
                    .ok_or(CheckError::LiteralOutOfRange { index: *literal, len })
                    .map_err(|e| (at.clone(), e))?;
                let Some((side, rest)) = rewrite.at.0.split_first() else {
                    return Err((at, CheckError::Position(TermError::InvalidPosition { index: 0 })));
                };
                let inner = Rewrite { at: Position(rest.to_vec()), ..rewrite.clone() };
                let term = match side {
                    Side::L => &mut lit.lhs,
                    Side::R => &mut lit.rhs,
                };
                *term = ctx.rewrite(term, &inner).map_err(|e| {
                    // Re-base position errors on the full path.
                    let e = match e {
                        CheckError::Position(TermError::InvalidPosition { index }) => {
                            CheckError::Position(TermError::InvalidPosition { index: index + 1 })
                        }
                        other => other,
                    };
                    (at.clone(), e)
                })?;
            }
            ProofStep::ClauseInstantiate { .. } => {
                return Err((at, CheckError::Shape("a clause proof has exactly one clause-instantiate, first")))
            }
            _ => {
                return Err((
                    at,
                    CheckError::Shape("clause proofs use literal-elim and clause-literal-rewrite steps"),
                ))
            }
        }
    }

    let expected = target.literals();
    if !same_clause(&expected, &lits) {
        // Blamed on the last step, where the derivation ends.
        return Err((
            root.with(Loc::Step(script.steps.len() - 1)),
            CheckError::ClauseMismatch { expected: render_clause(&expected), found: render_clause(&lits) },
        ));
    }
    Ok(())
}

/// Equality of clauses as multisets of literals, each compared up to orientation.
fn same_clause(a: &[Literal], b: &[Literal]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = alloc::vec![false; b.len()];
    a.iter().all(|x| {
        match b.iter().enumerate().position(|(j, y)| !used[j] && x.same_up_to_orientation(y)) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

/// The hypotheses must be exactly the negations of the target's literals
/// under an injective map from target variables onto the declared constants.
/// For a quasi-identity the order is its hypotheses followed by the negated
/// conclusion; for other clauses it is the literal order.
fn check_hypotheses(script: &ProofScript, target: &Statement) -> Result<(), CheckError> {
    let mut lits = target.literals();
    if target.quasi.is_some() && !lits.is_empty() {
        lits.rotate_left(1);
    }
    if lits.len() != script.hypotheses.len() {
        return Err(CheckError::HypothesesMismatch(format!(
            "target has {} literals, script has {} hypotheses",
            lits.len(),
            script.hypotheses.len()
        )));
    }
    let pair = |ls: &mut dyn Iterator<Item = (&Term, &Term)>| {
        ls.fold(Term::Unit, |acc, (l, r)| Term::arrow(acc, Term::arrow(l.clone(), r.clone())))
    };
    for (i, (l, h)) in lits.iter().zip(&script.hypotheses).enumerate() {
        if h.polarity != l.polarity.negate() {
            return Err(CheckError::HypothesesMismatch(format!(
                "hyp {i} must have polarity `{}`",
                l.polarity.negate().symbol()
            )));
        }
    }
    let pattern = pair(&mut lits.iter().map(|l| (&l.lhs, &l.rhs)));
    let subject = pair(&mut script.hypotheses.iter().map(|h| (&h.lhs, &h.rhs)));
    let sigma = Term::match_pattern(&pattern, &subject)
        .ok_or_else(|| CheckError::HypothesesMismatch("no instance of the target matches".to_string()))?;
    let mut image = BTreeSet::new();
    for (v, t) in sigma.iter() {
        let Term::Const(c) = t else {
            return Err(CheckError::HypothesesMismatch(format!("`{v}` is not mapped to a constant")));
        };
        if !image.insert(c.as_str()) {
            return Err(CheckError::HypothesesMismatch(format!("constant `{c}` is used for two variables")));
        }
    }
    let declared: BTreeSet<&str> = script.constants.iter().map(|c| c.as_str()).collect();
    if image != declared {
        return Err(CheckError::HypothesesMismatch(
            "declared constants must be exactly the images of the target variables".to_string(),
        ));
    }
    Ok(())
}

fn replay_refutation(ctx: &Ctx<'_>, script: &ProofScript, target: &Statement) -> Result<(), Failure> {
    let root = StepPath::default();
    check_hypotheses(script, target).map_err(|e| (root.clone(), e))?;
    match script.steps.as_slice() {
        [ProofStep::Split { clause, subst, branches }] => {
            let at = root.with(Loc::Step(0));
            let lits = instantiate_clause(ctx, clause, subst).map_err(|e| (at.clone(), e))?;
            for l in &lits {
                for side in [&l.lhs, &l.rhs] {
                    if !side.is_ground() {
                        return Err((at, CheckError::NotGround(side.clone())));
                    }
                }
            }
            if lits.len() != branches.len() {
                let e = CheckError::BranchCount { literals: lits.len(), branches: branches.len() };
                return Err((at, e));
            }
            for (i, (lit, steps)) in lits.iter().zip(branches).enumerate() {
                let mut facts = ctx.facts.clone();
                facts.push(lit.clone());
                let branch_ctx = Ctx {
                    env: ctx.env,
                    allowed: ctx.allowed.clone(),
                    facts,
                    ground: true,
                };
                close_branch(&branch_ctx, Some(lit), steps, &at.with(Loc::Branch(i)))?;
            }
            Ok(())
        }
        steps if steps.iter().any(|s| matches!(s, ProofStep::Split { .. })) => Err((
            root,
            CheckError::Shape("a split must be the only top-level step of a refutation"),
        )),
        steps => close_branch(ctx, None, steps, &root),
    }
}

fn close_branch(
    ctx: &Ctx<'_>,
    branch_literal: Option<&Literal>,
    steps: &[ProofStep],
    at: &StepPath,
) -> Result<(), Failure> {
    let Some((last, body)) = steps.split_last() else {
        return Err((at.clone(), CheckError::UnclosedBranch));
    };
    let mut chain = Vec::with_capacity(body.len());
    for (i, s) in body.iter().enumerate() {
        match s {
            ProofStep::Rewrite(r) => chain.push(r.clone()),
            ProofStep::CloseConflict { .. } | ProofStep::CloseRefl => {
                return Err((at.with(Loc::Step(i)), CheckError::Shape("closing step must be last")))
            }
            _ => {
                return Err((
                    at.with(Loc::Step(i)),
                    CheckError::Shape("only rewrite steps may precede a closing step"),
                ))
            }
        }
    }
    let close_at = at.with(Loc::Step(body.len()));
    match last {
        ProofStep::CloseConflict { hypothesis } => {
            let fact = ctx.facts.get(*hypothesis).ok_or((
                close_at.clone(),
                CheckError::HypothesisOutOfRange { index: *hypothesis, available: ctx.facts.len() },
            ))?;
            match fact.polarity {
                // Prove the two sides of the disequation equal.
                Polarity::NotEqual => ctx.chain(&fact.lhs, &fact.rhs, &chain, at, Loc::Step),
                // The branch literal must be the direct negation of the fact.
                Polarity::Equal => {
                    let no_conflict = |established: String| {
                        (close_at.clone(), CheckError::NoConflict { established, hypothesis: fact.clone() })
                    };
                    let Some(lit) = branch_literal else {
                        return Err(no_conflict("nothing".to_string()));
                    };
                    if !chain.is_empty() {
                        return Err((
                            at.with(Loc::Step(0)),
                            CheckError::Shape("a direct conflict with an equation takes no rewrite steps"),
                        ));
                    }
                    if lit.same_up_to_orientation(&fact.negated()) {
                        Ok(())
                    } else {
                        Err(no_conflict(lit.to_string()))
                    }
                }
            }
        }
        ProofStep::CloseRefl => match branch_literal {
            Some(lit) if lit.polarity == Polarity::NotEqual => {
                ctx.chain(&lit.lhs, &lit.rhs, &chain, at, Loc::Step)
            }
            _ => Err((close_at, CheckError::Shape("close-refl needs a disequation branch literal"))),
        },
        _ => Err((close_at, CheckError::UnclosedBranch)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptStatus {
    Verified(VerifiedStatement),
    Failed(ReplayError),
    Skipped,
}

/// Per-script outcome of replaying a sequence of scripts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub entries: Vec<(String, ScriptStatus)>,
}

impl ReplayReport {
    pub fn verified_count(&self) -> usize {
        self.entries.iter().filter(|(_, s)| matches!(s, ScriptStatus::Verified(_))).count()
    }

    pub fn all_verified(&self) -> bool {
        self.verified_count() == self.entries.len()
    }

    pub fn first_failure(&self) -> Option<&ReplayError> {
        self.entries.iter().find_map(|(_, s)| match s {
            ScriptStatus::Failed(e) => Some(e),
            _ => None,
        })
    }
}

/// Replays `scripts` in order, recording each success in `env`. The first
/// failure stops the run; later scripts are reported as skipped.
pub fn replay_all(scripts: &[ProofScript], env: &mut Environment) -> ReplayReport {
    let mut entries = Vec::with_capacity(scripts.len());
    let mut failed = false;
    for script in scripts {
        if failed {
            entries.push((script.id.clone(), ScriptStatus::Skipped));
            continue;
        }
        let status = match replay_proof(script, env) {
            Ok(v) => match env.record(v) {
                Ok(v) => ScriptStatus::Verified(v.clone()),
                Err(e) => ScriptStatus::Failed(ReplayError {
                    script: script.id.clone(),
                    at: StepPath::default(),
                    error: match e {
                        EnvironmentError::AlreadyVerified(id) => CheckError::AlreadyVerified(id),
                        other => CheckError::UnknownStatement(other.to_string()),
                    },
                }),
            },
            Err(e) => ScriptStatus::Failed(e),
        };
        failed = matches!(status, ScriptStatus::Failed(_));
        entries.push((script.id.clone(), status));
    }
    ReplayReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statement::Equation;
    use crate::term::{parse_term, parse_term_with};
    use alloc::vec;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn g(s: &str) -> Term {
        parse_term_with(s, &["a", "b", "c"]).unwrap()
    }

    fn subst(pairs: &[(&str, &str)]) -> Substitution {
        pairs.iter().map(|(v, s)| (v.to_string(), t(s))).collect()
    }

    fn rw(by: &str, pairs: &[(&str, &str)], at: &str, dir: Direction) -> Rewrite {
        Rewrite {
            by: Justification::Statement(by.to_string()),
            subst: subst(pairs),
            at: Position::parse(at).unwrap(),
            dir,
        }
    }

    use Direction::{LeftToRight as L2R, RightToLeft as R2L};

    fn base_env() -> Environment {
        let mut env = Environment::new();
        let axioms = [
            Statement::identity("ax2", t("x -> 1"), t("1")),
            Statement::identity("ax3", t("x -> x"), t("1")),
            Statement::identity("ax4", t("x -> (y -> z)"), t("y -> (x -> z)")),
            Statement::identity("ax6", t("(x -> y) -> x"), t("x")),
        ];
        for a in axioms {
            let id = a.id.clone();
            env.declare(a).unwrap();
            env.admit_axiom(&id).unwrap();
        }
        env
    }

    #[test]
    fn rewrite_examples() {
        let env = base_env();
        let out = verify_rewrite(&t("x -> y"), &rw("ax6", &[("x", "x -> y"), ("y", "z -> x")], "", R2L), &env, &[])
            .unwrap();
        assert_eq!(out, t("((x -> y) -> (z -> x)) -> (x -> y)"));

        let out = verify_rewrite(
            &t("(z -> ((x -> y) -> x)) -> (x -> y)"),
            &rw("ax6", &[("x", "x"), ("y", "y")], "LR", L2R),
            &env,
            &[],
        )
        .unwrap();
        assert_eq!(out, t("(z -> x) -> (x -> y)"));

        let hyps = [Literal::eq(g("a -> b"), Term::Unit)];
        let step = Rewrite {
            by: Justification::Statement("ax2".into()),
            subst: [("x".to_string(), g("c -> b"))].into_iter().collect(),
            at: Position::root(),
            dir: L2R,
        };
        assert_eq!(verify_rewrite(&g("(c -> b) -> 1"), &step, &env, &hyps).unwrap(), Term::Unit);
    }

    #[test]
    fn rewrite_errors() {
        let env = base_env();
        let e = verify_rewrite(&t("x -> y"), &rw("nope", &[], "", L2R), &env, &[]).unwrap_err();
        assert_eq!(e, CheckError::UnknownStatement("nope".into()));

        let e = verify_rewrite(&t("x -> y"), &rw("ax3", &[("x", "x")], "LL", L2R), &env, &[]).unwrap_err();
        assert_eq!(e, CheckError::Position(TermError::InvalidPosition { index: 1 }));

        let e = verify_rewrite(&t("x -> y"), &rw("ax3", &[("x", "x")], "", L2R), &env, &[]).unwrap_err();
        assert_eq!(e, CheckError::SourceMismatch { expected: t("x -> x"), found: t("x -> y") });
        assert!(e.to_string().contains("expected `x -> x`, found `x -> y`"));

        let e = verify_rewrite(&t("x -> x"), &rw("ax3", &[], "", L2R), &env, &[]).unwrap_err();
        assert!(matches!(e, CheckError::SubstitutionDomain { .. }));

        let e = verify_rewrite(&t("x -> x"), &rw("ax3", &[("x", "x"), ("q", "x")], "", L2R), &env, &[])
            .unwrap_err();
        assert!(matches!(e, CheckError::SubstitutionDomain { .. }));

        let hyps = [Literal::ne(g("a -> c"), Term::Unit)];
        let step = Rewrite { by: Justification::Hypothesis(0), subst: Substitution::new(), at: Position::root(), dir: L2R };
        assert_eq!(verify_rewrite(&g("a -> c"), &step, &env, &hyps), Err(CheckError::HypothesisNotEquation(0)));
        let step = Rewrite { by: Justification::Hypothesis(3), ..step };
        assert!(matches!(
            verify_rewrite(&g("a -> c"), &step, &env, &hyps),
            Err(CheckError::HypothesisOutOfRange { index: 3, available: 1 })
        ));
    }

    #[test]
    fn ground_context_rejects_open_instances() {
        let env = base_env();
        let hyps = [Literal::eq(g("a -> b"), Term::Unit)];
        // 1 = x -> x with x left open.
        let step = rw("ax3", &[("x", "x")], "", R2L);
        assert!(matches!(verify_rewrite(&Term::Unit, &step, &env, &hyps), Err(CheckError::NotGround(_))));
    }

    fn lem10_script() -> ProofScript {
        ProofScript {
            id: "lem10".into(),
            target: "lem10".into(),
            constants: vec![],
            hypotheses: vec![],
            depends_on: vec!["ax4".into(), "ax6".into()],
            steps: vec![
                ProofStep::Rewrite(rw("ax6", &[("x", "x -> y"), ("y", "z -> x")], "", R2L)),
                ProofStep::Rewrite(rw("ax4", &[("x", "x -> y"), ("y", "z"), ("z", "x")], "L", L2R)),
                ProofStep::Rewrite(rw("ax6", &[("x", "x"), ("y", "y")], "LR", L2R)),
            ],
            note: None,
        }
    }

    #[test]
    fn identity_chain() {
        let mut env = base_env();
        env.declare(Statement::identity("lem10", t("x -> y"), t("(z -> x) -> (x -> y)"))).unwrap();
        let v = replay_proof(&lem10_script(), &env).unwrap();
        assert_eq!(v.statement().id, "lem10");
        env.record(v).unwrap();
        assert!(env.is_verified("lem10"));
        assert_eq!(
            replay_proof(&lem10_script(), &env).unwrap_err().error,
            CheckError::AlreadyVerified("lem10".into())
        );
    }

    #[test]
    fn identity_chain_failures_are_step_indexed() {
        let mut env = base_env();
        env.declare(Statement::identity("lem10", t("x -> y"), t("(z -> x) -> (x -> y)"))).unwrap();

        let mut s = lem10_script();
        if let ProofStep::Rewrite(r) = &mut s.steps[1] {
            r.subst.bind("z", t("y"));
        }
        let e = replay_proof(&s, &env).unwrap_err();
        assert_eq!(e.at.top_step(), Some(2));
        assert!(matches!(e.error, CheckError::SourceMismatch { .. }));
        assert!(e.to_string().starts_with("script `lem10`, step 2: instantiated source does not match"));

        let mut s = lem10_script();
        s.steps.pop();
        let e = replay_proof(&s, &env).unwrap_err();
        assert!(matches!(e.error, CheckError::ChainEnd { .. }));

        let mut s = lem10_script();
        s.depends_on = vec!["ax6".into()];
        let e = replay_proof(&s, &env).unwrap_err();
        assert_eq!(e.error, CheckError::UndeclaredDependency("ax4".into()));

        let mut s = lem10_script();
        s.depends_on.push("lem99".into());
        assert_eq!(replay_proof(&s, &env).unwrap_err().error, CheckError::UnknownStatement("lem99".into()));
    }

    #[test]
    fn dependency_order_is_enforced() {
        let mut env = base_env();
        env.declare(Statement::identity("lem10", t("x -> y"), t("(z -> x) -> (x -> y)"))).unwrap();
        env.declare(Statement::identity("other", t("x"), t("x"))).unwrap();
        let mut s = lem10_script();
        s.depends_on.push("other".into());
        assert_eq!(
            replay_proof(&s, &env).unwrap_err().error,
            CheckError::DependencyNotVerified("other".into())
        );
    }

    fn trans() -> Statement {
        Statement::quasi(
            "trans",
            vec![Equation { lhs: t("x -> y"), rhs: t("1") }, Equation { lhs: t("y -> z"), rhs: t("1") }],
            Equation { lhs: t("x -> z"), rhs: t("1") },
        )
    }

    fn refutation_env() -> Environment {
        let mut env = base_env();
        env.declare(Statement::clause(
            "lem18",
            vec![Literal::eq(t("(x -> y) -> y"), t("x")), Literal::ne(t("y -> x"), t("1"))],
        ))
        .unwrap();
        env.admit_axiom("lem18").unwrap();
        env.declare(trans()).unwrap();
        env
    }

    fn thm_script() -> ProofScript {
        let hyp = |i| Justification::Hypothesis(i);
        let grw = |by: Justification, pairs: &[(&str, &str)], at: &str, dir| {
            ProofStep::Rewrite(Rewrite {
                by,
                subst: pairs.iter().map(|(v, s)| (v.to_string(), g(s))).collect(),
                at: Position::parse(at).unwrap(),
                dir,
            })
        };
        let stmt = |s: &str| Justification::Statement(s.to_string());
        ProofScript {
            id: "thm".into(),
            target: "trans".into(),
            constants: vec!["a".into(), "b".into(), "c".into()],
            hypotheses: vec![
                Literal::eq(g("a -> b"), Term::Unit),
                Literal::eq(g("b -> c"), Term::Unit),
                Literal::ne(g("a -> c"), Term::Unit),
            ],
            depends_on: vec!["lem18".into(), "ax2".into(), "ax4".into()],
            steps: vec![ProofStep::Split {
                clause: "lem18".into(),
                subst: [("x".to_string(), g("c")), ("y".to_string(), g("b"))].into_iter().collect(),
                branches: vec![
                    vec![
                        grw(hyp(3), &[], "R", R2L),
                        grw(stmt("ax4"), &[("x", "a"), ("y", "c -> b"), ("z", "b")], "", L2R),
                        grw(hyp(0), &[], "R", L2R),
                        grw(stmt("ax2"), &[("x", "c -> b")], "", L2R),
                        ProofStep::CloseConflict { hypothesis: 2 },
                    ],
                    vec![ProofStep::CloseConflict { hypothesis: 1 }],
                ],
            }],
            note: None,
        }
    }

    #[test]
    fn refutation() {
        let env = refutation_env();
        let v = replay_proof(&thm_script(), &env).unwrap();
        assert_eq!(v.statement().id, "trans");
    }

    #[test]
    fn refutation_requires_matching_hypotheses() {
        let env = refutation_env();

        let mut s = thm_script();
        s.hypotheses[0] = Literal::eq(g("a -> a"), Term::Unit);
        assert!(matches!(replay_proof(&s, &env).unwrap_err().error, CheckError::HypothesesMismatch(_)));

        // Non-injective: x and z collapse to the same constant.
        let mut s = thm_script();
        s.hypotheses = vec![
            Literal::eq(g("a -> b"), Term::Unit),
            Literal::eq(g("b -> a"), Term::Unit),
            Literal::ne(g("a -> a"), Term::Unit),
        ];
        assert!(matches!(replay_proof(&s, &env).unwrap_err().error, CheckError::HypothesesMismatch(_)));

        let mut s = thm_script();
        s.hypotheses.swap(0, 1);
        assert!(matches!(replay_proof(&s, &env).unwrap_err().error, CheckError::HypothesesMismatch(_)));
    }

    #[test]
    fn refutation_branch_failures() {
        let env = refutation_env();

        let mut s = thm_script();
        if let ProofStep::Split { branches, .. } = &mut s.steps[0] {
            branches[1] = vec![ProofStep::CloseConflict { hypothesis: 0 }];
        }
        let e = replay_proof(&s, &env).unwrap_err();
        assert!(matches!(e.error, CheckError::NoConflict { .. }));
        assert_eq!(e.at.to_string(), "step 1, branch 1, step 1");

        let mut s = thm_script();
        if let ProofStep::Split { branches, .. } = &mut s.steps[0] {
            branches[0].pop();
        }
        let e = replay_proof(&s, &env).unwrap_err();
        assert_eq!(e.error, CheckError::UnclosedBranch);

        let mut s = thm_script();
        if let ProofStep::Split { branches, .. } = &mut s.steps[0] {
            branches.pop();
        }
        assert_eq!(
            replay_proof(&s, &env).unwrap_err().error,
            CheckError::BranchCount { literals: 2, branches: 1 }
        );

        let mut s = thm_script();
        if let ProofStep::Split { branches, .. } = &mut s.steps[0] {
            branches[0].remove(3);
        }
        let e = replay_proof(&s, &env).unwrap_err();
        assert!(matches!(e.error, CheckError::ChainEnd { .. }));
    }

    #[test]
    fn close_refl() {
        let mut env = base_env();
        env.declare(Statement::clause("triv", vec![Literal::eq(t("x -> x"), t("1"))])).unwrap();
        let s = ProofScript {
            id: "triv".into(),
            target: "triv".into(),
            constants: vec!["a".into()],
            hypotheses: vec![Literal::ne(g("a -> a"), Term::Unit)],
            depends_on: vec!["ax3".into()],
            steps: vec![
                ProofStep::Rewrite(Rewrite {
                    by: Justification::Statement("ax3".into()),
                    subst: [("x".to_string(), g("a"))].into_iter().collect(),
                    at: Position::root(),
                    dir: L2R,
                }),
                ProofStep::CloseConflict { hypothesis: 0 },
            ],
            note: None,
        };
        replay_proof(&s, &env).unwrap();
        let mut bad = s.clone();
        bad.steps[1] = ProofStep::CloseRefl;
        assert!(matches!(replay_proof(&bad, &env).unwrap_err().error, CheckError::Shape(_)));
    }

    #[test]
    fn replay_all_skips_after_failure() {
        let mut env = base_env();
        env.declare(Statement::identity("lem10", t("x -> y"), t("(z -> x) -> (x -> y)"))).unwrap();
        env.declare(Statement::identity("lem10b", t("x -> y"), t("(z -> x) -> (x -> y)"))).unwrap();
        let mut broken = lem10_script();
        broken.steps.swap(0, 1);
        let mut second = lem10_script();
        second.id = "lem10b".into();
        second.target = "lem10b".into();
        let report = replay_all(&[broken, second], &mut env);
        assert!(matches!(report.entries[0].1, ScriptStatus::Failed(_)));
        assert_eq!(report.entries[1].1, ScriptStatus::Skipped);
        assert_eq!(report.verified_count(), 0);
        assert!(replay_all(&[], &mut env).entries.is_empty());
    }

    #[test]
    fn display_is_stable() {
        let s = thm_script();
        let text = s.to_string();
        assert!(text.contains("split on lem18 with {x := c, y := b}"));
        assert!(text.contains("branch 1:"));
        assert_eq!(s.fingerprint(), thm_script().fingerprint());
        assert_ne!(s.fingerprint(), lem10_script().fingerprint());
    }
}
