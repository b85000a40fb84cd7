//! Seeded single-step mutations of proof scripts, for checking that the
//! kernel rejects every corrupted proof.

use std::fmt;

use abeforge_core::corpus::{Corpus, CorpusError};
use abeforge_core::{replay_proof, Environment, Justification, ReplayError, VerifiedStatement, Position, ProofScript, ProofStep, Rewrite, Side, Substitution, Term};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationKind {
    Substitution,
    Position,
    Direction,
    Justification,
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutationKind::Substitution => "substitution",
            MutationKind::Position => "position",
            MutationKind::Direction => "direction",
            MutationKind::Justification => "justification",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Mutation {
    pub kind: MutationKind,
    /// Which site of the script was changed, e.g. `site 3`.
    pub site: usize,
    pub description: String,
    pub script: ProofScript,
}

/// Something a mutation can change.
enum Site<'a> {
    Rewrite(&'a mut Rewrite),
    Instance { clause: &'a mut String, subst: &'a mut Substitution },
    Close(&'a mut usize),
    Literal(&'a mut usize),
}

fn visit<'a>(steps: &'a mut [ProofStep], out: &mut Vec<Site<'a>>) {
    for step in steps {
        match step {
            ProofStep::Rewrite(r) => out.push(Site::Rewrite(r)),
            ProofStep::ClauseInstantiate { clause, subst } => out.push(Site::Instance { clause, subst }),
            ProofStep::LiteralElim { literal, chain } => {
                out.push(Site::Literal(literal));
                out.extend(chain.iter_mut().map(Site::Rewrite));
            }
            ProofStep::ClauseLiteralRewrite { literal, rewrite } => {
                out.push(Site::Literal(literal));
                out.push(Site::Rewrite(rewrite));
            }
            ProofStep::Split { clause, subst, branches } => {
                out.push(Site::Instance { clause, subst });
                for b in branches {
                    visit(b, out);
                }
            }
            ProofStep::CloseConflict { hypothesis } => out.push(Site::Close(hypothesis)),
            ProofStep::CloseRefl => {}
        }
    }
}

fn sites(script: &mut ProofScript) -> Vec<Site<'_>> {
    let mut out = Vec::new();
    visit(&mut script.steps, &mut out);
    out
}

/// Replaces one binding by a different term, or adds a stray binding when
/// the substitution is empty.
fn mutate_subst(s: &mut Substitution, rng: &mut ChaCha8Rng) -> String {
    let vars: Vec<String> = s.domain().cloned().collect();
    if vars.is_empty() {
        s.bind("x", Term::Unit);
        return "added binding x := 1".into();
    }
    let v = vars.choose(rng).unwrap().clone();
    let old = s.get(&v).unwrap().clone();
    let new = match rng.gen_range(0..3) {
        0 => Term::arrow(old.clone(), old.clone()),
        1 => Term::arrow(Term::Unit, old.clone()),
        _ => match &old {
            Term::Arrow(l, _) => (**l).clone(),
            _ => Term::arrow(old.clone(), Term::Unit),
        },
    };
    s.bind(&v, new.clone());
    format!("{v} := {old} became {v} := {new}")
}

fn mutate_position(p: &mut Position, rng: &mut ChaCha8Rng) -> String {
    let old = p.to_string();
    if p.is_root() || rng.gen_bool(0.3) {
        p.0.push(if rng.gen_bool(0.5) { Side::L } else { Side::R });
    } else if rng.gen_bool(0.5) {
        let last = p.0.last_mut().unwrap();
        *last = if *last == Side::L { Side::R } else { Side::L };
    } else {
        p.0.pop();
    }
    format!("position `{old}` became `{p}`")
}

fn other_index(i: usize, bound: usize, rng: &mut ChaCha8Rng) -> usize {
    let candidates: Vec<usize> = (0..bound.max(i + 2)).filter(|&k| k != i).collect();
    *candidates.choose(rng).unwrap()
}

fn other_id(current: &str, pool: &[String], rng: &mut ChaCha8Rng) -> String {
    let candidates: Vec<&String> = pool.iter().filter(|id| *id != current).collect();
    (*candidates.choose(rng).unwrap()).clone()
}

/// Returns a description, or `None` if the site cannot take this kind.
fn apply(
    site: Site<'_>,
    kind: MutationKind,
    hyps: usize,
    statements: &[String],
    clauses: &[String],
    rng: &mut ChaCha8Rng,
) -> Option<String> {
    match (site, kind) {
        (Site::Rewrite(r), MutationKind::Substitution) => Some(mutate_subst(&mut r.subst, rng)),
        (Site::Rewrite(r), MutationKind::Position) => Some(mutate_position(&mut r.at, rng)),
        (Site::Rewrite(r), MutationKind::Direction) => {
            r.dir = r.dir.flipped();
            Some(format!("direction became {}", r.dir.as_str()))
        }
        (Site::Rewrite(r), MutationKind::Justification) => {
            let old = r.by.to_string();
            r.by = match &r.by {
                Justification::Statement(id) => Justification::Statement(other_id(id, statements, rng)),
                Justification::Hypothesis(i) => Justification::Hypothesis(other_index(*i, hyps + 1, rng)),
            };
            Some(format!("justification {old} became {}", r.by))
        }
        (Site::Instance { subst, .. }, MutationKind::Substitution) => Some(mutate_subst(subst, rng)),
        (Site::Instance { clause, .. }, MutationKind::Justification) => {
            let old = clause.clone();
            *clause = other_id(clause, clauses, rng);
            Some(format!("clause {old} became {clause}"))
        }
        (Site::Close(k), MutationKind::Justification) => {
            let old = *k;
            *k = other_index(old, hyps + 1, rng);
            Some(format!("conflict hyp {old} became {k}"))
        }
        (Site::Literal(i), MutationKind::Position) => {
            let old = *i;
            *i = other_index(old, 3, rng);
            Some(format!("literal {old} became {i}"))
        }
        _ => None,
    }
}

const KINDS: [MutationKind; 4] =
    [MutationKind::Substitution, MutationKind::Position, MutationKind::Direction, MutationKind::Justification];

/// `count` mutations of the corpus scripts, each changing exactly one
/// thing in one step. The same seed always yields the same mutations.
pub fn mutations(corpus: &Corpus, seed: u64, count: usize) -> Vec<Mutation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let statements: Vec<String> = corpus.entries.iter().map(|e| e.statement.id.clone()).collect();
    let clauses: Vec<String> =
        corpus.entries.iter().filter(|e| !e.statement.is_identity()).map(|e| e.statement.id.clone()).collect();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let original = corpus.scripts.choose(&mut rng).expect("corpus has scripts");
        let mut script = original.clone();
        let hyps = script.hypotheses.len();
        let kind = *KINDS.choose(&mut rng).unwrap();
        let mut all = sites(&mut script);
        let n = all.len();
        if n == 0 {
            continue;
        }
        let site = rng.gen_range(0..n);
        let chosen = all.swap_remove(site);
        drop(all);
        if let Some(description) = apply(chosen, kind, hyps, &statements, &clauses, &mut rng) {
            if script != *original {
                out.push(Mutation { kind, site, description, script });
            }
        }
    }
    out
}

/// Replays scripts against the environment their original counterpart saw:
/// every earlier corpus script verified, nothing later.
pub struct Harness {
    before: Vec<(String, Environment)>,
}

impl Harness {
    /// Fails if the corpus itself does not verify.
    pub fn new(corpus: &Corpus) -> Result<Self, CorpusError> {
        let mut env = corpus.environment()?;
        let mut before = Vec::with_capacity(corpus.scripts.len());
        for s in &corpus.scripts {
            before.push((s.id.clone(), env.clone()));
            if let Ok(v) = replay_proof(s, &env) {
                env.record(v)?;
            }
        }
        Ok(Harness { before })
    }

    /// `None` if no corpus script has this id.
    pub fn replay(&self, script: &ProofScript) -> Option<Result<VerifiedStatement, ReplayError>> {
        let (_, env) = self.before.iter().find(|(id, _)| *id == script.id)?;
        Some(replay_proof(script, env))
    }
}
