//! The built-in corpus: axioms, properties, lemmas and the scripts that
//! derive them.
//!
//! Statement ids are fixed: `ax1`..`ax6`, `trans`, `commutativity`,
//! `antisym`, `lem8a`, `lem8b`, `lem10`..`lem17`, `lem18`. The script `thm`
//! proves `trans`; every other script is named after its target.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::kernel::{
    replay_all, Direction, Environment, EnvironmentError, Justification, ProofScript, ProofStep, ReplayReport,
    Rewrite,
};
use crate::statement::{AxiomSystem, Equation, Literal, Statement};
use crate::term::{parse_term, parse_term_with, Position, Substitution, Term};

pub const ABE: &str = "aBE";
pub const IMPLICATIVE_ABE: &str = "implicative-aBE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Axiom,
    /// Checked on models only; may or may not have a script.
    Property,
    Lemma,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Axiom => "axiom",
            Role::Property => "property",
            Role::Lemma => "lemma",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub statement: Statement,
    pub role: Role,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("statement `{0}` is defined twice")]
    DuplicateStatement(String),
    #[error("script `{0}` is defined twice")]
    DuplicateScript(String),
    #[error("unknown statement `{id}` in {context}")]
    UnknownStatement { id: String, context: String },
    #[error("axiom system `{0}` is defined twice")]
    DuplicateSystem(String),
    #[error("{0}")]
    Environment(#[from] EnvironmentError),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub entries: Vec<Entry>,
    pub axiom_systems: Vec<AxiomSystem>,
    /// Statement ids offered as model-checkable properties.
    pub properties: Vec<String>,
    /// In dependency order.
    pub scripts: Vec<ProofScript>,
}

impl Corpus {
    pub fn entry(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.statement.id == id)
    }

    pub fn statement(&self, id: &str) -> Option<&Statement> {
        self.entry(id).map(|e| &e.statement)
    }

    pub fn script(&self, id: &str) -> Option<&ProofScript> {
        self.scripts.iter().find(|s| s.id == id)
    }

    /// The script whose target is `id`.
    pub fn script_for(&self, id: &str) -> Option<&ProofScript> {
        self.scripts.iter().find(|s| s.target == id)
    }

    pub fn axiom_system(&self, name: &str) -> Option<&AxiomSystem> {
        self.axiom_systems.iter().find(|s| s.name == name)
    }

    /// The member statements of an axiom system, in order.
    pub fn axioms(&self, name: &str) -> Option<Vec<Statement>> {
        let sys = self.axiom_system(name)?;
        sys.members.iter().map(|id| self.statement(id).cloned()).collect()
    }

    pub fn statements_with_role(&self, role: Role) -> impl Iterator<Item = &Statement> {
        self.entries.iter().filter(move |e| e.role == role).map(|e| &e.statement)
    }

    /// Checks that ids are unique and every reference resolves.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(e.statement.id.as_str()) {
                return Err(CorpusError::DuplicateStatement(e.statement.id.clone()));
            }
        }
        let unknown = |id: &str, context: String| {
            if ids.contains(id) {
                Ok(())
            } else {
                Err(CorpusError::UnknownStatement { id: id.to_string(), context })
            }
        };
        let mut systems = BTreeSet::new();
        for sys in &self.axiom_systems {
            if !systems.insert(sys.name.as_str()) {
                return Err(CorpusError::DuplicateSystem(sys.name.clone()));
            }
            for m in &sys.members {
                unknown(m, alloc::format!("axiom system `{}`", sys.name))?;
            }
        }
        for p in &self.properties {
            unknown(p, "properties".to_string())?;
        }
        let mut scripts = BTreeSet::new();
        for s in &self.scripts {
            if !scripts.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateScript(s.id.clone()));
            }
            unknown(&s.target, alloc::format!("target of script `{}`", s.id))?;
            for d in &s.depends_on {
                unknown(d, alloc::format!("depends_on of script `{}`", s.id))?;
            }
            for r in s.referenced_statements() {
                unknown(&r, alloc::format!("steps of script `{}`", s.id))?;
            }
        }
        Ok(())
    }

    /// All statements declared; axioms admitted.
    pub fn environment(&self) -> Result<Environment, CorpusError> {
        self.validate()?;
        let mut env = Environment::new();
        for e in &self.entries {
            env.declare(e.statement.clone())?;
        }
        for e in self.entries.iter().filter(|e| e.role == Role::Axiom) {
            env.admit_axiom(&e.statement.id)?;
        }
        Ok(env)
    }

    /// Replays every script in order against a fresh environment.
    pub fn verify(&self) -> Result<(ReplayReport, Environment), CorpusError> {
        let mut env = self.environment()?;
        let report = replay_all(&self.scripts, &mut env);
        Ok((report, env))
    }
}

fn t(s: &str) -> Term {
    parse_term(s).expect("built-in term")
}

fn eq(l: &str, r: &str) -> Equation {
    Equation { lhs: t(l), rhs: t(r) }
}

fn subst(pairs: &[(&str, &str)], constants: &[&str]) -> Substitution {
    pairs
        .iter()
        .map(|(v, s)| (v.to_string(), parse_term_with(s, constants).expect("built-in term")))
        .collect()
}

const L2R: Direction = Direction::LeftToRight;
const R2L: Direction = Direction::RightToLeft;

fn rw(by: &str, pairs: &[(&str, &str)], at: &str, dir: Direction) -> Rewrite {
    Rewrite {
        by: Justification::Statement(by.to_string()),
        subst: subst(pairs, &[]),
        at: Position::parse(at).expect("built-in position"),
        dir,
    }
}

fn step(by: &str, pairs: &[(&str, &str)], at: &str, dir: Direction) -> ProofStep {
    ProofStep::Rewrite(rw(by, pairs, at, dir))
}

fn script(target: &str, depends_on: &[&str], steps: Vec<ProofStep>) -> ProofScript {
    ProofScript {
        id: target.to_string(),
        target: target.to_string(),
        constants: vec![],
        hypotheses: vec![],
        depends_on: depends_on.iter().map(|s| s.to_string()).collect(),
        steps,
        note: None,
    }
}

fn entry(statement: Statement, role: Role) -> Entry {
    Entry { statement, role, note: None }
}

/// The built-in corpus.
pub fn load_corpus() -> Corpus {
    let ids = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();

    let entries = vec![
        entry(Statement::identity("ax1", t("1 -> x"), t("x")), Role::Axiom),
        entry(Statement::identity("ax2", t("x -> 1"), t("1")), Role::Axiom),
        entry(Statement::identity("ax3", t("x -> x"), t("1")), Role::Axiom),
        entry(Statement::identity("ax4", t("x -> (y -> z)"), t("y -> (x -> z)")), Role::Axiom),
        entry(Statement::quasi("ax5", vec![eq("x -> y", "1"), eq("y -> x", "1")], eq("x", "y")), Role::Axiom),
        entry(Statement::identity("ax6", t("(x -> y) -> x"), t("x")), Role::Axiom),
        entry(
            Statement::quasi("trans", vec![eq("x -> y", "1"), eq("y -> z", "1")], eq("x -> z", "1")),
            Role::Property,
        ),
        Entry {
            statement: Statement::identity("commutativity", t("(x -> y) -> y"), t("(y -> x) -> x")),
            role: Role::Property,
            note: Some("corollary, not proved here; checked on finite models only".to_string()),
        },
        entry(
            Statement::clause(
                "antisym",
                vec![
                    Literal::eq(t("x"), t("y")),
                    Literal::ne(t("x -> y"), t("1")),
                    Literal::ne(t("y -> x"), t("1")),
                ],
            ),
            Role::Lemma,
        ),
        entry(
            Statement::clause("lem8a", vec![Literal::eq(t("x"), t("y -> x")), Literal::ne(t("(y -> x) -> x"), t("1"))]),
            Role::Lemma,
        ),
        entry(
            Statement::clause(
                "lem8b",
                vec![Literal::eq(t("x"), t("(x -> y) -> y")), Literal::ne(t("((x -> y) -> y) -> x"), t("1"))],
            ),
            Role::Lemma,
        ),
        entry(Statement::identity("lem10", t("x -> y"), t("(z -> x) -> (x -> y)")), Role::Lemma),
        entry(
            Statement::identity("lem11", t("((y -> x) -> z) -> t"), t("((y -> x) -> z) -> ((x -> z) -> t)")),
            Role::Lemma,
        ),
        entry(Statement::identity("lem12", t("(((x -> y) -> z) -> y) -> (x -> y)"), t("1")), Role::Lemma),
        entry(Statement::identity("lem13", t("((((x -> y) -> y) -> x) -> y) -> y"), t("1")), Role::Lemma),
        entry(Statement::identity("lem14", t("y"), t("(((x -> y) -> y) -> x) -> y")), Role::Lemma),
        entry(Statement::identity("lem15", t("x -> y"), t("x -> (((x -> y) -> z) -> y)")), Role::Lemma),
        entry(
            Statement::identity("lem16", t("((x -> y) -> y) -> x"), t("((x -> y) -> y) -> (y -> x)")),
            Role::Lemma,
        ),
        entry(Statement::identity("lem17", t("y -> x"), t("((x -> y) -> y) -> x")), Role::Lemma),
        entry(
            Statement::clause("lem18", vec![Literal::eq(t("(x -> y) -> y"), t("x")), Literal::ne(t("y -> x"), t("1"))]),
            Role::Lemma,
        ),
    ];

    let axiom_systems = vec![
        AxiomSystem { name: ABE.to_string(), members: ids(&["ax1", "ax2", "ax3", "ax4", "ax5"]) },
        AxiomSystem {
            name: IMPLICATIVE_ABE.to_string(),
            members: ids(&["ax1", "ax2", "ax3", "ax4", "ax5", "ax6"]),
        },
    ];

    let xy = [("x", "x"), ("y", "y")];
    let scripts = vec![
        // Antisymmetry read as a disjunction.
        script("antisym", &["ax5"], vec![ProofStep::ClauseInstantiate { clause: "ax5".into(), subst: subst(&xy, &[]) }]),
        script(
            "lem8a",
            &["antisym", "ax4", "ax3", "ax2"],
            vec![
                ProofStep::ClauseInstantiate { clause: "antisym".into(), subst: subst(&[("x", "x"), ("y", "y -> x")], &[]) },
                // x -> (y -> x) = y -> (x -> x) = y -> 1 = 1
                ProofStep::LiteralElim {
                    literal: 1,
                    chain: vec![
                        rw("ax4", &[("x", "x"), ("y", "y"), ("z", "x")], "", L2R),
                        rw("ax3", &[("x", "x")], "R", L2R),
                        rw("ax2", &[("x", "y")], "", L2R),
                    ],
                },
            ],
        ),
        script(
            "lem8b",
            &["antisym", "ax4", "ax3"],
            vec![
                ProofStep::ClauseInstantiate {
                    clause: "antisym".into(),
                    subst: subst(&[("x", "x"), ("y", "(x -> y) -> y")], &[]),
                },
                // x -> ((x -> y) -> y) = (x -> y) -> (x -> y) = 1
                ProofStep::LiteralElim {
                    literal: 1,
                    chain: vec![
                        rw("ax4", &[("x", "x"), ("y", "x -> y"), ("z", "y")], "", L2R),
                        rw("ax3", &[("x", "x -> y")], "", L2R),
                    ],
                },
            ],
        ),
        script(
            "lem10",
            &["ax6", "ax4"],
            vec![
                step("ax6", &[("x", "x -> y"), ("y", "z -> x")], "", R2L),
                step("ax4", &[("x", "x -> y"), ("y", "z"), ("z", "x")], "L", L2R),
                step("ax6", &xy, "LR", L2R),
            ],
        ),
        // With a = (y -> x) -> z: a -> t = (x -> a) -> (a -> t) = a -> ((x -> a) -> t),
        // then x -> a = (y -> x) -> (x -> z) = x -> z inside.
        script(
            "lem11",
            &["lem10", "ax4"],
            vec![
                step("lem10", &[("x", "(y -> x) -> z"), ("y", "t"), ("z", "x")], "", L2R),
                step("ax4", &[("x", "x -> ((y -> x) -> z)"), ("y", "(y -> x) -> z"), ("z", "t")], "", L2R),
                step("ax4", &[("x", "x"), ("y", "y -> x"), ("z", "z")], "RL", L2R),
                step("lem10", &[("x", "x"), ("y", "z"), ("z", "y")], "RL", R2L),
            ],
        ),
        // With a = (x -> y) -> z.
        script(
            "lem12",
            &["ax6", "ax4", "ax3", "ax2"],
            vec![
                step("ax6", &[("x", "x -> y"), ("y", "z")], "R", R2L),
                step("ax4", &[("x", "(x -> y) -> z"), ("y", "x"), ("z", "y")], "R", L2R),
                step("ax4", &[("x", "((x -> y) -> z) -> y"), ("y", "x"), ("z", "((x -> y) -> z) -> y")], "", L2R),
                step("ax3", &[("x", "((x -> y) -> z) -> y")], "R", L2R),
                step("ax2", &[("x", "x")], "", L2R),
            ],
        ),
        script(
            "lem13",
            &["lem11", "lem12"],
            vec![
                step("lem11", &[("x", "x"), ("y", "(x -> y) -> y"), ("z", "y"), ("t", "y")], "", L2R),
                step("lem12", &[("x", "x -> y"), ("y", "y"), ("z", "x")], "", L2R),
            ],
        ),
        script(
            "lem14",
            &["lem8a", "lem13"],
            vec![
                ProofStep::ClauseInstantiate {
                    clause: "lem8a".into(),
                    subst: subst(&[("x", "y"), ("y", "((x -> y) -> y) -> x")], &[]),
                },
                ProofStep::LiteralElim { literal: 1, chain: vec![rw("lem13", &xy, "", L2R)] },
            ],
        ),
        script(
            "lem15",
            &["ax6", "ax4"],
            vec![
                step("ax6", &[("x", "x -> y"), ("y", "z")], "", R2L),
                step("ax4", &[("x", "(x -> y) -> z"), ("y", "x"), ("z", "y")], "", L2R),
            ],
        ),
        ProofScript {
            note: Some(
                "Reconstructed step: the intermediate term of this derivation is not given unambiguously. \
                 lem15 is used with x := (x -> y) -> y, y := x, z := y, which produces \
                 ((x -> y) -> y) -> (((((x -> y) -> y) -> x) -> y) -> x); \
                 lem14 right-to-left at RL then collapses the inner (((x -> y) -> y) -> x) -> y to y."
                    .to_string(),
            ),
            ..script(
                "lem16",
                &["lem15", "lem14"],
                vec![
                    step("lem15", &[("x", "(x -> y) -> y"), ("y", "x"), ("z", "y")], "", L2R),
                    step("lem14", &xy, "RL", R2L),
                ],
            )
        },
        script(
            "lem17",
            &["lem10", "lem16"],
            vec![step("lem10", &[("x", "y"), ("y", "x"), ("z", "x -> y")], "", L2R), step("lem16", &xy, "", R2L)],
        ),
        script(
            "lem18",
            &["lem8b", "lem17"],
            vec![
                ProofStep::ClauseInstantiate { clause: "lem8b".into(), subst: subst(&xy, &[]) },
                ProofStep::ClauseLiteralRewrite { literal: 1, rewrite: rw("lem17", &xy, "L", R2L) },
            ],
        ),
        thm_script(),
    ];

    Corpus {
        entries,
        axiom_systems,
        properties: ids(&["trans", "commutativity"]),
        scripts,
    }
}

/// Refutation of `trans`: assume a -> b = 1, b -> c = 1, a -> c != 1 and
/// split on lem18 at x := c, y := b.
fn thm_script() -> ProofScript {
    let abc = ["a", "b", "c"];
    let g = |s: &str| parse_term_with(s, &abc).expect("built-in term");
    let grw = |by: Justification, pairs: &[(&str, &str)], at: &str, dir| {
        ProofStep::Rewrite(Rewrite {
            by,
            subst: subst(pairs, &abc),
            at: Position::parse(at).expect("built-in position"),
            dir,
        })
    };
    let by = |s: &str| Justification::Statement(s.to_string());
    let hyp = Justification::Hypothesis;
    ProofScript {
        id: "thm".to_string(),
        target: "trans".to_string(),
        constants: abc.iter().map(|s| s.to_string()).collect(),
        hypotheses: vec![
            Literal::eq(g("a -> b"), Term::Unit),
            Literal::eq(g("b -> c"), Term::Unit),
            Literal::ne(g("a -> c"), Term::Unit),
        ],
        depends_on: vec!["lem18".to_string(), "ax4".to_string(), "ax2".to_string()],
        steps: vec![ProofStep::Split {
            clause: "lem18".to_string(),
            subst: subst(&[("x", "c"), ("y", "b")], &abc),
            branches: vec![
                // (c -> b) -> b = c, available as hyp 3:
                // a -> c = a -> ((c -> b) -> b) = (c -> b) -> (a -> b) = (c -> b) -> 1 = 1
                vec![
                    grw(hyp(3), &[], "R", R2L),
                    grw(by("ax4"), &[("x", "a"), ("y", "c -> b"), ("z", "b")], "", L2R),
                    grw(hyp(0), &[], "R", L2R),
                    grw(by("ax2"), &[("x", "c -> b")], "", L2R),
                    ProofStep::CloseConflict { hypothesis: 2 },
                ],
                // b -> c != 1 against b -> c = 1.
                vec![ProofStep::CloseConflict { hypothesis: 1 }],
            ],
        }],
        note: None,
    }
}
