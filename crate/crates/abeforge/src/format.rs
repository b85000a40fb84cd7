//! JSON file formats: the corpus/proof-script file and the model file.
//!
//! Terms are strings in the usual concrete syntax. Script terms may mention
//! the script's declared constants; statement terms may not.

use std::collections::BTreeMap;

use abeforge_core::corpus::{load_corpus, Corpus, CorpusError, Entry, Role};
use abeforge_core::statement::Equation;
use abeforge_core::{
    parse_term_with, AxiomSystem, Direction, FiniteAlgebra, Justification, Literal, ModelError, Polarity,
    Position, ProofScript, ProofStep, Rewrite, Statement, StatementKind, Substitution, Term, TermError,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Term { context: String, source: TermError },
    #[error("{context}: {message}")]
    Schema { context: String, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
}

fn schema(context: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Schema { context: context.into(), message: message.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct CorpusFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub statements: Vec<StatementJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axiom_systems: Vec<AxiomSystemJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub properties: Vec<String>,
    #[serde(default)]
    pub scripts: Vec<ScriptJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct StatementJson {
    pub id: String,
    pub kind: String,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literals: Option<Vec<LiteralJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Vec<EquationJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conclusion: Option<EquationJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct LiteralJson {
    pub lhs: String,
    pub polarity: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct EquationJson {
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct AxiomSystemJson {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ScriptJson {
    pub id: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hypotheses: Vec<LiteralJson>,
    #[serde(default)]
    pub depends_on: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub steps: Vec<StepJson>,
}

/// One proof step; which fields are present depends on `rule`.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct StepJson {
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clause: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyp: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subst: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<StepJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<Vec<StepJson>>>,
}

/// The model file: `table[i][j]` is `i -> j`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub size: usize,
    pub unit: usize,
    pub table: Vec<Vec<usize>>,
}

impl From<&FiniteAlgebra> for ModelJson {
    fn from(m: &FiniteAlgebra) -> Self {
        ModelJson { size: m.size(), unit: m.unit(), table: m.rows() }
    }
}

impl TryFrom<&ModelJson> for FiniteAlgebra {
    type Error = ModelError;

    fn try_from(m: &ModelJson) -> Result<Self, ModelError> {
        FiniteAlgebra::new(m.size, m.unit, &m.table)
    }
}

pub fn parse_model(text: &str) -> Result<FiniteAlgebra, FormatError> {
    let json: ModelJson = serde_json::from_str(text)?;
    Ok(FiniteAlgebra::try_from(&json)?)
}

pub fn model_to_json(m: &FiniteAlgebra) -> String {
    let mut s = serde_json::to_string_pretty(&ModelJson::from(m)).expect("model serializes");
    s.push('\n');
    s
}

// Core types to JSON.

fn literal_json(l: &Literal) -> LiteralJson {
    LiteralJson { lhs: l.lhs.to_string(), polarity: l.polarity.symbol().to_string(), rhs: l.rhs.to_string() }
}

fn equation_json(e: &Equation) -> EquationJson {
    EquationJson { lhs: e.lhs.to_string(), rhs: e.rhs.to_string() }
}

fn statement_json(e: &Entry) -> StatementJson {
    let st = &e.statement;
    let mut out = StatementJson {
        id: st.id.clone(),
        kind: String::new(),
        role: e.role.as_str().to_string(),
        lhs: None,
        rhs: None,
        literals: None,
        hypotheses: None,
        conclusion: None,
        note: e.note.clone(),
    };
    match (&st.quasi, &st.kind) {
        (Some(q), _) => {
            out.kind = "quasi".into();
            out.hypotheses = Some(q.hypotheses.iter().map(equation_json).collect());
            out.conclusion = Some(equation_json(&q.conclusion));
        }
        (None, StatementKind::Identity { lhs, rhs }) => {
            out.kind = "identity".into();
            out.lhs = Some(lhs.to_string());
            out.rhs = Some(rhs.to_string());
        }
        (None, StatementKind::Clause(lits)) => {
            out.kind = "clause".into();
            out.literals = Some(lits.iter().map(literal_json).collect());
        }
    }
    out
}

fn subst_json(s: &Substitution) -> Option<BTreeMap<String, String>> {
    if s.is_empty() {
        None
    } else {
        Some(s.iter().map(|(v, t)| (v.clone(), t.to_string())).collect())
    }
}

fn rewrite_json(r: &Rewrite, rule: &str) -> StepJson {
    let (by, hyp) = match &r.by {
        Justification::Statement(id) => (Some(id.clone()), None),
        Justification::Hypothesis(i) => (None, Some(*i)),
    };
    StepJson {
        rule: rule.to_string(),
        by,
        hyp,
        subst: subst_json(&r.subst),
        at: Some(r.at.to_string()),
        dir: Some(r.dir.as_str().to_string()),
        ..StepJson::default()
    }
}

pub fn step_json(step: &ProofStep) -> StepJson {
    let rule = step.rule_name();
    match step {
        ProofStep::Rewrite(r) => rewrite_json(r, rule),
        ProofStep::ClauseInstantiate { clause, subst } => StepJson {
            rule: rule.into(),
            clause: Some(clause.clone()),
            subst: Some(subst.iter().map(|(v, t)| (v.clone(), t.to_string())).collect()),
            ..StepJson::default()
        },
        ProofStep::LiteralElim { literal, chain } => StepJson {
            rule: rule.into(),
            literal: Some(*literal),
            chain: Some(chain.iter().map(|r| rewrite_json(r, "rewrite")).collect()),
            ..StepJson::default()
        },
        ProofStep::ClauseLiteralRewrite { literal, rewrite } => {
            StepJson { literal: Some(*literal), ..rewrite_json(rewrite, rule) }
        }
        ProofStep::Split { clause, subst, branches } => StepJson {
            rule: rule.into(),
            clause: Some(clause.clone()),
            subst: Some(subst.iter().map(|(v, t)| (v.clone(), t.to_string())).collect()),
            branches: Some(branches.iter().map(|b| b.iter().map(step_json).collect()).collect()),
            ..StepJson::default()
        },
        ProofStep::CloseConflict { hypothesis } => {
            StepJson { rule: rule.into(), hyp: Some(*hypothesis), ..StepJson::default() }
        }
        ProofStep::CloseRefl => StepJson { rule: rule.into(), ..StepJson::default() },
    }
}

pub fn script_json(s: &ProofScript) -> ScriptJson {
    ScriptJson {
        id: s.id.clone(),
        target: s.target.clone(),
        constants: s.constants.clone(),
        hypotheses: s.hypotheses.iter().map(literal_json).collect(),
        depends_on: s.depends_on.clone(),
        note: s.note.clone(),
        steps: s.steps.iter().map(step_json).collect(),
    }
}

pub fn corpus_file(c: &Corpus) -> CorpusFile {
    CorpusFile {
        statements: c.entries.iter().map(statement_json).collect(),
        axiom_systems: c
            .axiom_systems
            .iter()
            .map(|s| AxiomSystemJson { name: s.name.clone(), members: s.members.clone() })
            .collect(),
        properties: c.properties.clone(),
        scripts: c.scripts.iter().map(script_json).collect(),
    }
}

/// Canonical rendering: pretty-printed, fields in declaration order,
/// substitutions sorted by variable, trailing newline.
pub fn corpus_to_json(c: &Corpus) -> String {
    let mut s = serde_json::to_string_pretty(&corpus_file(c)).expect("corpus serializes");
    s.push('\n');
    s
}

// JSON to core types.

struct Ctx<'a> {
    where_: String,
    constants: &'a [String],
}

impl Ctx<'_> {
    fn term(&self, text: &str) -> Result<Term, FormatError> {
        parse_term_with(text, self.constants)
            .map_err(|source| FormatError::Term { context: self.where_.clone(), source })
    }

    fn literal(&self, l: &LiteralJson) -> Result<Literal, FormatError> {
        let polarity = match l.polarity.as_str() {
            "=" => Polarity::Equal,
            "!=" => Polarity::NotEqual,
            other => return Err(schema(&self.where_, format!("polarity must be \"=\" or \"!=\", found {other:?}"))),
        };
        Ok(Literal { polarity, lhs: self.term(&l.lhs)?, rhs: self.term(&l.rhs)? })
    }

    fn equation(&self, e: &EquationJson) -> Result<Equation, FormatError> {
        Ok(Equation { lhs: self.term(&e.lhs)?, rhs: self.term(&e.rhs)? })
    }

    fn subst(&self, s: &Option<BTreeMap<String, String>>) -> Result<Substitution, FormatError> {
        let mut out = Substitution::new();
        for (v, t) in s.iter().flatten() {
            if !abeforge_core::term::is_identifier(v) || self.constants.contains(v) {
                return Err(schema(&self.where_, format!("`{v}` is not a variable name")));
            }
            out.bind(v, self.term(t)?);
        }
        Ok(out)
    }

    fn require<'v, T>(&self, v: &'v Option<T>, field: &str) -> Result<&'v T, FormatError> {
        v.as_ref().ok_or_else(|| schema(&self.where_, format!("missing field `{field}`")))
    }
}

fn parse_role(s: &str, ctx: &str) -> Result<Role, FormatError> {
    match s {
        "axiom" => Ok(Role::Axiom),
        "property" => Ok(Role::Property),
        "lemma" => Ok(Role::Lemma),
        other => Err(schema(ctx, format!("role must be axiom, property or lemma, found {other:?}"))),
    }
}

fn statement_from(j: &StatementJson) -> Result<Entry, FormatError> {
    let ctx = Ctx { where_: format!("statement `{}`", j.id), constants: &[] };
    let role = parse_role(&j.role, &ctx.where_)?;
    let allowed: &[&str] = match j.kind.as_str() {
        "identity" => &["lhs", "rhs"],
        "clause" => &["literals"],
        "quasi" => &["hypotheses", "conclusion"],
        other => {
            return Err(schema(&ctx.where_, format!("kind must be identity, clause or quasi, found {other:?}")));
        }
    };
    let present = [
        ("lhs", j.lhs.is_some()),
        ("rhs", j.rhs.is_some()),
        ("literals", j.literals.is_some()),
        ("hypotheses", j.hypotheses.is_some()),
        ("conclusion", j.conclusion.is_some()),
    ];
    if let Some((f, _)) = present.iter().find(|(f, p)| *p && !allowed.contains(f)) {
        return Err(schema(&ctx.where_, format!("field `{f}` does not belong to kind {}", j.kind)));
    }
    let statement = match j.kind.as_str() {
        "identity" => {
            Statement::identity(&j.id, ctx.term(ctx.require(&j.lhs, "lhs")?)?, ctx.term(ctx.require(&j.rhs, "rhs")?)?)
        }
        "clause" => {
            let lits = ctx.require(&j.literals, "literals")?;
            if lits.is_empty() {
                return Err(schema(&ctx.where_, "a clause needs at least one literal"));
            }
            Statement::clause(&j.id, lits.iter().map(|l| ctx.literal(l)).collect::<Result<_, _>>()?)
        }
        _ => {
            let hyps = ctx.require(&j.hypotheses, "hypotheses")?;
            let hypotheses = hyps.iter().map(|e| ctx.equation(e)).collect::<Result<_, _>>()?;
            Statement::quasi(&j.id, hypotheses, ctx.equation(ctx.require(&j.conclusion, "conclusion")?)?)
        }
    };
    Ok(Entry { statement, role, note: j.note.clone() })
}

fn direction(ctx: &Ctx, s: &Option<String>) -> Result<Direction, FormatError> {
    match ctx.require(s, "dir")?.as_str() {
        "l2r" => Ok(Direction::LeftToRight),
        "r2l" => Ok(Direction::RightToLeft),
        other => Err(schema(&ctx.where_, format!("dir must be \"l2r\" or \"r2l\", found {other:?}"))),
    }
}

fn rewrite_from(ctx: &Ctx, j: &StepJson) -> Result<Rewrite, FormatError> {
    let by = match (&j.by, j.hyp) {
        (Some(id), None) => Justification::Statement(id.clone()),
        (None, Some(i)) => Justification::Hypothesis(i),
        _ => return Err(schema(&ctx.where_, "a rewrite needs exactly one of `by` and `hyp`")),
    };
    let at_text = ctx.require(&j.at, "at")?;
    let at = Position::parse(at_text)
        .ok_or_else(|| schema(&ctx.where_, format!("position must be a string over L and R, found {at_text:?}")))?;
    Ok(Rewrite { by, subst: ctx.subst(&j.subst)?, at, dir: direction(ctx, &j.dir)? })
}

fn reject_extra(ctx: &Ctx, j: &StepJson, allowed: &[&str]) -> Result<(), FormatError> {
    let present = [
        ("literal", j.literal.is_some()),
        ("clause", j.clause.is_some()),
        ("by", j.by.is_some()),
        ("hyp", j.hyp.is_some()),
        ("subst", j.subst.is_some()),
        ("at", j.at.is_some()),
        ("dir", j.dir.is_some()),
        ("chain", j.chain.is_some()),
        ("branches", j.branches.is_some()),
    ];
    match present.iter().find(|(f, p)| *p && !allowed.contains(f)) {
        Some((f, _)) => Err(schema(&ctx.where_, format!("field `{f}` does not belong to rule {}", j.rule))),
        None => Ok(()),
    }
}

const REWRITE_FIELDS: [&str; 5] = ["by", "hyp", "subst", "at", "dir"];

fn step_from(script: &str, constants: &[String], path: &str, j: &StepJson) -> Result<ProofStep, FormatError> {
    let ctx = Ctx { where_: format!("script `{script}`, step {path}"), constants };
    let step = match j.rule.as_str() {
        "rewrite" => {
            reject_extra(&ctx, j, &REWRITE_FIELDS)?;
            ProofStep::Rewrite(rewrite_from(&ctx, j)?)
        }
        "clause-instantiate" => {
            reject_extra(&ctx, j, &["clause", "subst"])?;
            ProofStep::ClauseInstantiate { clause: ctx.require(&j.clause, "clause")?.clone(), subst: ctx.subst(&j.subst)? }
        }
        "literal-elim" => {
            reject_extra(&ctx, j, &["literal", "chain"])?;
            let chain = ctx
                .require(&j.chain, "chain")?
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let inner = Ctx { where_: format!("{}.{}", ctx.where_, i + 1), constants };
                    if r.rule != "rewrite" {
                        return Err(schema(&inner.where_, "chain entries must be rewrites"));
                    }
                    reject_extra(&inner, r, &REWRITE_FIELDS)?;
                    rewrite_from(&inner, r)
                })
                .collect::<Result<_, _>>()?;
            ProofStep::LiteralElim { literal: *ctx.require(&j.literal, "literal")?, chain }
        }
        "clause-literal-rewrite" => {
            let mut allowed = REWRITE_FIELDS.to_vec();
            allowed.push("literal");
            reject_extra(&ctx, j, &allowed)?;
            ProofStep::ClauseLiteralRewrite {
                literal: *ctx.require(&j.literal, "literal")?,
                rewrite: rewrite_from(&ctx, j)?,
            }
        }
        "split" => {
            reject_extra(&ctx, j, &["clause", "subst", "branches"])?;
            let branches = ctx
                .require(&j.branches, "branches")?
                .iter()
                .enumerate()
                .map(|(b, steps)| {
                    steps
                        .iter()
                        .enumerate()
                        .map(|(k, s)| step_from(script, constants, &format!("{path}, branch {b}, step {}", k + 1), s))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<_, _>>()?;
            ProofStep::Split { clause: ctx.require(&j.clause, "clause")?.clone(), subst: ctx.subst(&j.subst)?, branches }
        }
        "close-conflict" => {
            reject_extra(&ctx, j, &["hyp"])?;
            ProofStep::CloseConflict { hypothesis: *ctx.require(&j.hyp, "hyp")? }
        }
        "close-refl" => {
            reject_extra(&ctx, j, &[])?;
            ProofStep::CloseRefl
        }
        other => return Err(schema(&ctx.where_, format!("unknown rule {other:?}"))),
    };
    Ok(step)
}

fn script_from(j: &ScriptJson) -> Result<ProofScript, FormatError> {
    let where_ = format!("script `{}`", j.id);
    for c in &j.constants {
        if !abeforge_core::term::is_identifier(c) {
            return Err(schema(&where_, format!("`{c}` is not a valid constant name")));
        }
    }
    let ctx = Ctx { where_, constants: &j.constants };
    Ok(ProofScript {
        id: j.id.clone(),
        target: j.target.clone(),
        constants: j.constants.clone(),
        hypotheses: j.hypotheses.iter().map(|l| ctx.literal(l)).collect::<Result<_, _>>()?,
        depends_on: j.depends_on.clone(),
        steps: j
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| step_from(&j.id, &j.constants, &(i + 1).to_string(), s))
            .collect::<Result<_, _>>()?,
        note: j.note.clone(),
    })
}

/// Converts a parsed file. A file without statements is an overlay on the
/// built-in corpus: its scripts replace built-in scripts of the same id and
/// the rest are appended.
pub fn corpus_from_file(file: &CorpusFile) -> Result<Corpus, FormatError> {
    let scripts: Vec<ProofScript> = file.scripts.iter().map(script_from).collect::<Result<_, _>>()?;
    let corpus = if file.statements.is_empty() {
        if !file.axiom_systems.is_empty() || !file.properties.is_empty() {
            return Err(schema("corpus", "axiom systems and properties need statements"));
        }
        let mut base = load_corpus();
        for s in scripts {
            match base.scripts.iter_mut().find(|b| b.id == s.id) {
                Some(slot) => *slot = s,
                None => base.scripts.push(s),
            }
        }
        base
    } else {
        Corpus {
            entries: file.statements.iter().map(statement_from).collect::<Result<_, _>>()?,
            axiom_systems: file
                .axiom_systems
                .iter()
                .map(|s| AxiomSystem { name: s.name.clone(), members: s.members.clone() })
                .collect(),
            properties: file.properties.clone(),
            scripts,
        }
    };
    corpus.validate()?;
    Ok(corpus)
}

pub fn parse_corpus(text: &str) -> Result<Corpus, FormatError> {
    corpus_from_file(&serde_json::from_str(text)?)
}
