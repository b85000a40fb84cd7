//! The `abeforge` command line.
//!
//! Exit codes: 0 success, 2 a proof step failed, 3 bad input (arguments,
//! files, schemas), 4 a counterexample or violation was found.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use abeforge_core::corpus::{load_corpus, Corpus};
use abeforge_core::enumerate::{brute_force_models, OracleError};
use abeforge_core::kernel::Origin;
use abeforge_core::{ReplayReport, ScriptStatus, Statement};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::format::{self, FormatError};
use crate::parallel::Enumerator;
use crate::report::{self, RunOptions, WitnessJson};

/// Largest size the enumerator accepts on the command line.
pub const MAX_ENUMERATION_SIZE: u64 = 7;

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "ABEFORGE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    ProofFailure = 2,
    Input = 3,
    Counterexample = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{0}")]
    Oracle(#[from] OracleError),
    #[error("cannot start worker threads: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Emit {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "abeforge", version, about = "Proof replay and finite model search for implicative aBE algebras")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Emit::Text)]
    pub emit: Emit,
    /// Worker threads for enumeration (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=256))]
    pub threads: Option<u64>,
    /// Abandon a size after this many search nodes.
    #[arg(long = "budget-nodes", global = true)]
    pub budget_nodes: Option<u64>,
    /// Include wall-clock times in reports. Makes JSON output vary between runs.
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay the proof scripts of the built-in corpus or of a file.
    Replay {
        /// Corpus file; without statements it overrides built-in scripts by id.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Print one script (by script or statement id) instead of the summary.
        #[arg(long)]
        show: Option<String>,
    },
    /// Enumerate models up to isomorphism and check properties on them.
    Enumerate {
        #[arg(long)]
        axioms: String,
        #[arg(long = "max-size", value_parser = clap::value_parser!(u64).range(1..=MAX_ENUMERATION_SIZE))]
        max_size: u64,
        /// Property to check; repeatable. Defaults to the corpus properties.
        #[arg(long)]
        property: Vec<String>,
    },
    /// Check a model file against an axiom system and optionally a property.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        axioms: String,
        #[arg(long)]
        property: Option<String>,
    },
    /// Look for the smallest model violating a property.
    Search {
        #[arg(long)]
        axioms: String,
        #[arg(long)]
        violates: String,
        #[arg(long = "max-size", value_parser = clap::value_parser!(u64).range(1..=MAX_ENUMERATION_SIZE))]
        max_size: u64,
    },
    /// Count models by brute force over every table (small sizes only).
    Oracle {
        #[arg(long)]
        axioms: String,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        size: u64,
    },
    /// Export or inspect the built-in corpus.
    Corpus {
        #[command(subcommand)]
        action: CorpusCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Write the canonical corpus file (to stdout without --out).
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a statement and, if it has one, its proof script.
    Show { id: String },
}

struct Run<'a> {
    emit: Emit,
    threads: usize,
    budget: Option<u64>,
    timings: bool,
    out: &'a mut dyn Write,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Input } else { Exit::Ok };
            let text = e.render().to_string();
            let _ = if code == Exit::Ok { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code as i32;
        }
    };
    let sub = subcommand_name(&cli.command);
    let mut run = Run {
        emit: cli.emit,
        threads: worker_count(cli.threads, std::env::var(THREADS_ENV).ok().as_deref()),
        budget: cli.budget_nodes,
        timings: cli.timings,
        out,
    };
    match run.dispatch(&cli.command) {
        Ok(code) => code as i32,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Usage(_) = e {
                let mut cmd = Cli::command();
                cmd.build();
                let usage = match cmd.find_subcommand_mut(sub) {
                    Some(c) => c.render_usage(),
                    None => cmd.render_usage(),
                };
                let _ = writeln!(err, "\n{usage}");
            }
            Exit::Input as i32
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Replay { .. } => "replay",
        Command::Enumerate { .. } => "enumerate",
        Command::Check { .. } => "check",
        Command::Search { .. } => "search",
        Command::Oracle { .. } => "oracle",
        Command::Corpus { .. } => "corpus",
    }
}

/// The flag wins over the default of one worker per core; the environment
/// variable only lowers the result. Invalid values of the variable are ignored.
pub fn worker_count(flag: Option<u64>, env: Option<&str>) -> usize {
    let base = flag.map(|t| t as usize).unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    match env.and_then(|v| v.trim().parse::<usize>().ok()).filter(|&c| c > 0) {
        Some(cap) => base.min(cap),
        None => base,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn axioms_of(corpus: &Corpus, name: &str) -> Result<Vec<Statement>, CliError> {
    corpus.axioms(name).ok_or_else(|| {
        let known: Vec<&str> = corpus.axiom_systems.iter().map(|s| s.name.as_str()).collect();
        CliError::Usage(format!("unknown axiom system `{name}` (known: {})", known.join(", ")))
    })
}

fn statement_of<'c>(corpus: &'c Corpus, id: &str) -> Result<&'c Statement, CliError> {
    corpus.statement(id).ok_or_else(|| CliError::Usage(format!("unknown statement `{id}`")))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

impl Run<'_> {
    fn dispatch(&mut self, command: &Command) -> Result<Exit, CliError> {
        match command {
            Command::Replay { script, show } => self.replay(script.as_deref(), show.as_deref()),
            Command::Enumerate { axioms, max_size, property } => self.enumerate(axioms, *max_size as usize, property),
            Command::Check { model, axioms, property } => self.check(model, axioms, property.as_deref()),
            Command::Search { axioms, violates, max_size } => self.search(axioms, violates, *max_size as usize),
            Command::Oracle { axioms, size } => self.oracle(axioms, *size as usize),
            Command::Corpus { action: CorpusCommand::Export { out } } => self.export(out.as_deref()),
            Command::Corpus { action: CorpusCommand::Show { id } } => self.show_statement(id),
        }
    }

    fn print(&mut self, text: &str) -> Result<(), CliError> {
        self.out.write_all(text.as_bytes())?;
        Ok(())
    }

    fn enumerator(&self) -> Result<Enumerator, CliError> {
        Ok(Enumerator::new(self.threads, self.budget)?)
    }

    fn replay(&mut self, script: Option<&Path>, show: Option<&str>) -> Result<Exit, CliError> {
        let corpus = match script {
            None => load_corpus(),
            Some(path) => format::parse_corpus(&read(path)?)
                .map_err(|source| CliError::Format { path: path.to_path_buf(), source })?,
        };
        let (report, _) = corpus.verify().map_err(|e| CliError::Usage(e.to_string()))?;
        let code = if report.all_verified() { Exit::Ok } else { Exit::ProofFailure };

        if let Some(id) = show {
            let s = corpus
                .script(id)
                .or_else(|| corpus.script_for(id))
                .ok_or_else(|| CliError::Usage(format!("no script for `{id}`")))?;
            let status = status_of(&report, &s.id);
            return match self.emit {
                Emit::Json => {
                    let mut v = json!({ "script": format::script_json(s) });
                    v.as_object_mut().expect("object").extend(status_json(status));
                    self.print(&to_json(&v)).map(|_| code)
                }
                Emit::Text => {
                    let target = corpus.statement(&s.target).expect("validated");
                    let mut text = format!("{s}  target: {target}\n  status: {}\n", status_name(status));
                    if let ScriptStatus::Failed(e) = status {
                        text.push_str(&format!("  error: {e}\n"));
                    }
                    self.print(&text).map(|_| code)
                }
            };
        }

        match self.emit {
            Emit::Json => {
                let scripts: Vec<_> = report
                    .entries
                    .iter()
                    .map(|(id, status)| {
                        let script = corpus.script(id).expect("reported script exists");
                        let mut v = json!({ "id": id, "target": script.target });
                        v.as_object_mut().expect("object").extend(status_json(status));
                        v
                    })
                    .collect();
                let v = json!({
                    "verified": report.verified_count(),
                    "total": report.entries.len(),
                    "scripts": scripts,
                });
                self.print(&to_json(&v))?;
            }
            Emit::Text => {
                let mut text = String::new();
                for (id, status) in &report.entries {
                    let script = corpus.script(id).expect("reported script exists");
                    let target = corpus.statement(&script.target).expect("validated");
                    text.push_str(&format!("{:<9} {:<8} {target}\n", status_name(status), id));
                    if let ScriptStatus::Failed(e) = status {
                        text.push_str(&format!("  error: {e}\n"));
                    }
                }
                text.push_str(&format!("{}/{} verified\n", report.verified_count(), report.entries.len()));
                self.print(&text)?;
            }
        }
        Ok(code)
    }

    fn enumerate(&mut self, name: &str, max_size: usize, ids: &[String]) -> Result<Exit, CliError> {
        let corpus = load_corpus();
        let axioms = axioms_of(&corpus, name)?;
        let ids: Vec<String> = if ids.is_empty() { corpus.properties.clone() } else { ids.to_vec() };
        let props = ids.iter().map(|id| statement_of(&corpus, id).cloned()).collect::<Result<Vec<_>, _>>()?;
        let opts = RunOptions { max_size, stop_on_counterexample: false, timings: self.timings };
        let (report, found) = report::run(&self.enumerator()?, name, &axioms, &props, opts);
        let text = match self.emit {
            Emit::Json => report.to_json(),
            Emit::Text => report.to_text(&found),
        };
        self.print(&text)?;
        Ok(Exit::Ok)
    }

    fn check(&mut self, path: &Path, name: &str, property: Option<&str>) -> Result<Exit, CliError> {
        let corpus = load_corpus();
        let axioms = axioms_of(&corpus, name)?;
        let prop = property.map(|id| statement_of(&corpus, id)).transpose()?;
        let model =
            format::parse_model(&read(path)?).map_err(|source| CliError::Format { path: path.to_path_buf(), source })?;
        let axiom_result = model.check_all(&axioms);
        let prop_result = prop.map(|p| (p, model.check(p)));
        let violated = axiom_result.is_err() || prop_result.as_ref().is_some_and(|(_, r)| r.is_err());

        match self.emit {
            Emit::Json => {
                let mut v = json!({ "axioms": name, "model": axiom_result.is_ok() });
                if let Err(w) = &axiom_result {
                    v["violation"] = json!(WitnessJson::new(w, &model));
                }
                if let Some((p, r)) = &prop_result {
                    let mut pv = json!({ "id": p.id, "status": if r.is_ok() { "holds" } else { "violated" } });
                    if let Err(w) = r {
                        pv["witness"] = json!(WitnessJson::new(w, &model));
                    }
                    v["property"] = pv;
                }
                self.print(&to_json(&v))?;
            }
            Emit::Text => {
                let mut parts = vec![match &axiom_result {
                    Ok(()) => "model: yes".to_string(),
                    Err(w) => format!("model: no; {} violated, witness {}", w.statement, w.describe(&model)),
                }];
                if let Some((p, r)) = &prop_result {
                    parts.push(match r {
                        Ok(()) => format!("{}: holds", p.id),
                        Err(w) => format!("{} violated, witness {}", p.id, w.describe(&model)),
                    });
                }
                self.print(&format!("{}\n", parts.join("; ")))?;
            }
        }
        Ok(if violated { Exit::Counterexample } else { Exit::Ok })
    }

    fn search(&mut self, name: &str, violates: &str, max_size: usize) -> Result<Exit, CliError> {
        let corpus = load_corpus();
        let axioms = axioms_of(&corpus, name)?;
        let prop = statement_of(&corpus, violates)?.clone();
        let opts = RunOptions { max_size, stop_on_counterexample: true, timings: self.timings };
        let (report, found) = report::run(&self.enumerator()?, name, &axioms, std::slice::from_ref(&prop), opts);
        let hit = found.first();
        // Independent re-check of whatever the search returned.
        let reverified = hit.map(|f| f.model.is_model(&axioms) && f.witness.replays(&f.model, &prop));
        match self.emit {
            Emit::Json => {
                let mut v = serde_json::to_value(&report).expect("report serializes");
                v["max_size"] = json!(max_size);
                if let Some(ok) = reverified {
                    v["reverified"] = json!(ok);
                }
                self.print(&to_json(&v))?;
            }
            Emit::Text => {
                let mut text = report.to_text(&[]);
                // Drop the per-property summary; the verdict follows.
                if let Some(cut) = text.find(&format!("\n{}: ", prop.id)) {
                    text.truncate(cut + 1);
                }
                match hit {
                    Some(f) => {
                        text.push_str(&format!(
                            "counterexample of size {} to {}\n{}witness {}\nre-verified: {}\n",
                            f.model.size(),
                            prop.id,
                            f.model,
                            f.witness.describe(&f.model),
                            if reverified == Some(true) { "yes" } else { "NO" },
                        ));
                    }
                    None => {
                        let last = report.sizes.last().expect("at least one size");
                        let up_to = report.properties[0].checked_up_to;
                        if last.status == report::BUDGET_EXCEEDED {
                            text.push_str(&format!("none up to {up_to}; size {}: budget exceeded\n", last.n));
                        } else {
                            text.push_str(&format!("none up to {up_to}\n"));
                        }
                    }
                }
                self.print(&text)?;
            }
        }
        Ok(if hit.is_some() { Exit::Counterexample } else { Exit::Ok })
    }

    fn oracle(&mut self, name: &str, size: usize) -> Result<Exit, CliError> {
        let corpus = load_corpus();
        let axioms = axioms_of(&corpus, name)?;
        let counts = brute_force_models(&axioms, size)?;
        let text = match self.emit {
            Emit::Json => to_json(&json!({
                "axioms": name,
                "size": size,
                "labeled": counts.labeled,
                "classes": counts.classes,
            })),
            Emit::Text => format!("labeled {}, classes {}\n", counts.labeled, counts.classes),
        };
        self.print(&text)?;
        Ok(Exit::Ok)
    }

    fn export(&mut self, out: Option<&Path>) -> Result<Exit, CliError> {
        let text = format::corpus_to_json(&load_corpus());
        match out {
            None => self.print(&text)?,
            Some(path) => {
                std::fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source })?
            }
        }
        Ok(Exit::Ok)
    }

    fn show_statement(&mut self, id: &str) -> Result<Exit, CliError> {
        let corpus = load_corpus();
        let entry = corpus.entry(id).ok_or_else(|| CliError::Usage(format!("unknown statement `{id}`")))?;
        let script = corpus.script_for(id);
        let text = match self.emit {
            Emit::Json => {
                let file = format::corpus_file(&corpus);
                let st = file.statements.into_iter().find(|s| s.id == id).expect("entry exists");
                let mut v = json!({ "statement": st });
                if let Some(s) = script {
                    v["script"] = json!(format::script_json(s));
                }
                to_json(&v)
            }
            Emit::Text => {
                let st = &entry.statement;
                let mut text = format!("{} ({}): {st}\n", st.id, entry.role.as_str());
                if st.quasi.is_some() {
                    text.push_str(&format!("  clause form: {}\n", st.clause_form()));
                }
                if let Some(note) = &entry.note {
                    text.push_str(&format!("  # {note}\n"));
                }
                if let Some(s) = script {
                    text.push('\n');
                    text.push_str(&s.to_string());
                }
                text
            }
        };
        self.print(&text)?;
        Ok(Exit::Ok)
    }
}

fn status_of<'r>(report: &'r ReplayReport, id: &str) -> &'r ScriptStatus {
    static SKIPPED: ScriptStatus = ScriptStatus::Skipped;
    report.entries.iter().find(|(s, _)| s == id).map_or(&SKIPPED, |(_, st)| st)
}

fn status_name(s: &ScriptStatus) -> &'static str {
    match s {
        ScriptStatus::Verified(_) => "verified",
        ScriptStatus::Failed(_) => "failed",
        ScriptStatus::Skipped => "skipped",
    }
}

/// `status`, plus `fingerprint` for verified scripts or `error` for failed ones.
fn status_json(s: &ScriptStatus) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    m.insert("status".into(), json!(status_name(s)));
    match s {
        ScriptStatus::Verified(v) => {
            if let Origin::Proof { fingerprint, .. } = v.origin() {
                m.insert("fingerprint".into(), json!(format!("{fingerprint:016x}")));
            }
        }
        ScriptStatus::Failed(e) => {
            m.insert("error".into(), json!({ "at": e.at.to_string(), "message": e.error.to_string() }));
        }
        ScriptStatus::Skipped => {}
    }
    m
}
