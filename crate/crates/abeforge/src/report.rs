//! Enumeration reports and their JSON and text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use abeforge_core::enumerate::{first_violation, Status};
use abeforge_core::{FiniteAlgebra, Statement, Witness};
use serde::Serialize;

use crate::format::ModelJson;
use crate::parallel::Enumerator;

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct EnumerationReport {
    pub axioms: String,
    pub sizes: Vec<SizeReport>,
    pub properties: Vec<PropertyReport>,
}

/// Counts are omitted when the budget ran out, since a partial count depends
/// on how the work was scheduled.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct SizeReport {
    pub n: usize,
    pub count: Option<usize>,
    pub nodes: Option<u64>,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<u64>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct PropertyReport {
    pub id: String,
    /// `holds` or `counterexample`.
    pub status: &'static str,
    /// Largest size whose models were all checked.
    pub checked_up_to: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct WitnessJson {
    pub statement: String,
    pub assignment: BTreeMap<String, usize>,
    /// Values of each literal's two sides under the assignment.
    pub values: Vec<[usize; 2]>,
    pub text: String,
}

impl WitnessJson {
    pub fn new(w: &Witness, m: &FiniteAlgebra) -> Self {
        WitnessJson {
            statement: w.statement.clone(),
            assignment: w.assignment.iter().cloned().collect(),
            values: w.values.iter().map(|&(l, r)| [l, r]).collect(),
            text: w.describe(m),
        }
    }
}

pub const COMPLETE: &str = "complete";
pub const BUDGET_EXCEEDED: &str = "budget exceeded";
pub const HOLDS: &str = "holds";
pub const COUNTEREXAMPLE: &str = "counterexample";

/// A counterexample kept as core types, for re-verification.
#[derive(Debug, Clone)]
pub struct Found {
    pub property: String,
    pub model: FiniteAlgebra,
    pub witness: Witness,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub max_size: usize,
    /// Stop at the first size that refutes some property.
    pub stop_on_counterexample: bool,
    pub timings: bool,
}

/// Enumerates sizes `1..=max_size` in order and checks every property on
/// each complete size. Stops after the first size whose budget ran out.
pub fn run(
    enumerator: &Enumerator,
    name: &str,
    axioms: &[Statement],
    properties: &[Statement],
    opts: RunOptions,
) -> (EnumerationReport, Vec<Found>) {
    let mut sizes = Vec::new();
    let mut found: Vec<Option<Found>> = vec![None; properties.len()];
    let mut checked_up_to = 0;
    for n in 1..=opts.max_size {
        let start = Instant::now();
        let r = enumerator.run(axioms, n);
        let millis = opts.timings.then(|| start.elapsed().as_millis() as u64);
        let complete = r.status == Status::Complete;
        sizes.push(SizeReport {
            n,
            count: complete.then_some(r.models.len()),
            nodes: complete.then_some(r.nodes),
            status: if complete { COMPLETE } else { BUDGET_EXCEEDED },
            millis,
        });
        if !complete {
            break;
        }
        checked_up_to = n;
        for (slot, prop) in found.iter_mut().zip(properties) {
            if slot.is_none() {
                *slot = first_violation(&r.models, prop)
                    .map(|(model, witness)| Found { property: prop.id.clone(), model, witness });
            }
        }
        if opts.stop_on_counterexample && found.iter().any(Option::is_some) {
            break;
        }
    }
    let reports = properties
        .iter()
        .zip(&found)
        .map(|(p, f)| match f {
            None => PropertyReport { id: p.id.clone(), status: HOLDS, checked_up_to, model: None, witness: None },
            Some(f) => PropertyReport {
                id: p.id.clone(),
                status: COUNTEREXAMPLE,
                checked_up_to: f.model.size(),
                model: Some(ModelJson::from(&f.model)),
                witness: Some(WitnessJson::new(&f.witness, &f.model)),
            },
        })
        .collect();
    let report = EnumerationReport { axioms: name.to_string(), sizes, properties: reports };
    (report, found.into_iter().flatten().collect())
}

impl EnumerationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Size table followed by one line per property.
    pub fn to_text(&self, found: &[Found]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "axioms: {}", self.axioms);
        let timed = self.sizes.iter().any(|s| s.millis.is_some());
        let mut rows = vec![["n".to_string(), "models".into(), "nodes".into(), "status".into(), "ms".into()]];
        for s in &self.sizes {
            let dash = || "-".to_string();
            rows.push([
                s.n.to_string(),
                s.count.map_or_else(dash, |c| c.to_string()),
                s.nodes.map_or_else(dash, |c| c.to_string()),
                s.status.to_string(),
                s.millis.map_or_else(dash, |c| c.to_string()),
            ]);
        }
        for r in &rows {
            let mut line = format!("{:>3}  {:>8}  {:>10}  {:<15}", r[0], r[1], r[2], r[3]);
            if timed {
                let _ = write!(line, "  {:>8}", r[4]);
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        for p in &self.properties {
            match found.iter().find(|f| f.property == p.id) {
                None => {
                    let _ = writeln!(out, "{}: holds in every model up to size {}", p.id, p.checked_up_to);
                }
                Some(f) => {
                    let _ = writeln!(
                        out,
                        "{}: counterexample of size {}, witness {}",
                        p.id,
                        f.model.size(),
                        f.witness.describe(&f.model)
                    );
                    out.push_str(&f.model.to_string());
                }
            }
        }
        out
    }
}
