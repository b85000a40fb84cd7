//! Isomorph-free enumeration of finite models by backtracking over the
//! operation table.
//!
//! The unit is fixed at index `n - 1`. Cells forced by axioms of the shape
//! `1 -> x = x`, `x -> 1 = 1`, `x -> x = 1` come out of the initial
//! propagation pass. The remaining cells are filled depth-first in row-major
//! order, trying values in ascending order. After every assignment each
//! axiom instance is partially evaluated: a fully determined instance that
//! fails prunes the branch, and an equation whose one side is known while
//! the other lacks only its outermost cell forces that cell. Complete tables
//! are kept only if they equal their own canonical form, so leaves come out
//! in ascending canonical order.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{ClauseChecker, FiniteAlgebra, Op, Witness, MAX_SIZE};
use crate::statement::{Polarity, Statement};

const EMPTY: u8 = u8::MAX;

/// Cooperative cancellation, polled once per search node.
pub trait Control {
    /// Returns false to abandon the search.
    fn tick(&mut self) -> bool;
}

/// Aborts after a fixed number of nodes.
#[derive(Debug, Clone, Copy, Default)]
pub struct NodeBudget {
    pub limit: Option<u64>,
    pub used: u64,
}

impl NodeBudget {
    pub fn new(limit: Option<u64>) -> Self {
        NodeBudget { limit, used: 0 }
    }
}

impl Control for NodeBudget {
    fn tick(&mut self) -> bool {
        self.used += 1;
        self.limit.is_none_or(|l| self.used <= l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    BudgetExceeded,
}

/// Outcome of one subtree or of a whole size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    /// Canonical representatives, in ascending canonical order.
    pub models: Vec<FiniteAlgebra>,
    /// Cell assignments tried by the search (forced cells excluded).
    pub nodes: u64,
    pub status: Status,
}

impl SearchResult {
    fn empty() -> Self {
        SearchResult { models: Vec::new(), nodes: 0, status: Status::Complete }
    }

    /// Concatenates results of consecutive subtrees.
    pub fn merge(parts: impl IntoIterator<Item = SearchResult>) -> SearchResult {
        let mut out = SearchResult::empty();
        for p in parts {
            out.models.extend(p.models);
            out.nodes += p.nodes;
            if p.status == Status::BudgetExceeded {
                out.status = Status::BudgetExceeded;
            }
        }
        out.models.sort_by_cached_key(|m| m.canonical_form());
        out
    }
}

#[derive(Debug, Clone)]
struct Constraint {
    arity: usize,
    literals: Vec<(Polarity, Vec<Op>, Vec<Op>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Partial {
    Val(u8),
    /// Arguments known, the cell itself still empty.
    Missing(u16),
    Unknown,
}

#[derive(Debug, Clone, Copy)]
enum Verdict {
    Ok,
    Conflict,
    Force(u16, u8),
}

/// A partially filled table `n x n` with the unit at `n - 1`.
#[derive(Debug, Clone)]
pub struct PartialTable {
    n: usize,
    cells: Vec<u8>,
    trail: Vec<u16>,
}

impl PartialTable {
    fn new(n: usize) -> Self {
        PartialTable { n, cells: vec![EMPTY; n * n], trail: Vec::new() }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn unit(&self) -> usize {
        self.n - 1
    }

    pub fn get(&self, x: usize, y: usize) -> Option<usize> {
        match self.cells[x * self.n + y] {
            EMPTY => None,
            v => Some(v as usize),
        }
    }

    fn assign(&mut self, cell: u16, v: u8) {
        debug_assert_eq!(self.cells[cell as usize], EMPTY);
        self.cells[cell as usize] = v;
        self.trail.push(cell);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let c = self.trail.pop().unwrap_or_default();
            self.cells[c as usize] = EMPTY;
        }
    }

    fn first_empty(&self) -> Option<u16> {
        self.cells.iter().position(|&c| c == EMPTY).map(|c| c as u16)
    }

    fn to_algebra(&self) -> FiniteAlgebra {
        FiniteAlgebra::from_bytes(self.n, self.n - 1, self.cells.clone())
    }

    fn eval(&self, ops: &[Op], env: &[u8], stack: &mut Vec<Partial>) -> Partial {
        stack.clear();
        for op in ops {
            let p = match *op {
                Op::Unit => Partial::Val((self.n - 1) as u8),
                Op::Name(k) => Partial::Val(env[k]),
                Op::Arrow => {
                    let r = stack.pop().unwrap_or(Partial::Unknown);
                    let l = stack.pop().unwrap_or(Partial::Unknown);
                    match (l, r) {
                        (Partial::Val(a), Partial::Val(b)) => {
                            let cell = a as usize * self.n + b as usize;
                            match self.cells[cell] {
                                EMPTY => Partial::Missing(cell as u16),
                                v => Partial::Val(v),
                            }
                        }
                        _ => Partial::Unknown,
                    }
                }
            };
            stack.push(p);
        }
        stack.pop().unwrap_or(Partial::Unknown)
    }

    fn judge(&self, c: &Constraint, env: &[u8], stack: &mut Vec<Partial>) -> Verdict {
        let mut open = 0;
        let mut force = None;
        for (pol, l, r) in &c.literals {
            let a = self.eval(l, env, stack);
            let b = self.eval(r, env, stack);
            match (a, b) {
                (Partial::Val(x), Partial::Val(y)) => {
                    if (x == y) == (*pol == Polarity::Equal) {
                        return Verdict::Ok;
                    }
                }
                (Partial::Val(v), Partial::Missing(cell)) | (Partial::Missing(cell), Partial::Val(v))
                    if *pol == Polarity::Equal =>
                {
                    open += 1;
                    force = Some((cell, v));
                }
                _ => open += 1,
            }
        }
        match (open, force) {
            (0, _) => Verdict::Conflict,
            (1, Some((cell, v))) => Verdict::Force(cell, v),
            _ => Verdict::Ok,
        }
    }
}

/// Backtracking search for the models of one axiom system at one size.
#[derive(Debug, Clone)]
pub struct Search {
    n: usize,
    constraints: Vec<Constraint>,
    root: Option<PartialTable>,
}

/// One subtree below the root: the first free cell set to one value, or the
/// root itself when propagation already fills the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch(Option<(u16, u8)>);

impl Search {
    pub fn new(axioms: &[Statement], n: usize) -> Self {
        assert!((1..=MAX_SIZE).contains(&n), "size out of range");
        let constraints = axioms
            .iter()
            .map(|st| {
                let c = ClauseChecker::new(st);
                Constraint {
                    arity: c.names.len(),
                    literals: c.literals.into_iter().map(|(p, l, r)| (p, l.ops().to_vec(), r.ops().to_vec())).collect(),
                }
            })
            .collect();
        let mut s = Search { n, constraints, root: None };
        let mut root = PartialTable::new(n);
        if s.propagate(&mut root) {
            root.trail.clear();
            s.root = Some(root);
        }
        s
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// The table after initial propagation, or `None` if the axioms are
    /// already contradictory at this size.
    pub fn root(&self) -> Option<&PartialTable> {
        self.root.as_ref()
    }

    /// Subtrees in the order a sequential search visits them.
    pub fn branches(&self) -> Vec<Branch> {
        match &self.root {
            None => Vec::new(),
            Some(root) => match root.first_empty() {
                None => vec![Branch(None)],
                Some(cell) => (0..self.n as u8).map(|v| Branch(Some((cell, v)))).collect(),
            },
        }
    }

    pub fn run(&self, control: &mut dyn Control) -> SearchResult {
        let mut parts = Vec::new();
        for b in self.branches() {
            let r = self.run_branch(b, control);
            let stop = r.status == Status::BudgetExceeded;
            parts.push(r);
            if stop {
                break;
            }
        }
        SearchResult::merge(parts)
    }

    pub fn run_branch(&self, branch: Branch, control: &mut dyn Control) -> SearchResult {
        let Some(root) = &self.root else {
            return SearchResult::empty();
        };
        let mut table = root.clone();
        let mut out = SearchResult::empty();
        match branch.0 {
            None => self.dfs(&mut table, control, &mut out),
            Some((cell, v)) => self.try_value(&mut table, cell, v, control, &mut out),
        };
        out
    }

    fn try_value(
        &self,
        table: &mut PartialTable,
        cell: u16,
        v: u8,
        control: &mut dyn Control,
        out: &mut SearchResult,
    ) -> bool {
        out.nodes += 1;
        if !control.tick() {
            out.status = Status::BudgetExceeded;
            return false;
        }
        let mark = table.trail.len();
        table.assign(cell, v);
        let keep_going = if self.propagate(table) { self.dfs(table, control, out) } else { true };
        table.undo_to(mark);
        keep_going
    }

    fn dfs(&self, table: &mut PartialTable, control: &mut dyn Control, out: &mut SearchResult) -> bool {
        match table.first_empty() {
            None => {
                let m = table.to_algebra();
                if m.is_canonical() {
                    out.models.push(m);
                }
                true
            }
            Some(cell) => {
                for v in 0..self.n as u8 {
                    if !self.try_value(table, cell, v, control, out) {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Runs every constraint instance to a fixpoint. False on conflict.
    fn propagate(&self, table: &mut PartialTable) -> bool {
        let n = self.n as u8;
        let mut stack = Vec::with_capacity(16);
        loop {
            let mut changed = false;
            for c in &self.constraints {
                let mut env = vec![0u8; c.arity];
                loop {
                    match table.judge(c, &env, &mut stack) {
                        Verdict::Ok => {}
                        Verdict::Conflict => return false,
                        Verdict::Force(cell, v) => {
                            table.assign(cell, v);
                            changed = true;
                        }
                    }
                    let mut k = c.arity;
                    let done = loop {
                        if k == 0 {
                            break true;
                        }
                        k -= 1;
                        env[k] += 1;
                        if env[k] < n {
                            break false;
                        }
                        env[k] = 0;
                    };
                    if done {
                        break;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }
}

/// All models of `axioms` of size `n`, one per isomorphism class.
pub fn enumerate_models(axioms: &[Statement], n: usize, control: &mut dyn Control) -> SearchResult {
    Search::new(axioms, n).run(control)
}

/// Largest size the brute-force oracle accepts.
pub const ORACLE_MAX_SIZE: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("brute force is limited to size {ORACLE_MAX_SIZE}, got {0}")]
    TooLarge(usize),
    #[error("size must be at least 1")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCounts {
    /// Tables (unit fixed at `n - 1`) that are models.
    pub labeled: u64,
    /// Distinct canonical forms among them.
    pub classes: u64,
}

/// Tries every table on `n <= 3` elements with the unit at `n - 1`.
pub fn brute_force_models(axioms: &[Statement], n: usize) -> Result<OracleCounts, OracleError> {
    if n == 0 {
        return Err(OracleError::Empty);
    }
    if n > ORACLE_MAX_SIZE {
        return Err(OracleError::TooLarge(n));
    }
    let cells = n * n;
    let mut table = vec![0usize; cells];
    let mut labeled = 0;
    let mut classes = BTreeSet::new();
    loop {
        let m = FiniteAlgebra::from_flat(n, n - 1, &table).expect("entries in range");
        if m.is_model(axioms) {
            labeled += 1;
            classes.insert(m.canonical_form());
        }
        let mut k = cells;
        loop {
            if k == 0 {
                return Ok(OracleCounts { labeled, classes: classes.len() as u64 });
            }
            k -= 1;
            table[k] += 1;
            if table[k] < n {
                break;
            }
            table[k] = 0;
        }
    }
}

/// Result of scanning sizes `1..=max` for a model violating a property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleScan {
    pub found: Option<(FiniteAlgebra, Witness)>,
    /// Per scanned size: `(n, models, nodes, status)`.
    pub sizes: Vec<(usize, usize, u64, Status)>,
}

/// Returns the first model (by size, then canonical order) that falsifies
/// `property`.
pub fn find_counterexample(
    axioms: &[Statement],
    property: &Statement,
    max_size: usize,
    control: &mut dyn Control,
) -> CounterexampleScan {
    let mut scan = CounterexampleScan { found: None, sizes: Vec::new() };
    for n in 1..=max_size {
        let r = enumerate_models(axioms, n, control);
        scan.sizes.push((n, r.models.len(), r.nodes, r.status));
        if let Some(hit) = first_violation(&r.models, property) {
            scan.found = Some(hit);
            return scan;
        }
        if r.status == Status::BudgetExceeded {
            return scan;
        }
    }
    scan
}

pub fn first_violation(models: &[FiniteAlgebra], property: &Statement) -> Option<(FiniteAlgebra, Witness)> {
    models.iter().find_map(|m| m.check(property).err().map(|w| (m.clone(), w)))
}
