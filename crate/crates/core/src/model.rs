//! Finite algebras given by their operation table, with evaluation,
//! satisfaction and isomorphism testing.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::statement::{Literal, Polarity, Statement};
use crate::term::Term;

/// Largest supported carrier size. Elements are stored as `u8`.
pub const MAX_SIZE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("size must be between 1 and {MAX_SIZE}, got {0}")]
    Size(usize),
    #[error("unit {unit} out of range for size {size}")]
    Unit { unit: usize, size: usize },
    #[error("table must have {expected} rows of {expected} entries")]
    Shape { expected: usize },
    #[error("table entry {row}->{col} = {value} out of range")]
    Entry { row: usize, col: usize, value: usize },
    #[error("name `{0}` is not assigned")]
    Unbound(String),
}

/// `(X, ->, 1)` on `X = {0, .., n-1}`; `table[i * n + j] = i -> j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteAlgebra {
    size: usize,
    unit: usize,
    table: Vec<u8>,
}

impl FiniteAlgebra {
    pub fn new(size: usize, unit: usize, rows: &[Vec<usize>]) -> Result<Self, ModelError> {
        if rows.len() != size || rows.iter().any(|r| r.len() != size) {
            return Err(ModelError::Shape { expected: size });
        }
        let flat: Vec<usize> = rows.iter().flatten().copied().collect();
        Self::from_flat(size, unit, &flat)
    }

    pub fn from_flat(size: usize, unit: usize, table: &[usize]) -> Result<Self, ModelError> {
        if size == 0 || size > MAX_SIZE {
            return Err(ModelError::Size(size));
        }
        if unit >= size {
            return Err(ModelError::Unit { unit, size });
        }
        if table.len() != size * size {
            return Err(ModelError::Shape { expected: size });
        }
        if let Some((k, &v)) = table.iter().enumerate().find(|(_, &v)| v >= size) {
            return Err(ModelError::Entry { row: k / size, col: k % size, value: v });
        }
        Ok(FiniteAlgebra { size, unit, table: table.iter().map(|&v| v as u8).collect() })
    }

    /// Callers guarantee the invariants.
    pub(crate) fn from_bytes(size: usize, unit: usize, table: Vec<u8>) -> Self {
        debug_assert!(table.len() == size * size && unit < size);
        FiniteAlgebra { size, unit, table }
    }

    /// The one-element algebra.
    pub fn trivial() -> Self {
        FiniteAlgebra { size: 1, unit: 0, table: alloc::vec![0] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn op(&self, x: usize, y: usize) -> usize {
        self.table[x * self.size + y] as usize
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.size).map(|r| r.iter().map(|&v| v as usize).collect()).collect()
    }

    /// Display name of an element: `1` for the unit, then `a`, `b`, ... for
    /// the others in index order.
    pub fn element_name(&self, e: usize) -> String {
        if e == self.unit {
            return "1".to_string();
        }
        let k = if e > self.unit { e - 1 } else { e };
        if k < 26 {
            char::from(b'a' + k as u8).to_string()
        } else {
            alloc::format!("e{e}")
        }
    }

    /// Renames element `i` to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> FiniteAlgebra {
        let n = self.size;
        assert_eq!(perm.len(), n, "permutation length");
        let mut table = alloc::vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                table[perm[i] * n + perm[j]] = perm[self.op(i, j)] as u8;
            }
        }
        FiniteAlgebra { size: n, unit: perm[self.unit], table }
    }

    pub fn evaluate(&self, t: &Term, a: &Assignment) -> Result<usize, ModelError> {
        match t {
            Term::Unit => Ok(self.unit),
            Term::Var(v) | Term::Const(v) => a.get(v).ok_or_else(|| ModelError::Unbound(v.clone())),
            Term::Arrow(l, r) => Ok(self.op(self.evaluate(l, a)?, self.evaluate(r, a)?)),
        }
    }

    pub fn satisfies(&self, st: &Statement) -> bool {
        self.check(st).is_ok()
    }

    /// Checks every assignment of elements to the statement's names, in
    /// row-major order (first name most significant), and returns the first
    /// falsifying one.
    pub fn check(&self, st: &Statement) -> Result<(), Witness> {
        let checker = ClauseChecker::new(st);
        let names = checker.names.len();
        let mut env = alloc::vec![0u8; names];
        loop {
            if !checker.holds(self, &env) {
                let assignment = checker.names.iter().cloned().zip(env.iter().map(|&e| e as usize)).collect();
                let values = checker.literals.iter().map(|(_, l, r)| (l.eval(self, &env), r.eval(self, &env))).collect();
                return Err(Witness { statement: st.id.clone(), assignment, values });
            }
            // Odometer, last name fastest.
            let mut k = names;
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                env[k] += 1;
                if (env[k] as usize) < self.size {
                    break;
                }
                env[k] = 0;
            }
        }
    }

    /// Checks `axioms` in order and reports the first failure.
    pub fn check_all(&self, axioms: &[Statement]) -> Result<(), Witness> {
        axioms.iter().try_for_each(|st| self.check(st))
    }

    pub fn is_model(&self, axioms: &[Statement]) -> bool {
        self.check_all(axioms).is_ok()
    }

    /// The lexicographically least row-major table over all relabelings that
    /// send the unit to `n - 1`, prefixed by `n`. Costs `(n-1)! * n^2`.
    pub fn canonical_form(&self) -> Vec<u8> {
        let (best, _) = self.canonical_search();
        let mut out = Vec::with_capacity(best.len() + 1);
        out.push(self.size as u8);
        out.extend_from_slice(&best);
        out
    }

    /// The canonical representative of this algebra's isomorphism class.
    pub fn canonicalize(&self) -> FiniteAlgebra {
        let (best, _) = self.canonical_search();
        FiniteAlgebra { size: self.size, unit: self.size - 1, table: best }
    }

    pub fn is_canonical(&self) -> bool {
        self.unit == self.size - 1 && self.canonical_search().0 == self.table
    }

    pub fn is_isomorphic(&self, other: &FiniteAlgebra) -> bool {
        self.size == other.size && self.canonical_form() == other.canonical_form()
    }

    fn canonical_search(&self) -> (Vec<u8>, Vec<usize>) {
        let n = self.size;
        let others: Vec<usize> = (0..n).filter(|&e| e != self.unit).collect();
        // perm maps old element -> new element.
        let mut perm = alloc::vec![0usize; n];
        perm[self.unit] = n - 1;
        // order[k] = old element placed at new index k.
        let mut order: Vec<usize> = (0..n - 1).collect();
        let mut best: Option<Vec<u8>> = None;
        let mut best_perm = perm.clone();
        let mut candidate = alloc::vec![0u8; n * n];
        loop {
            for (k, &o) in order.iter().enumerate() {
                perm[others[o]] = k;
            }
            let mut inv = alloc::vec![0usize; n];
            for (old, &new) in perm.iter().enumerate() {
                inv[new] = old;
            }
            // Fill row-major and bail out as soon as the candidate is worse.
            let mut ord = core::cmp::Ordering::Equal;
            'fill: for i in 0..n {
                for j in 0..n {
                    let v = perm[self.op(inv[i], inv[j])] as u8;
                    candidate[i * n + j] = v;
                    if ord == core::cmp::Ordering::Equal {
                        if let Some(b) = &best {
                            ord = v.cmp(&b[i * n + j]);
                            if ord == core::cmp::Ordering::Greater {
                                break 'fill;
                            }
                        }
                    }
                }
            }
            if best.is_none() || ord == core::cmp::Ordering::Less {
                best = Some(candidate.clone());
                best_perm.clone_from(&perm);
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
        (best.unwrap_or_default(), best_perm)
    }
}

impl fmt::Display for FiniteAlgebra {
    /// Cayley table with named elements.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.size;
        let width = (0..n).map(|e| self.element_name(e).len()).max().unwrap_or(1).max(2);
        write!(f, "{:>width$} |", "->")?;
        for j in 0..n {
            write!(f, " {:>width$}", self.element_name(j))?;
        }
        writeln!(f)?;
        for i in 0..n {
            write!(f, "{:>width$} |", self.element_name(i))?;
            for j in 0..n {
                write!(f, " {:>width$}", self.element_name(self.op(i, j)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Lexicographic successor; false once the last permutation is reached.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Values for the free names of a term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<String, usize>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, e: usize) {
        self.0.insert(name.to_string(), e);
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }
}

impl FromIterator<(String, usize)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (String, usize)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// A falsifying assignment together with the values of each literal's sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub statement: String,
    /// In the order the names were enumerated.
    pub assignment: Vec<(String, usize)>,
    /// `(lhs, rhs)` value per literal of the clause form.
    pub values: Vec<(usize, usize)>,
}

impl Witness {
    pub fn to_assignment(&self) -> Assignment {
        self.assignment.iter().cloned().collect()
    }

    /// Re-evaluates the statement and confirms this is a genuine violation
    /// with the recorded values.
    pub fn replays(&self, m: &FiniteAlgebra, st: &Statement) -> bool {
        let a = self.to_assignment();
        let lits = st.literals();
        if lits.len() != self.values.len() || st.id != self.statement {
            return false;
        }
        lits.iter().zip(&self.values).all(|(lit, &(l, r))| {
            let (Ok(lv), Ok(rv)) = (m.evaluate(&lit.lhs, &a), m.evaluate(&lit.rhs, &a)) else {
                return false;
            };
            let holds = match lit.polarity {
                Polarity::Equal => lv == rv,
                Polarity::NotEqual => lv != rv,
            };
            lv == l && rv == r && !holds
        })
    }

    /// `x=a, y=1` style rendering using the model's element names.
    pub fn describe(&self, m: &FiniteAlgebra) -> String {
        self.assignment
            .iter()
            .map(|(v, e)| alloc::format!("{v}={}", m.element_name(*e)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Terms flattened to postfix over numbered names.
#[derive(Debug, Clone)]
pub(crate) struct Compiled(Vec<Op>);

#[derive(Debug, Clone, Copy)]
pub(crate) enum Op {
    Name(usize),
    Unit,
    Arrow,
}

impl Compiled {
    pub(crate) fn new(t: &Term, names: &[String]) -> Compiled {
        fn go(t: &Term, names: &[String], out: &mut Vec<Op>) {
            match t {
                Term::Unit => out.push(Op::Unit),
                Term::Var(v) | Term::Const(v) => {
                    let k = names.iter().position(|n| n == v).expect("name collected beforehand");
                    out.push(Op::Name(k));
                }
                Term::Arrow(l, r) => {
                    go(l, names, out);
                    go(r, names, out);
                    out.push(Op::Arrow);
                }
            }
        }
        let mut ops = Vec::new();
        go(t, names, &mut ops);
        Compiled(ops)
    }

    pub(crate) fn ops(&self) -> &[Op] {
        &self.0
    }

    pub(crate) fn eval(&self, m: &FiniteAlgebra, env: &[u8]) -> usize {
        let mut stack: Vec<usize> = Vec::with_capacity(8);
        for op in &self.0 {
            match *op {
                Op::Unit => stack.push(m.unit),
                Op::Name(k) => stack.push(env[k] as usize),
                Op::Arrow => {
                    let r = stack.pop().unwrap_or_default();
                    let l = stack.pop().unwrap_or_default();
                    stack.push(m.op(l, r));
                }
            }
        }
        stack.pop().unwrap_or_default()
    }
}

/// A statement's clause form compiled against a fixed name order
/// (variables, then constants, each by first occurrence).
#[derive(Debug, Clone)]
pub(crate) struct ClauseChecker {
    pub(crate) names: Vec<String>,
    pub(crate) literals: Vec<(Polarity, Compiled, Compiled)>,
}

impl ClauseChecker {
    pub(crate) fn new(st: &Statement) -> Self {
        let mut names = st.variables();
        names.extend(st.constants());
        let literals = st
            .literals()
            .iter()
            .map(|Literal { polarity, lhs, rhs }| (*polarity, Compiled::new(lhs, &names), Compiled::new(rhs, &names)))
            .collect();
        ClauseChecker { names, literals }
    }

    fn holds(&self, m: &FiniteAlgebra, env: &[u8]) -> bool {
        self.literals.iter().any(|(p, l, r)| {
            let eq = l.eval(m, env) == r.eval(m, env);
            match p {
                Polarity::Equal => eq,
                Polarity::NotEqual => !eq,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statement::Equation;
    use crate::term::{parse_term, Substitution};
    use alloc::vec;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn m2() -> FiniteAlgebra {
        FiniteAlgebra::new(2, 1, &[vec![1, 1], vec![0, 1]]).unwrap()
    }

    fn assign(pairs: &[(&str, usize)]) -> Assignment {
        pairs.iter().map(|(n, e)| (n.to_string(), *e)).collect()
    }

    fn trans() -> Statement {
        Statement::quasi(
            "trans",
            vec![Equation { lhs: t("x -> y"), rhs: t("1") }, Equation { lhs: t("y -> z"), rhs: t("1") }],
            Equation { lhs: t("x -> z"), rhs: t("1") },
        )
    }

    #[test]
    fn validation() {
        assert_eq!(FiniteAlgebra::new(0, 0, &[]), Err(ModelError::Size(0)));
        assert_eq!(FiniteAlgebra::new(2, 2, &[vec![1, 1], vec![0, 1]]), Err(ModelError::Unit { unit: 2, size: 2 }));
        assert_eq!(FiniteAlgebra::new(2, 1, &[vec![1, 1]]), Err(ModelError::Shape { expected: 2 }));
        assert_eq!(
            FiniteAlgebra::new(2, 1, &[vec![1, 5], vec![0, 1]]),
            Err(ModelError::Entry { row: 0, col: 1, value: 5 })
        );
    }

    #[test]
    fn evaluate_examples() {
        let m = m2();
        assert_eq!(m.evaluate(&t("1 -> x"), &assign(&[("x", 0)])), Ok(0));
        assert_eq!(m.evaluate(&t("(x -> y) -> x"), &assign(&[("x", 0), ("y", 1)])), Ok(0));
        assert_eq!(m.evaluate(&t("1"), &Assignment::new()), Ok(m.unit()));
        assert_eq!(m.evaluate(&t("x -> y"), &assign(&[("x", 0)])), Err(ModelError::Unbound("y".into())));
    }

    #[test]
    fn satisfaction() {
        let m = m2();
        assert!(m.satisfies(&Statement::identity("ax1", t("1 -> x"), t("x"))));
        assert!(m.satisfies(&trans()));

        // a -> a = a violates x -> x = 1.
        let bad = FiniteAlgebra::new(2, 1, &[vec![0, 1], vec![0, 1]]).unwrap();
        let ax3 = Statement::identity("ax3", t("x -> x"), t("1"));
        let w = bad.check(&ax3).unwrap_err();
        assert_eq!(w.assignment, vec![("x".to_string(), 0)]);
        assert_eq!(w.values, vec![(0, 1)]);
        assert_eq!(w.describe(&bad), "x=a");
        assert!(w.replays(&bad, &ax3));
        assert!(!w.replays(&m, &ax3));
    }

    #[test]
    fn first_witness_is_row_major() {
        // Falsified by x=0,y=0 and x=1,y=0; x is the most significant name.
        let m = FiniteAlgebra::new(3, 2, &[vec![0, 2, 2], vec![0, 2, 2], vec![0, 1, 2]]).unwrap();
        let st = Statement::identity("s", t("x -> y"), t("1"));
        let w = m.check(&st).unwrap_err();
        assert_eq!(w.assignment, vec![("x".into(), 0), ("y".into(), 0)]);
    }

    #[test]
    fn trivial_algebra_satisfies_everything_equational() {
        let m = FiniteAlgebra::trivial();
        assert!(m.satisfies(&trans()));
        assert!(m.satisfies(&Statement::identity("c", t("(x -> y) -> y"), t("(y -> x) -> x"))));
    }

    #[test]
    fn canonical_forms() {
        let m = FiniteAlgebra::new(3, 0, &[vec![0, 1, 2], vec![0, 0, 2], vec![0, 0, 0]]).unwrap();
        let c = m.canonicalize();
        assert_eq!(c.unit(), 2);
        assert!(c.is_canonical());
        assert_eq!(c.canonical_form(), m.canonical_form());
        assert!(m.is_isomorphic(&m.relabel(&[2, 0, 1])));
        assert!(m.is_isomorphic(&m.relabel(&[1, 2, 0])));
        assert!(!m.is_isomorphic(&m2()));
        assert_eq!(m.canonical_form()[0], 3);
        assert!(c.canonical_form() <= m.relabel(&[2, 1, 0]).canonical_form());
    }

    #[test]
    fn canonical_is_minimum_over_all_relabelings() {
        let m = FiniteAlgebra::new(4, 1, &[vec![1, 1, 3, 2], vec![0, 1, 2, 3], vec![0, 1, 1, 0], vec![2, 1, 2, 1]])
            .unwrap();
        let mut perms = vec![];
        let mut p = vec![0, 1, 2, 3];
        loop {
            perms.push(p.clone());
            if !next_permutation(&mut p) {
                break;
            }
        }
        assert_eq!(perms.len(), 24);
        let min = perms
            .iter()
            .filter(|p| p[1] == 3)
            .map(|p| m.relabel(p).rows())
            .min()
            .unwrap();
        assert_eq!(m.canonicalize().rows(), min);
    }

    #[test]
    fn evaluation_commutes_with_substitution() {
        let m = m2();
        let term = t("(x -> y) -> x");
        let s: Substitution = [("x".to_string(), t("y -> z")), ("y".to_string(), t("z"))].into_iter().collect();
        for y in 0..2 {
            for z in 0..2 {
                let a = assign(&[("y", y), ("z", z)]);
                let a2 = assign(&[("x", m.op(y, z)), ("y", z)]);
                assert_eq!(m.evaluate(&term.substitute(&s), &a), m.evaluate(&term, &a2));
            }
        }
    }

    #[test]
    fn display_table() {
        assert_eq!(m2().to_string(), "-> |  a  1\n a |  1  1\n 1 |  a  1\n");
    }
}
