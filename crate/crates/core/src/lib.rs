//! Equational proof kernel and finite-model toolkit for implicative aBE
//! algebras, i.e. algebras `(X, ->, 1)` with
//!
//! ```text
//! 1 -> x = x          x -> 1 = 1          x -> x = 1
//! x -> (y -> z) = y -> (x -> z)
//! x -> y = 1 & y -> x = 1  =>  x = y
//! (x -> y) -> x = x
//! ```
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel enumeration live in the `abeforge` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpus;
pub mod enumerate;
pub mod kernel;
pub mod model;
pub mod statement;
pub mod term;

pub use kernel::{
    replay_all, replay_proof, verify_rewrite, CheckError, Direction, Environment, Justification, ProofScript,
    ProofStep, ReplayError, ReplayReport, Rewrite, ScriptStatus, VerifiedStatement,
};

pub use model::{Assignment, FiniteAlgebra, ModelError, Witness};
pub use statement::{AxiomSystem, Equation, Literal, Polarity, Statement, StatementKind};
pub use term::{format_term, parse_term, parse_term_with, Position, Side, Substitution, Term, TermError};
