//! Verifier and execution engine for invariant-based programs.
//!
//! Programs are invariant diagrams: situations (named predicates, nested for
//! inheritance) connected by transitions (guarded statement sequences). The
//! crate parses them, generates verification conditions by weakest
//! preconditions, discharges those through an external SMT solver, and runs
//! diagrams concretely with runtime invariant checking.

pub mod analysis;
pub mod diag;
pub mod dot;
pub mod frontend;
pub mod interp;
pub mod model;
pub mod parser;
pub mod prelude;
pub mod smt;
pub mod vcgen;
