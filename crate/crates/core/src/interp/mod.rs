//! Executing procedures with every annotation checked at runtime.

mod audit;
mod eval;
mod lemmas;
mod run;

pub use audit::{audit_all, audit_vc, replay, AuditConfig, Replay, VcAudit};
pub use eval::{is_permutation, EvalError, EvalErrorKind, Evaluator, Scope};
pub use lemmas::{audit_theory, check_statement, Finding, LemmaReport, Universe};
pub use run::{
    parse_store, Interpreter, Limits, Policy, Step, Store, Trace, Violation, ViolationKind,
};
