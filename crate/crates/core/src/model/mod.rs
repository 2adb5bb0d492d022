//! In-memory representation of verification contexts, procedures, invariant
//! diagrams and expressions.

pub mod expr;
pub mod pretty;
pub mod program;
pub mod value;

pub use expr::{floor_div, fresh_name, BinOp, Domain, Expr, ExprKind, Quantifier, SemType, UnOp};
pub use program::*;
pub use value::Value;
