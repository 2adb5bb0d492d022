//! Sequents and the splitter that breaks a proof obligation into
//! single-goal leaves.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::diag::SourceSpan;
use crate::model::{floor_div, BinOp, Expr, ExprKind, Quantifier, SemType, UnOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VcKind {
    Consistency,
    Liveness,
    Termination,
    Safety,
    Recursion,
}

impl VcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VcKind::Consistency => "consistency",
            VcKind::Liveness => "liveness",
            VcKind::Termination => "termination",
            VcKind::Safety => "safety",
            VcKind::Recursion => "recursion",
        }
    }
}

impl fmt::Display for VcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A verification condition: the hypotheses entail the goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vc {
    pub id: String,
    pub kind: VcKind,
    pub procedure: String,
    pub situation: String,
    /// In display order: `[-1]` first.
    pub hypotheses: Vec<Expr>,
    pub goal: Expr,
    pub span: SourceSpan,
    /// Types of every free variable of the sequent.
    pub symbols: BTreeMap<String, SemType>,
    /// Types of the entry values referenced through `Old`.
    pub olds: BTreeMap<String, SemType>,
}

impl Vc {
    /// The whole sequent as one implication.
    pub fn formula(&self) -> Expr {
        let hyps: Vec<Expr> = self.hypotheses.iter().rev().cloned().collect();
        if hyps.is_empty() {
            self.goal.clone()
        } else {
            Expr::implies(Expr::conj(hyps), self.goal.clone())
        }
    }
}

impl fmt::Display for Vc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({})", self.id, self.span)?;
        for (i, h) in self.hypotheses.iter().enumerate() {
            let tag = format!("[-{}]", i + 1);
            writeln!(f, "{tag:<6}{h}")?;
        }
        writeln!(f, "  |-------")?;
        writeln!(f, "{:<6}{}", "[1]", self.goal)
    }
}

/// A goal with its hypotheses, grouped by the point where they were assumed
/// (oldest group first).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Leaf {
    pub groups: Vec<Vec<Expr>>,
    pub goal: Expr,
}

impl Leaf {
    /// Hypotheses in display order: newest group first, each group in the
    /// order it was written.
    pub fn hypotheses(&self) -> Vec<Expr> {
        self.groups
            .iter()
            .rev()
            .flat_map(|g| g.iter().cloned())
            .collect()
    }
}

fn flat_conjuncts(e: &Expr) -> Vec<Expr> {
    e.conjuncts()
        .into_iter()
        .filter(|c| !c.is_true())
        .cloned()
        .collect()
}

/// Splits `goal` under the hypothesis groups `base` into leaves:
/// conjunctions yield one leaf per conjunct (earlier conjuncts become
/// hypotheses of later ones), implications move their antecedent into the
/// hypotheses, and universal binders named in `skolem` become constants.
pub fn split(goal: &Expr, base: Vec<Vec<Expr>>, skolem: &BTreeMap<String, SemType>) -> Vec<Leaf> {
    let mut out = Vec::new();
    let mut stack = base;
    go(goal, &mut stack, skolem, &mut out);
    out
}

fn go(
    e: &Expr,
    stack: &mut Vec<Vec<Expr>>,
    skolem: &BTreeMap<String, SemType>,
    out: &mut Vec<Leaf>,
) {
    match &e.kind {
        ExprKind::Bool(true) => {}
        ExprKind::Binary(BinOp::And, a, b) => {
            go(a, stack, skolem, out);
            stack.push(flat_conjuncts(a));
            go(b, stack, skolem, out);
            stack.pop();
        }
        ExprKind::Binary(BinOp::Implies, a, b) => {
            stack.push(flat_conjuncts(a));
            go(b, stack, skolem, out);
            stack.pop();
        }
        ExprKind::Quant(Quantifier::Forall, x, d, body) if skolem.contains_key(x) => {
            let c = d.constraint(&Expr::var(x.clone()));
            stack.push(c.map(|c| flat_conjuncts(&c)).unwrap_or_default());
            go(body, stack, skolem, out);
            stack.pop();
        }
        _ => out.push(Leaf {
            groups: stack.iter().filter(|g| !g.is_empty()).cloned().collect(),
            goal: e.clone(),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Val {
    I(i64),
    B(bool),
}

/// Value of a variable-free, function-free formula.
fn ground_value(e: &Expr) -> Option<Val> {
    use Val::*;
    Some(match &e.kind {
        ExprKind::Int(v) => I(*v),
        ExprKind::Bool(b) => B(*b),
        ExprKind::Unary(UnOp::Neg, a) => match ground_value(a)? {
            I(v) => I(v.checked_neg()?),
            _ => return None,
        },
        ExprKind::Unary(UnOp::Not, a) => match ground_value(a)? {
            B(v) => B(!v),
            _ => return None,
        },
        ExprKind::Binary(op, a, b) => {
            let (x, y) = (ground_value(a)?, ground_value(b)?);
            match (x, y) {
                (I(x), I(y)) => match op {
                    BinOp::Add => I(x.checked_add(y)?),
                    BinOp::Sub => I(x.checked_sub(y)?),
                    BinOp::Mul => I(x.checked_mul(y)?),
                    BinOp::Div => I(floor_div(x, y)?),
                    BinOp::Eq => B(x == y),
                    BinOp::Ne => B(x != y),
                    BinOp::Lt => B(x < y),
                    BinOp::Le => B(x <= y),
                    BinOp::Gt => B(x > y),
                    BinOp::Ge => B(x >= y),
                    _ => return None,
                },
                (B(x), B(y)) => match op {
                    BinOp::And => B(x && y),
                    BinOp::Or => B(x || y),
                    BinOp::Implies => B(!x || y),
                    BinOp::Iff | BinOp::Eq => B(x == y),
                    BinOp::Ne => B(x != y),
                    _ => return None,
                },
                _ => return None,
            }
        }
        _ => return None,
    })
}

/// Goals that hold without looking at the hypotheses.
pub fn trivially_true(goal: &Expr) -> bool {
    ground_value(goal) == Some(Val::B(true))
}
