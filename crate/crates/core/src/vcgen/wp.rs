//! Weakest preconditions of statement sequences.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{
    fresh_name, Domain, Expr, ExprKind, ParamMode, SemType, Statement, StmtKind,
    VerificationContext,
};

/// Generator of names that clash with nothing in the context or theory.
/// Every name handed out is remembered with its type, so the sequent
/// splitter knows which universal binders it may turn into constants.
#[derive(Clone, Debug)]
pub struct Fresh {
    avoid: BTreeSet<String>,
    pub introduced: BTreeMap<String, SemType>,
}

impl Fresh {
    pub fn new(avoid: BTreeSet<String>) -> Self {
        Fresh {
            avoid,
            introduced: BTreeMap::new(),
        }
    }

    pub fn name(&mut self, base: &str, ty: SemType) -> String {
        let n = fresh_name(base, &self.avoid);
        self.avoid.insert(n.clone());
        self.introduced.insert(n.clone(), ty);
        n
    }

    /// Like `name`, but keeps `base` itself when it is still unused.
    pub fn binder(&mut self, base: &str, ty: SemType) -> String {
        let n = if self.avoid.contains(base) {
            fresh_name(base, &self.avoid)
        } else {
            base.to_string()
        };
        self.avoid.insert(n.clone());
        self.introduced.insert(n.clone(), ty);
        n
    }
}

pub(crate) fn and_opt(a: Expr, b: Expr) -> Expr {
    if a.is_true() {
        b
    } else if b.is_true() {
        a
    } else {
        Expr::and(a, b)
    }
}

pub(crate) fn implies_opt(a: Expr, b: Expr) -> Expr {
    if a.is_true() || b.is_true() {
        b
    } else {
        Expr::implies(a, b)
    }
}

/// Conjunction of the non-trivial items.
pub(crate) fn conj_opt(items: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::conj(items.into_iter().filter(|e| !e.is_true()))
}

/// `wp(body)(post)`. Asserts are obligations; with `assuming` they become
/// assumptions, as do callee preconditions.
pub fn wp(
    body: &[Statement],
    post: Expr,
    ctx: &VerificationContext,
    fresh: &mut Fresh,
    assuming: bool,
) -> Expr {
    body.iter()
        .rev()
        .fold(post, |q, st| wp_stmt(st, q, ctx, fresh, assuming))
}

fn wp_stmt(
    st: &Statement,
    q: Expr,
    ctx: &VerificationContext,
    fresh: &mut Fresh,
    assuming: bool,
) -> Expr {
    match &st.kind {
        StmtKind::Guard(g) => implies_opt(g.clone(), q),
        StmtKind::Assert(b) if assuming => implies_opt(b.clone(), q),
        StmtKind::Assert(b) => and_opt(b.clone(), q),
        StmtKind::Assign(x, e) => q.substitute_one(x, e),
        StmtKind::Call(f, args) => {
            let Some(callee) = ctx.procedure(f) else {
                return q;
            };
            let mut results = HashMap::new();
            let mut renames = HashMap::new();
            let mut binders = Vec::new();
            for (p, a) in callee.params.iter().zip(args) {
                if p.mode != ParamMode::ValRes {
                    continue;
                }
                if let ExprKind::Var(x) = &a.kind {
                    let r = fresh.name(x, p.ty);
                    results.insert(p.name.clone(), Expr::var(r.clone()));
                    renames.insert(x.clone(), Expr::var(r.clone()));
                    binders.push((r, p.ty));
                }
            }
            let post = conj_opt(callee.instantiate_post(args, &results));
            let body = implies_opt(post, q.substitute(&renames));
            let quantified = binders.into_iter().rev().fold(body, |acc, (r, ty)| {
                if acc.is_true() {
                    acc
                } else {
                    Expr::forall(r, Domain::Type(ty), acc)
                }
            });
            let pre = conj_opt(callee.instantiate_pre(args));
            if assuming {
                implies_opt(pre, quantified)
            } else {
                and_opt(pre, quantified)
            }
        }
    }
}
