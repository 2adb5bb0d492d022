//! Definedness conditions: array bounds, nonzero divisors, parameter domains
//! of theory functions and nonnegativity at `nat` binding sites.

use crate::model::{
    BinOp, Domain, Expr, ExprKind, Procedure, SemType, Statement, StmtKind, VerificationContext,
};
use crate::prelude::TheoryEnv;

use super::wp::{and_opt, conj_opt, implies_opt, Fresh};

pub struct Wd<'a> {
    pub env: &'a TheoryEnv,
    pub fresh: &'a mut Fresh,
}

fn is_nat(e: &Expr) -> bool {
    e.ty == Some(SemType::Nat) || matches!(e.kind, ExprKind::Int(v) if v >= 0)
}

fn nonneg(e: &Expr) -> Expr {
    Expr::bin(BinOp::Ge, e.clone(), Expr::int(0))
}

/// Membership obligation for an argument, omitting the lower bound when the
/// argument is statically `nat`.
fn domain_obligation(d: &Domain, arg: &Expr) -> Expr {
    let lower = || {
        if is_nat(arg) {
            Expr::tt()
        } else {
            Expr::bin(BinOp::Le, Expr::int(0), arg.clone())
        }
    };
    match d {
        Domain::Type(SemType::Nat) => lower(),
        Domain::Type(_) => Expr::tt(),
        Domain::Index(a) => and_opt(
            lower(),
            Expr::bin(BinOp::Lt, arg.clone(), Expr::len((**a).clone())),
        ),
        Domain::Upto(n) => and_opt(lower(), Expr::bin(BinOp::Le, arg.clone(), (**n).clone())),
        Domain::Below(n) => and_opt(lower(), Expr::bin(BinOp::Lt, arg.clone(), (**n).clone())),
    }
}

impl Wd<'_> {
    /// Condition under which `e` denotes a value.
    pub fn expr(&mut self, e: &Expr) -> Expr {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::Old(_) => {
                Expr::tt()
            }
            ExprKind::Unary(_, a) | ExprKind::Len(a) => self.expr(a),
            ExprKind::Binary(op, a, b) => {
                let wa = self.expr(a);
                let wb = self.expr(b);
                match op {
                    BinOp::And | BinOp::Implies => and_opt(wa, implies_opt((**a).clone(), wb)),
                    BinOp::Or => and_opt(wa, implies_opt(Expr::not((**a).clone()), wb)),
                    BinOp::Div => {
                        conj_opt([wa, wb, Expr::bin(BinOp::Ne, (**b).clone(), Expr::int(0))])
                    }
                    _ => and_opt(wa, wb),
                }
            }
            ExprKind::Ite(c, t, f) => {
                let wc = self.expr(c);
                let wt = self.expr(t);
                let wf = self.expr(f);
                conj_opt([
                    wc,
                    implies_opt((**c).clone(), wt),
                    implies_opt(Expr::not((**c).clone()), wf),
                ])
            }
            ExprKind::Quant(_, x, d, body) => {
                let wd = d.expr().map(|de| self.expr(de)).unwrap_or_else(Expr::tt);
                let inner = self.expr(body);
                if inner.is_true() {
                    return wd;
                }
                let y = self.fresh.binder(x, d.base_type());
                let inner = if &y == x {
                    inner
                } else {
                    inner.substitute_one(x, &Expr::var(y.clone()))
                };
                and_opt(wd, Expr::forall(y, d.clone(), inner))
            }
            ExprKind::Get(a, i) => {
                let parts = [
                    self.expr(a),
                    self.expr(i),
                    domain_obligation(&Domain::Index(a.clone()), i),
                ];
                conj_opt(parts)
            }
            ExprKind::Set(a, i, x) => {
                let parts = [
                    self.expr(a),
                    self.expr(i),
                    self.expr(x),
                    domain_obligation(&Domain::Index(a.clone()), i),
                ];
                conj_opt(parts)
            }
            ExprKind::App(f, args) => {
                let mut parts: Vec<Expr> = args.iter().map(|a| self.expr(a)).collect();
                if let Some(def) = self.env.func(f, args.len()) {
                    let bind = def
                        .params
                        .iter()
                        .map(|p| p.name.clone())
                        .zip(args.iter().cloned())
                        .collect();
                    for (p, a) in def.params.iter().zip(args) {
                        let d = match &p.domain {
                            Domain::Type(t) => Domain::Type(*t),
                            Domain::Index(x) => Domain::Index(Box::new(x.substitute(&bind))),
                            Domain::Upto(x) => Domain::Upto(Box::new(x.substitute(&bind))),
                            Domain::Below(x) => Domain::Below(Box::new(x.substitute(&bind))),
                        };
                        parts.push(domain_obligation(&d, a));
                    }
                }
                conj_opt(parts)
            }
        }
    }

    /// Condition under which the statement can be executed without a
    /// runtime fault (assertion failures excepted).
    pub fn statement(&mut self, st: &Statement, p: &Procedure, ctx: &VerificationContext) -> Expr {
        match &st.kind {
            StmtKind::Guard(g) | StmtKind::Assert(g) => self.expr(g),
            StmtKind::Assign(x, e) => {
                let w = self.expr(e);
                let nat = ctx.symbol_type(p, x) == Some(SemType::Nat) && !is_nat(e);
                and_opt(w, if nat { nonneg(e) } else { Expr::tt() })
            }
            StmtKind::Call(f, args) => {
                let mut parts: Vec<Expr> = args.iter().map(|a| self.expr(a)).collect();
                if let Some(callee) = ctx.procedure(f) {
                    for (prm, a) in callee.params.iter().zip(args) {
                        if prm.ty == SemType::Nat && !is_nat(a) {
                            parts.push(nonneg(a));
                        }
                    }
                }
                conj_opt(parts)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{infer, TypeScope};
    use crate::parser::parse_expr;
    use crate::prelude::builtin_theory;
    use std::collections::BTreeSet;

    fn wd_of(src: &str, vars: &[(&str, SemType)]) -> String {
        let env = builtin_theory();
        let mut e = parse_expr(src).unwrap();
        let mut s = TypeScope::new(&env);
        for (n, t) in vars {
            s.vars.insert(n.to_string(), *t);
        }
        infer(&mut e, &mut s, &mut Vec::new()).unwrap();
        let mut fresh = Fresh::new(BTreeSet::new());
        Wd {
            env: &env,
            fresh: &mut fresh,
        }
        .expr(&e)
        .to_string()
    }

    #[test]
    fn array_access_needs_bounds() {
        assert_eq!(
            wd_of("a[k] > 0", &[("a", SemType::Vector), ("k", SemType::Int)]),
            "0 <= k and k < len(a)"
        );
        assert_eq!(
            wd_of("a[k] > 0", &[("a", SemType::Vector), ("k", SemType::Nat)]),
            "k < len(a)"
        );
    }

    #[test]
    fn conjunction_guards_right_operand() {
        assert_eq!(
            wd_of(
                "k < len(a) and a[k] > 0",
                &[("a", SemType::Vector), ("k", SemType::Nat)]
            ),
            "k < len(a) => k < len(a)"
        );
    }

    #[test]
    fn division_needs_nonzero_divisor() {
        assert_eq!(
            wd_of("n / d", &[("n", SemType::Int), ("d", SemType::Int)]),
            "d /= 0"
        );
        assert_eq!(wd_of("n / 2", &[("n", SemType::Int)]), "2 /= 0");
    }

    #[test]
    fn function_domains_are_checked() {
        assert_eq!(
            wd_of(
                "swap(a, 0, k - 1)",
                &[("a", SemType::Vector), ("k", SemType::Nat)]
            ),
            "0 < len(a) and (0 <= k - 1 and k - 1 < len(a))"
        );
        assert_eq!(wd_of("l(k)", &[("k", SemType::Nat)]), "true");
    }

    #[test]
    fn quantified_body_obligations_are_universal() {
        assert_eq!(
            wd_of(
                "forall (i: nat): i < n => a[i] > 0",
                &[("a", SemType::Vector), ("n", SemType::Nat)]
            ),
            "forall (i: nat): i < n => i < len(a)"
        );
    }
}
