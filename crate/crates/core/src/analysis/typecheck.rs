//! Type checking of contexts and theories. Annotates every expression node
//! with its type.

use std::collections::HashMap;

use crate::diag::{Diagnostic, SourceSpan};
use crate::model::{
    BinOp, Domain, Expr, ExprKind, ParamMode, Procedure, SemType, StmtKind, UnOp,
    VerificationContext,
};
use crate::prelude::{FParam, TheoryEnv};

/// Variable typing for one expression scope.
pub struct TypeScope<'a> {
    pub vars: HashMap<String, SemType>,
    /// Types of value-result parameters, for `Old` references.
    pub olds: HashMap<String, SemType>,
    pub env: &'a TheoryEnv,
    /// Theory parameters may range over vectors; quantifiers may not.
    allow_vector_binders: bool,
}

impl<'a> TypeScope<'a> {
    pub fn new(env: &'a TheoryEnv) -> Self {
        TypeScope {
            vars: HashMap::new(),
            olds: HashMap::new(),
            env,
            allow_vector_binders: false,
        }
    }

    pub fn for_procedure(ctx: &VerificationContext, p: &Procedure, env: &'a TheoryEnv) -> Self {
        let mut s = TypeScope::new(env);
        for c in &ctx.constants {
            s.vars.insert(c.name.clone(), c.ty);
        }
        for prm in &p.params {
            s.vars.insert(prm.name.clone(), prm.ty);
            if prm.mode == ParamMode::ValRes {
                s.olds.insert(prm.name.clone(), prm.ty);
            }
        }
        for l in &p.locals {
            s.vars.insert(l.name.clone(), l.ty);
        }
        s
    }

    pub fn for_params(params: &[FParam], env: &'a TheoryEnv) -> Self {
        let mut s = TypeScope::new(env);
        for p in params {
            s.vars.insert(p.name.clone(), p.domain.base_type());
        }
        s
    }
}

fn mismatch(expected: &str, found: SemType, span: &SourceSpan) -> Diagnostic {
    Diagnostic::error(
        "TYPE001",
        format!("expected {expected}, found {found}"),
        span.clone(),
    )
}

/// Infers and records the type of `e`. Returns `None` after reporting an error.
pub fn infer(e: &mut Expr, scope: &mut TypeScope, diags: &mut Vec<Diagnostic>) -> Option<SemType> {
    let ty = infer_kind(e, scope, diags)?;
    e.ty = Some(ty);
    Some(ty)
}

fn expect(
    e: &mut Expr,
    want: SemType,
    scope: &mut TypeScope,
    diags: &mut Vec<Diagnostic>,
) -> Option<SemType> {
    let t = infer(e, scope, diags)?;
    if t.compatible(want) {
        Some(t)
    } else {
        diags.push(mismatch(want.keyword(), t, &e.span));
        None
    }
}

fn numeric(e: &mut Expr, scope: &mut TypeScope, diags: &mut Vec<Diagnostic>) -> Option<SemType> {
    expect(e, SemType::Int, scope, diags)
}

fn check_domain(
    d: &mut Domain,
    span: &SourceSpan,
    scope: &mut TypeScope,
    diags: &mut Vec<Diagnostic>,
) -> Option<()> {
    match d {
        Domain::Type(SemType::Vector) if !scope.allow_vector_binders => {
            diags.push(Diagnostic::error(
                "TYPE002",
                "quantification over vectors is not supported",
                span.clone(),
            ));
            None
        }
        Domain::Type(_) => Some(()),
        Domain::Index(a) => expect(a, SemType::Vector, scope, diags).map(|_| ()),
        Domain::Upto(n) | Domain::Below(n) => numeric(n, scope, diags).map(|_| ()),
    }
}

fn infer_kind(e: &mut Expr, scope: &mut TypeScope, diags: &mut Vec<Diagnostic>) -> Option<SemType> {
    let span = e.span.clone();
    match &mut e.kind {
        ExprKind::Int(v) => Some(if *v >= 0 { SemType::Nat } else { SemType::Int }),
        ExprKind::Bool(_) => Some(SemType::Bool),
        ExprKind::Var(x) => match scope.vars.get(x.as_str()) {
            Some(t) => Some(*t),
            None => {
                diags.push(Diagnostic::error(
                    "RESOLVE003",
                    format!("unknown variable `{x}`"),
                    span,
                ));
                None
            }
        },
        ExprKind::Old(x) => match scope.olds.get(x.as_str()) {
            Some(t) => Some(*t),
            None => {
                diags.push(Diagnostic::error(
                    "RESOLVE015",
                    format!("`{x}_0` has no entry value here"),
                    span,
                ));
                None
            }
        },
        ExprKind::Unary(UnOp::Neg, a) => numeric(a, scope, diags).map(|_| SemType::Int),
        ExprKind::Unary(UnOp::Not, a) => expect(a, SemType::Bool, scope, diags),
        ExprKind::Binary(op, a, b) => {
            let op = *op;
            if op.is_logical() {
                let ta = expect(a, SemType::Bool, scope, diags);
                let tb = expect(b, SemType::Bool, scope, diags);
                return ta.and(tb);
            }
            if matches!(op, BinOp::Eq | BinOp::Ne) {
                let ta = infer(a, scope, diags)?;
                let tb = infer(b, scope, diags)?;
                if !ta.compatible(tb) {
                    diags.push(Diagnostic::error(
                        "TYPE001",
                        format!("cannot compare {ta} with {tb}"),
                        span,
                    ));
                    return None;
                }
                return Some(SemType::Bool);
            }
            let ta = numeric(a, scope, diags);
            let tb = numeric(b, scope, diags);
            let (ta, tb) = (ta?, tb?);
            let both_nat = ta == SemType::Nat && tb == SemType::Nat;
            Some(match op {
                _ if op.is_comparison() => SemType::Bool,
                BinOp::Add | BinOp::Mul | BinOp::Div if both_nat => SemType::Nat,
                _ => SemType::Int,
            })
        }
        ExprKind::Ite(c, t, f) => {
            let tc = expect(c, SemType::Bool, scope, diags);
            let tt = infer(t, scope, diags);
            let tf = infer(f, scope, diags);
            let (_, tt, tf) = (tc?, tt?, tf?);
            if !tt.compatible(tf) {
                diags.push(Diagnostic::error(
                    "TYPE001",
                    format!("branches have types {tt} and {tf}"),
                    span,
                ));
                return None;
            }
            Some(if tt == tf { tt } else { SemType::Int })
        }
        ExprKind::Quant(_, x, d, body) => {
            check_domain(d, &span, scope, diags)?;
            let prev = scope.vars.insert(x.clone(), d.base_type());
            let r = expect(body, SemType::Bool, scope, diags);
            match prev {
                Some(t) => scope.vars.insert(x.clone(), t),
                None => scope.vars.remove(x.as_str()),
            };
            r
        }
        ExprKind::Len(a) => expect(a, SemType::Vector, scope, diags).map(|_| SemType::Nat),
        ExprKind::Get(a, i) => {
            let ta = expect(a, SemType::Vector, scope, diags);
            let ti = numeric(i, scope, diags);
            ta.and(ti).map(|_| SemType::Int)
        }
        ExprKind::Set(a, i, x) => {
            let ta = expect(a, SemType::Vector, scope, diags);
            let ti = numeric(i, scope, diags);
            let tx = numeric(x, scope, diags);
            ta.and(ti).and(tx).map(|_| SemType::Vector)
        }
        ExprKind::App(f, args) => {
            let f = f.clone();
            let arg_types: Vec<Option<SemType>> =
                args.iter_mut().map(|a| infer(a, scope, diags)).collect();
            let env = scope.env;
            let Some(def) = env.func(&f, args.len()) else {
                if env.has_func_name(&f) {
                    diags.push(Diagnostic::error(
                        "TYPE003",
                        format!("no definition of `{f}` takes {} arguments", args.len()),
                        span,
                    ));
                } else {
                    diags.push(Diagnostic::error(
                        "RESOLVE003",
                        format!("unknown function `{f}`"),
                        span,
                    ));
                }
                return None;
            };
            let mut ok = true;
            for ((a, t), p) in args.iter().zip(arg_types).zip(&def.params) {
                match t {
                    Some(t) if t.compatible(p.domain.base_type()) => {}
                    Some(t) => {
                        diags.push(mismatch(p.domain.base_type().keyword(), t, &a.span));
                        ok = false;
                    }
                    None => ok = false,
                }
            }
            ok.then_some(def.result)
        }
    }
}

/// Type checks every expression and statement in the context, annotating
/// nodes in place.
pub fn typecheck(ctx: &mut VerificationContext, env: &TheoryEnv) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let signatures: HashMap<String, Vec<(SemType, ParamMode)>> = ctx
        .procedures
        .iter()
        .map(|p| {
            (
                p.name.clone(),
                p.params.iter().map(|q| (q.ty, q.mode)).collect(),
            )
        })
        .collect();
    let snapshot = ctx.clone();
    for p in ctx.procedures.iter_mut() {
        let mut scope = TypeScope::for_procedure(&snapshot, p, env);
        for s in p.situations.iter_mut() {
            for inv in s.invariants.iter_mut() {
                expect(inv, SemType::Bool, &mut scope, &mut diags);
            }
            if let Some(v) = s.variant.as_mut() {
                numeric(v, &mut scope, &mut diags);
            }
        }
        if let Some(v) = p.recursion_variant.as_mut() {
            numeric(v, &mut scope, &mut diags);
        }
        let mut check_stmts = |stmts: &mut Vec<crate::model::Statement>,
                               diags: &mut Vec<Diagnostic>| {
            for st in stmts.iter_mut() {
                match &mut st.kind {
                    StmtKind::Guard(e) | StmtKind::Assert(e) => {
                        expect(e, SemType::Bool, &mut scope, diags);
                    }
                    StmtKind::Assign(x, e) => {
                        let want = scope.vars.get(x.as_str()).copied().unwrap_or(SemType::Int);
                        expect(e, want, &mut scope, diags);
                    }
                    StmtKind::Call(f, args) => {
                        let params = signatures.get(f.as_str()).cloned().unwrap_or_default();
                        for (a, (t, _)) in args.iter_mut().zip(params) {
                            expect(a, t, &mut scope, diags);
                        }
                    }
                }
            }
        };
        for b in p.blocks.iter_mut() {
            let mut stack = vec![&mut b.tree];
            while let Some(br) = stack.pop() {
                check_stmts(&mut br.stmts, &mut diags);
                stack.extend(br.choices.iter_mut());
            }
        }
        p.transitions = p
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.desugar(i))
            .collect();
    }
    diags
}

/// Type checks definition bodies, `ensures` clauses, lemma statements and
/// trigger terms of a theory environment.
pub fn typecheck_theory(env: &mut TheoryEnv) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let snapshot = env.clone();
    for f in env.funcs.iter_mut() {
        let mut scope = TypeScope::for_params(&f.params, &snapshot);
        scope.allow_vector_binders = true;
        for p in f.params.iter_mut() {
            let span = p.span.clone();
            check_domain(&mut p.domain, &span, &mut scope, &mut diags);
        }
        scope.allow_vector_binders = false;
        if let Some(b) = f.body.as_mut() {
            expect(b, f.result, &mut scope, &mut diags);
        }
        if let Some(en) = f.ensures.as_mut() {
            scope.vars.insert("result".into(), f.result);
            expect(en, SemType::Bool, &mut scope, &mut diags);
        }
    }
    for l in env.lemmas.iter_mut() {
        let mut scope = TypeScope::for_params(&l.params, &snapshot);
        scope.allow_vector_binders = true;
        for p in l.params.iter_mut() {
            let span = p.span.clone();
            check_domain(&mut p.domain, &span, &mut scope, &mut diags);
        }
        scope.allow_vector_binders = false;
        expect(&mut l.statement, SemType::Bool, &mut scope, &mut diags);
        for pattern in l.triggers.iter_mut() {
            for t in pattern.iter_mut() {
                infer(t, &mut scope, &mut diags);
            }
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_context, parse_expr};
    use crate::prelude::builtin_theory;

    fn scope_with<'a>(env: &'a TheoryEnv, vars: &[(&str, SemType)]) -> TypeScope<'a> {
        let mut s = TypeScope::new(env);
        for (n, t) in vars {
            s.vars.insert(n.to_string(), *t);
        }
        s
    }

    fn ty(src: &str, vars: &[(&str, SemType)]) -> Result<SemType, Vec<&'static str>> {
        let env = builtin_theory();
        let mut e = parse_expr(src).unwrap();
        let mut d = Vec::new();
        let mut s = scope_with(&env, vars);
        infer(&mut e, &mut s, &mut d).ok_or_else(|| d.iter().map(|x| x.code).collect())
    }

    #[test]
    fn floor_of_half_length_is_numeric() {
        assert_eq!(
            ty("floor(len(a) / 2)", &[("a", SemType::Vector)]),
            Ok(SemType::Int)
        );
        assert_eq!(
            ty("len(a) / 2", &[("a", SemType::Vector)]),
            Ok(SemType::Nat)
        );
    }

    #[test]
    fn perm_is_boolean() {
        assert_eq!(
            ty(
                "perm(a, b)",
                &[("a", SemType::Vector), ("b", SemType::Vector)]
            ),
            Ok(SemType::Bool)
        );
    }

    #[test]
    fn vector_arithmetic_is_rejected() {
        assert_eq!(ty("a + 1", &[("a", SemType::Vector)]), Err(vec!["TYPE001"]));
        assert_eq!(
            ty("a < b", &[("a", SemType::Vector), ("b", SemType::Vector)]),
            Err(vec!["TYPE001", "TYPE001"])
        );
    }

    #[test]
    fn unknown_function_and_wrong_arity() {
        assert_eq!(ty("frob(1)", &[]), Err(vec!["RESOLVE003"]));
        assert_eq!(
            ty("heap(a)", &[("a", SemType::Vector)]),
            Err(vec!["TYPE003"])
        );
    }

    #[test]
    fn annotations_are_recorded() {
        let env = builtin_theory();
        let mut e = parse_expr("forall (i: index(a)): a[i] <= k").unwrap();
        let mut s = scope_with(&env, &[("a", SemType::Vector), ("k", SemType::Nat)]);
        infer(&mut e, &mut s, &mut Vec::new()).unwrap();
        let mut all = true;
        e.walk(&mut |n| all &= n.ty.is_some());
        assert!(all);
    }

    #[test]
    fn assignment_type_mismatch_in_program() {
        let mut ctx = parse_context(
            "context c { procedure p(valres a: vector) { post { true } transition to Post { a := a + 1; } } }",
            "t.ibp",
        )
        .unwrap();
        let d = typecheck(&mut ctx, &builtin_theory());
        assert_eq!(d.iter().map(|x| x.code).collect::<Vec<_>>(), ["TYPE001"]);
    }

    #[test]
    fn builtin_theory_typechecks() {
        let mut env = builtin_theory();
        let d = typecheck_theory(&mut env);
        assert!(d.is_empty(), "{d:?}");
    }
}
