//! Verification contexts, procedures, situations and transitions.

use std::collections::HashMap;

use serde::Serialize;

use super::expr::{Domain, Expr, ExprKind, Quantifier, SemType};
use crate::diag::SourceSpan;

pub type SitId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    Value,
    ValRes,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: SemType,
    pub mode: ParamMode,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Local {
    pub name: String,
    pub ty: SemType,
    pub span: SourceSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SituationKind {
    Pre,
    Intermediate,
    Post,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Situation {
    pub name: String,
    pub kind: SituationKind,
    pub invariants: Vec<Expr>,
    pub variant: Option<Expr>,
    pub parent: Option<SitId>,
    pub children: Vec<SitId>,
    pub span: SourceSpan,
    /// The `true` precondition supplied when a procedure declares none.
    pub implicit: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    /// `[b]`: blocks unless `b` holds.
    Guard(Expr),
    /// `{b}`: aborts unless `b` holds.
    Assert(Expr),
    Assign(String, Expr),
    Call(String, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

impl Statement {
    pub fn new(kind: StmtKind, span: SourceSpan) -> Self {
        Statement { kind, span }
    }

    pub fn guard(e: Expr) -> Self {
        let span = e.span.clone();
        Statement::new(StmtKind::Guard(e), span)
    }

    pub fn assert(e: Expr) -> Self {
        let span = e.span.clone();
        Statement::new(StmtKind::Assert(e), span)
    }

    pub fn assign(x: impl Into<String>, e: Expr) -> Self {
        let span = e.span.clone();
        Statement::new(StmtKind::Assign(x.into(), e), span)
    }

    /// Expressions read by the statement.
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Guard(e) | StmtKind::Assert(e) | StmtKind::Assign(_, e) => vec![e],
            StmtKind::Call(_, args) => args.iter().collect(),
        }
    }
}

/// A node of a branching transition as written: a statement prefix followed
/// by either a target or a choice between sub-branches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub stmts: Vec<Statement>,
    pub target: Option<SitId>,
    pub choices: Vec<Branch>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionBlock {
    pub source: SitId,
    pub tree: Branch,
    pub span: SourceSpan,
}

/// One linear path through a transition block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub source: SitId,
    pub target: SitId,
    pub body: Vec<Statement>,
    /// Index of the originating block within the procedure.
    pub block: usize,
    /// Index of the leaf within the block, in depth-first order.
    pub branch: usize,
    pub span: SourceSpan,
}

impl TransitionBlock {
    /// Linear transitions, one per leaf, each carrying the full statement path.
    pub fn desugar(&self, block: usize) -> Vec<Transition> {
        let mut out = Vec::new();
        fn go(
            b: &Branch,
            prefix: &mut Vec<Statement>,
            target: Option<SitId>,
            src: SitId,
            block: usize,
            out: &mut Vec<Transition>,
        ) {
            let n = prefix.len();
            prefix.extend(b.stmts.iter().cloned());
            let target = b.target.or(target);
            if b.choices.is_empty() {
                out.push(Transition {
                    source: src,
                    target: target.expect("leaf target is resolved by the parser"),
                    body: prefix.clone(),
                    block,
                    branch: out.len(),
                    span: b.span.clone(),
                });
            } else {
                for c in &b.choices {
                    go(c, prefix, target, src, block, out);
                }
            }
            prefix.truncate(n);
        }
        go(
            &self.tree,
            &mut Vec::new(),
            None,
            self.source,
            block,
            &mut out,
        );
        out
    }

    /// Every choice point: the statement path leading to it and its branches.
    pub fn forks(&self) -> Vec<(Vec<Statement>, &[Branch])> {
        let mut out = Vec::new();
        fn go<'a>(
            b: &'a Branch,
            prefix: &mut Vec<Statement>,
            out: &mut Vec<(Vec<Statement>, &'a [Branch])>,
        ) {
            let n = prefix.len();
            prefix.extend(b.stmts.iter().cloned());
            if !b.choices.is_empty() {
                out.push((prefix.clone(), &b.choices[..]));
                for c in &b.choices {
                    go(c, prefix, out);
                }
            }
            prefix.truncate(n);
        }
        go(&self.tree, &mut Vec::new(), &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub params: Vec<Param>,
    pub locals: Vec<Local>,
    pub situations: Vec<Situation>,
    pub pre: SitId,
    pub blocks: Vec<TransitionBlock>,
    pub transitions: Vec<Transition>,
    pub recursion_variant: Option<Expr>,
    pub span: SourceSpan,
}

impl Procedure {
    pub fn situation(&self, id: SitId) -> &Situation {
        &self.situations[id]
    }

    pub fn find_situation(&self, name: &str) -> Option<SitId> {
        self.situations.iter().position(|s| s.name == name)
    }

    pub fn posts(&self) -> impl Iterator<Item = SitId> + '_ {
        self.situations
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == SituationKind::Post)
            .map(|(i, _)| i)
    }

    /// `id` and its ancestors, outermost first.
    pub fn ancestry(&self, id: SitId) -> Vec<SitId> {
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(p) = self.situations[cur].parent {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        chain
    }

    pub fn is_ancestor_or_self(&self, anc: SitId, id: SitId) -> bool {
        self.ancestry(id).contains(&anc)
    }

    /// Own invariants of the situation and all its ancestors, outermost first.
    pub fn effective_invariant_conjuncts(&self, id: SitId) -> Vec<Expr> {
        self.ancestry(id)
            .into_iter()
            .flat_map(|s| self.situations[s].invariants.iter().cloned())
            .collect()
    }

    pub fn effective_invariant(&self, id: SitId) -> Expr {
        Expr::conj(self.effective_invariant_conjuncts(id))
    }

    pub fn outgoing_blocks(
        &self,
        id: SitId,
    ) -> impl Iterator<Item = (usize, &TransitionBlock)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.source == id)
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn valres_params(&self) -> impl Iterator<Item = &Param> + '_ {
        self.params.iter().filter(|p| p.mode == ParamMode::ValRes)
    }

    /// Declared type of a parameter or local.
    pub fn var_type(&self, name: &str) -> Option<SemType> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.ty)
            .or_else(|| self.locals.iter().find(|l| l.name == name).map(|l| l.ty))
    }

    /// Precondition of the procedure as a list of conjuncts (each invariant of
    /// the precondition situation, in order).
    pub fn pre_conjuncts(&self) -> Vec<Expr> {
        self.effective_invariant_conjuncts(self.pre)
    }

    /// Postcondition: one conjunct list per postcondition situation.
    pub fn post_alternatives(&self) -> Vec<Vec<Expr>> {
        self.posts()
            .map(|p| self.effective_invariant_conjuncts(p))
            .collect()
    }

    /// Substitutions describing a call `self(args)` observed from the caller.
    /// The returned maps instantiate the callee's precondition (entry state)
    /// and postcondition (exit state, with valres parameters bound to
    /// `results`).
    pub fn call_bindings(&self, args: &[Expr], results: &HashMap<String, Expr>) -> CallBindings {
        let mut pre_vars = HashMap::new();
        let mut post_vars = HashMap::new();
        let mut olds = HashMap::new();
        for (p, a) in self.params.iter().zip(args) {
            pre_vars.insert(p.name.clone(), a.clone());
            match p.mode {
                ParamMode::Value => {
                    post_vars.insert(p.name.clone(), a.clone());
                }
                ParamMode::ValRes => {
                    olds.insert(p.name.clone(), a.clone());
                    let r = results.get(&p.name).cloned().unwrap_or_else(|| a.clone());
                    post_vars.insert(p.name.clone(), r);
                }
            }
        }
        CallBindings {
            pre_vars,
            post_vars,
            olds,
        }
    }

    pub fn instantiate_pre(&self, args: &[Expr]) -> Vec<Expr> {
        let b = self.call_bindings(args, &HashMap::new());
        self.pre_conjuncts()
            .iter()
            .map(|e| e.subst(&b.pre_vars, &b.olds))
            .collect()
    }

    /// Instantiated postcondition: conjunct list when there is a single
    /// postcondition, otherwise a single disjunction.
    pub fn instantiate_post(&self, args: &[Expr], results: &HashMap<String, Expr>) -> Vec<Expr> {
        let b = self.call_bindings(args, results);
        let alts: Vec<Vec<Expr>> = self
            .post_alternatives()
            .into_iter()
            .map(|alt| alt.iter().map(|e| e.subst(&b.post_vars, &b.olds)).collect())
            .collect();
        if alts.len() == 1 {
            alts.into_iter().next().unwrap_or_default()
        } else {
            vec![Expr::disj(alts.into_iter().map(Expr::conj))]
        }
    }
}

pub struct CallBindings {
    pub pre_vars: HashMap<String, Expr>,
    pub post_vars: HashMap<String, Expr>,
    pub olds: HashMap<String, Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constant {
    pub name: String,
    pub ty: SemType,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationContext {
    pub name: String,
    pub constants: Vec<Constant>,
    pub imports: Vec<(String, SourceSpan)>,
    pub strategy: Vec<(String, SourceSpan)>,
    pub procedures: Vec<Procedure>,
    pub span: SourceSpan,
}

impl VerificationContext {
    pub fn procedure(&self, name: &str) -> Option<&Procedure> {
        self.procedures.iter().find(|p| p.name == name)
    }

    pub fn constant_type(&self, name: &str) -> Option<SemType> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.ty)
    }

    /// Type of a symbol visible inside procedure `p`.
    pub fn symbol_type(&self, p: &Procedure, name: &str) -> Option<SemType> {
        p.var_type(name).or_else(|| self.constant_type(name))
    }
}

/// `not wp(body)(false)` with asserts and calls treated as non-blocking: the
/// transition can be taken unless a guard fails. A call followed by guards
/// contributes the existence of a result satisfying the callee postcondition.
pub fn enabledness(body: &[Statement], ctx: &VerificationContext) -> Expr {
    let Some((first, rest)) = body.split_first() else {
        return Expr::tt();
    };
    let r = enabledness(rest, ctx);
    match &first.kind {
        StmtKind::Guard(g) => {
            if r.is_true() {
                g.clone()
            } else {
                Expr::and(g.clone(), r)
            }
        }
        StmtKind::Assert(_) => r,
        StmtKind::Assign(x, e) => r.substitute_one(x, e),
        StmtKind::Call(f, args) => {
            if r.is_true() {
                return r;
            }
            let Some(callee) = ctx.procedure(f) else {
                return r;
            };
            let mut results = HashMap::new();
            let mut binders = Vec::new();
            let avoid = r.free_vars();
            for (p, a) in callee.params.iter().zip(args) {
                if p.mode == ParamMode::ValRes {
                    if let ExprKind::Var(x) = &a.kind {
                        let fresh = super::expr::fresh_name(&format!("{x}_res"), &avoid);
                        results.insert(p.name.clone(), Expr::var(fresh.clone()));
                        binders.push((x.clone(), fresh, p.ty));
                    }
                }
            }
            let post = Expr::conj(callee.instantiate_post(args, &results));
            let mut m = HashMap::new();
            for (x, fresh, _) in &binders {
                m.insert(x.clone(), Expr::var(fresh.clone()));
            }
            let body = Expr::and(post, r.substitute(&m));
            binders.into_iter().rev().fold(body, |acc, (_, fresh, ty)| {
                Expr::synth(ExprKind::Quant(
                    Quantifier::Exists,
                    fresh,
                    Domain::Type(ty),
                    Box::new(acc),
                ))
            })
        }
    }
}

/// Enabledness of the statements before the first choice of a branch, with
/// the choice itself treated as always enabled.
pub fn head_enabledness(b: &Branch, ctx: &VerificationContext) -> Expr {
    enabledness(&b.stmts, ctx)
}

/// Disjunction of the head enabledness of every block leaving `sit`. Returns
/// `true` when some block is unguarded.
pub fn enabled_disjunction(p: &Procedure, sit: SitId, ctx: &VerificationContext) -> Expr {
    let heads: Vec<Expr> = p
        .outgoing_blocks(sit)
        .map(|(_, b)| head_enabledness(&b.tree, ctx))
        .collect();
    if heads.iter().any(Expr::is_true) {
        return Expr::tt();
    }
    Expr::disj(heads)
}
