//! Verification condition generation.

mod safety;
mod sequent;
mod wp;

pub use safety::Wd;
pub use sequent::{split, trivially_true, Leaf, Vc, VcKind};
pub use wp::{wp, Fresh};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::analysis::{Analysis, TermObligation};
use crate::diag::SourceSpan;
use crate::model::{
    enabled_disjunction, head_enabledness, BinOp, Expr, ExprKind, ParamMode, Procedure, SitId,
    Statement, StmtKind, Transition, VerificationContext,
};
use crate::prelude::TheoryEnv;

use wp::{and_opt, conj_opt};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenOptions {
    pub liveness: bool,
    pub termination: bool,
    pub safety: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            liveness: true,
            termination: true,
            safety: true,
        }
    }
}

/// Every identifier used anywhere in the context or theory.
pub fn used_names(ctx: &VerificationContext, env: &TheoryEnv) -> BTreeSet<String> {
    let mut out = env.symbol_names();
    let add_expr = |e: &Expr, out: &mut BTreeSet<String>| {
        e.walk(&mut |n| match &n.kind {
            ExprKind::Var(x) | ExprKind::Old(x) | ExprKind::Quant(_, x, _, _) => {
                out.insert(x.clone());
            }
            _ => {}
        })
    };
    for c in &ctx.constants {
        out.insert(c.name.clone());
    }
    for p in &ctx.procedures {
        out.insert(p.name.clone());
        out.extend(p.params.iter().map(|x| x.name.clone()));
        out.extend(p.locals.iter().map(|x| x.name.clone()));
        for s in &p.situations {
            for e in s.invariants.iter().chain(&s.variant) {
                add_expr(e, &mut out);
            }
        }
        if let Some(e) = &p.recursion_variant {
            add_expr(e, &mut out);
        }
        for t in &p.transitions {
            for st in &t.body {
                for e in st.exprs() {
                    add_expr(e, &mut out);
                }
            }
        }
    }
    for f in &env.funcs {
        out.extend(f.params.iter().map(|p| p.name.clone()));
    }
    out
}

fn placeholder(s: SitId) -> String {
    format!("variant@{s}")
}

struct ProcGen<'a> {
    ctx: &'a VerificationContext,
    env: &'a TheoryEnv,
    p: &'a Procedure,
    avoid: &'a BTreeSet<String>,
    opts: GenOptions,
    out: Vec<Vc>,
}

impl<'a> ProcGen<'a> {
    fn fresh(&self) -> Fresh {
        Fresh::new(self.avoid.clone())
    }

    fn at_entry(&self, sit: SitId, e: &Expr) -> Expr {
        if sit != self.p.pre {
            return e.clone();
        }
        let olds: HashMap<String, Expr> = self
            .p
            .valres_params()
            .map(|x| (x.name.clone(), Expr::var(x.name.clone())))
            .collect();
        e.substitute_old(&olds)
    }

    fn inv_group(&self, sit: SitId) -> Vec<Expr> {
        self.p
            .effective_invariant_conjuncts(sit)
            .iter()
            .filter(|e| !e.is_true())
            .map(|e| self.at_entry(sit, e))
            .collect()
    }

    fn leaves(&self, sit: SitId, formula: &Expr, base: &[Vec<Expr>], fresh: &Fresh) -> Vec<Leaf> {
        let f = self.at_entry(sit, formula);
        split(&f, base.to_vec(), &fresh.introduced)
    }

    fn make(
        &self,
        id: String,
        kind: VcKind,
        sit: SitId,
        leaf: Leaf,
        span: SourceSpan,
        fresh: &Fresh,
    ) -> Vc {
        let hypotheses = leaf.hypotheses();
        let goal = leaf.goal;
        let mut symbols = BTreeMap::new();
        let mut olds = BTreeMap::new();
        for e in hypotheses.iter().chain(std::iter::once(&goal)) {
            for x in e.free_vars() {
                let ty = fresh
                    .introduced
                    .get(&x)
                    .copied()
                    .or_else(|| self.ctx.symbol_type(self.p, &x));
                if let Some(ty) = ty {
                    symbols.insert(x, ty);
                }
            }
            for x in e.olds() {
                if let Some(prm) = self.p.param(&x) {
                    olds.insert(x, prm.ty);
                }
            }
        }
        Vc {
            id,
            kind,
            procedure: self.p.name.clone(),
            situation: self.p.situation(sit).name.clone(),
            hypotheses,
            goal,
            span,
            symbols,
            olds,
        }
    }

    fn sit_prefix(&self, sit: SitId) -> String {
        format!("{}/{}", self.p.name, self.p.situation(sit).name)
    }

    fn invariant_safety(&mut self, sit: SitId) {
        let s = self.p.situation(sit);
        let mut base = match s.parent {
            Some(par) => vec![self.inv_group(par)],
            None => vec![],
        };
        let mut n = 0;
        let mut fresh = self.fresh();
        for (j, inv) in s.invariants.iter().enumerate() {
            let w = Wd {
                env: self.env,
                fresh: &mut fresh,
            }
            .expr(inv);
            let own: Vec<Expr> = s.invariants[..j]
                .iter()
                .map(|e| self.at_entry(sit, e))
                .collect();
            let mut groups = base.clone();
            groups.push(own);
            for leaf in self.leaves(sit, &w, &groups, &fresh) {
                if trivially_true(&leaf.goal) {
                    continue;
                }
                n += 1;
                let id = format!("{}/inv/goal{n}/safety", self.sit_prefix(sit));
                let vc = self.make(id, VcKind::Safety, sit, leaf, inv.span.clone(), &fresh);
                self.out.push(vc);
            }
        }
        if let Some(v) = &s.variant {
            base.push(self.inv_group(sit));
            let w = Wd {
                env: self.env,
                fresh: &mut fresh,
            }
            .expr(v);
            for leaf in self.leaves(sit, &w, &base, &fresh) {
                if trivially_true(&leaf.goal) {
                    continue;
                }
                n += 1;
                let id = format!("{}/inv/goal{n}/safety", self.sit_prefix(sit));
                let vc = self.make(id, VcKind::Safety, sit, leaf, v.span.clone(), &fresh);
                self.out.push(vc);
            }
        }
    }

    fn situation_liveness(&mut self, sit: SitId) {
        if self.p.outgoing_blocks(sit).next().is_none() {
            return;
        }
        let goal = enabled_disjunction(self.p, sit, self.ctx);
        let fresh = self.fresh();
        let base = vec![self.inv_group(sit)];
        for (n, leaf) in self
            .leaves(sit, &goal, &base, &fresh)
            .into_iter()
            .enumerate()
        {
            let id = format!("{}/goal{}/liveness", self.sit_prefix(sit), n + 1);
            let span = self.p.situation(sit).span.clone();
            let vc = self.make(id, VcKind::Liveness, sit, leaf, span, &fresh);
            self.out.push(vc);
        }
    }

    fn fork_liveness(&mut self, bi: usize) {
        let b = &self.p.blocks[bi];
        let sit = b.source;
        for (fi, (prefix, branches)) in b.forks().into_iter().enumerate() {
            let heads: Vec<Expr> = branches
                .iter()
                .map(|br| head_enabledness(br, self.ctx))
                .collect();
            if heads.iter().any(Expr::is_true) {
                continue;
            }
            let mut fresh = self.fresh();
            let f = wp(&prefix, Expr::disj(heads), self.ctx, &mut fresh, true);
            let base = vec![self.inv_group(sit)];
            for (n, leaf) in self.leaves(sit, &f, &base, &fresh).into_iter().enumerate() {
                let id = format!(
                    "{}/t{bi}/fork{}/goal{}/liveness",
                    self.sit_prefix(sit),
                    fi + 1,
                    n + 1
                );
                let span = branches[0].span.to(&branches[branches.len() - 1].span);
                let vc = self.make(id, VcKind::Liveness, sit, leaf, span, &fresh);
                self.out.push(vc);
            }
        }
    }

    fn termination_goal(&self, obs: &[TermObligation]) -> Expr {
        conj_opt(obs.iter().map(|ob| {
            let v = self
                .p
                .situation(ob.variant_sit)
                .variant
                .clone()
                .expect("designated situation has a variant");
            let ph = Expr::var(placeholder(ob.variant_sit));
            if ob.strict {
                Expr::and(
                    Expr::bin(BinOp::Le, Expr::int(0), v.clone()),
                    Expr::bin(BinOp::Lt, v, ph),
                )
            } else {
                Expr::bin(BinOp::Le, v, ph)
            }
        }))
    }

    fn resolve_placeholders(&self, e: &Expr, obs: &[TermObligation]) -> Expr {
        if obs.is_empty() {
            return e.clone();
        }
        let m: HashMap<String, Expr> = obs
            .iter()
            .map(|ob| {
                (
                    placeholder(ob.variant_sit),
                    self.p
                        .situation(ob.variant_sit)
                        .variant
                        .clone()
                        .unwrap_or_else(Expr::tt),
                )
            })
            .collect();
        e.substitute(&m)
    }

    /// Consistency and termination leaves of one linear transition, tagged
    /// with their kind.
    fn transition_leaves(
        &self,
        t: &Transition,
        obs: &[TermObligation],
    ) -> (Vec<(VcKind, Leaf)>, Fresh) {
        let mut base = vec![self.inv_group(t.source)];
        let en = enabled_disjunction(self.p, t.source, self.ctx);
        if !en.is_true() {
            base.push(vec![self.at_entry(t.source, &en)]);
        }
        let mut all_fresh = self.fresh();
        let mut run = |goal: Expr| {
            let mut fresh = self.fresh();
            let w = wp(&t.body, goal, self.ctx, &mut fresh, false);
            let w = self.resolve_placeholders(&w, obs);
            all_fresh.introduced.extend(fresh.introduced.clone());
            self.leaves(t.source, &w, &base, &fresh)
        };
        let mut seen: HashSet<Leaf> = HashSet::new();
        let mut out = Vec::new();
        for l in run(Expr::tt()) {
            if seen.insert(l.clone()) {
                out.push((VcKind::Consistency, l));
            }
        }
        let term = if self.opts.termination {
            self.termination_goal(obs)
        } else {
            Expr::tt()
        };
        if !term.is_true() {
            for l in run(term.clone()) {
                if seen.insert(l.clone()) {
                    out.push((VcKind::Termination, l));
                }
            }
        }
        for pi in self.p.effective_invariant_conjuncts(t.target) {
            for l in run(and_opt(term.clone(), pi)) {
                if seen.insert(l.clone()) {
                    out.push((VcKind::Consistency, l));
                }
            }
        }
        out.retain(|(_, l)| !trivially_true(&l.goal));
        if out.is_empty() {
            out.push((
                VcKind::Consistency,
                Leaf {
                    groups: base,
                    goal: Expr::tt(),
                },
            ));
        }
        (out, all_fresh)
    }

    fn recursion_goal(&self, callee: &Procedure, args: &[Expr]) -> Option<Expr> {
        let vc = callee.recursion_variant.as_ref()?;
        let vp = self.p.recursion_variant.as_ref()?;
        let b = callee.call_bindings(args, &HashMap::new());
        let inst = vc.subst(&b.pre_vars, &HashMap::new());
        let entry: HashMap<String, Expr> = self
            .p
            .params
            .iter()
            .filter(|x| x.mode == ParamMode::ValRes)
            .map(|x| (x.name.clone(), Expr::old(x.name.clone())))
            .collect();
        let caller = vp.substitute(&entry);
        Some(Expr::and(
            Expr::bin(BinOp::Le, Expr::int(0), inst.clone()),
            Expr::bin(BinOp::Lt, inst, caller),
        ))
    }

    fn block(
        &mut self,
        bi: usize,
        plan: &[Vec<TermObligation>],
        recursive: &HashSet<(String, String)>,
    ) {
        let mut seen: HashSet<(VcKind, Vec<Expr>, Expr)> = HashSet::new();
        let tis: Vec<usize> = (0..self.p.transitions.len())
            .filter(|&i| self.p.transitions[i].block == bi)
            .collect();
        for ti in tis {
            let t = &self.p.transitions[ti];
            let tag = format!("{}/t{bi}#{}", self.sit_prefix(t.source), t.branch);
            let obs = plan.get(ti).cloned().unwrap_or_default();
            let mut n = 0;
            let mut push =
                |this: &mut Self, kind: VcKind, leaf: Leaf, span: SourceSpan, fresh: &Fresh| {
                    let key = (kind, leaf.hypotheses(), leaf.goal.clone());
                    if !seen.insert(key) {
                        return;
                    }
                    n += 1;
                    let id = format!("{tag}/goal{n}/{kind}");
                    let vc = this.make(id, kind, t.source, leaf, span, fresh);
                    this.out.push(vc);
                };
            let (leaves, fresh) = self.transition_leaves(t, &obs);
            for (kind, leaf) in leaves {
                push(self, kind, leaf, t.span.clone(), &fresh);
            }
            let base = vec![self.inv_group(t.source)];
            if self.opts.termination {
                for (i, st) in t.body.iter().enumerate() {
                    let StmtKind::Call(f, args) = &st.kind else {
                        continue;
                    };
                    if !recursive.contains(&(self.p.name.clone(), f.clone())) {
                        continue;
                    }
                    let Some(callee) = self.ctx.procedure(f) else {
                        continue;
                    };
                    let Some(goal) = self.recursion_goal(callee, args) else {
                        continue;
                    };
                    let mut fresh = self.fresh();
                    let w = wp(&t.body[..i], goal, self.ctx, &mut fresh, true);
                    for leaf in self.leaves(t.source, &w, &base, &fresh) {
                        if !trivially_true(&leaf.goal) {
                            push(self, VcKind::Recursion, leaf, st.span.clone(), &fresh);
                        }
                    }
                }
            }
            if self.opts.safety {
                for (i, st) in t.body.iter().enumerate() {
                    let mut fresh = self.fresh();
                    let w = Wd {
                        env: self.env,
                        fresh: &mut fresh,
                    }
                    .statement(st, self.p, self.ctx);
                    if w.is_true() {
                        continue;
                    }
                    let w = wp(&t.body[..i], w, self.ctx, &mut fresh, true);
                    for leaf in self.leaves(t.source, &w, &base, &fresh) {
                        if !trivially_true(&leaf.goal) {
                            push(self, VcKind::Safety, leaf, st.span.clone(), &fresh);
                        }
                    }
                }
            }
        }
        if self.opts.liveness {
            self.fork_liveness(bi);
        }
    }
}

/// Pairs (caller, callee) whose call may recurse.
fn recursive_pairs(ctx: &VerificationContext, analysis: &Analysis) -> HashSet<(String, String)> {
    let mut out = HashSet::new();
    for cycle in &analysis.recursive {
        for &a in cycle {
            for &b in cycle {
                out.insert((
                    ctx.procedures[a].name.clone(),
                    ctx.procedures[b].name.clone(),
                ));
            }
        }
    }
    out
}

/// All verification conditions of the context, in a stable order:
/// procedure by procedure, situation by situation, and within a situation
/// invariant safety, liveness, then each outgoing transition block.
pub fn generate_all(
    ctx: &VerificationContext,
    env: &TheoryEnv,
    analysis: &Analysis,
    opts: GenOptions,
) -> Vec<Vc> {
    let avoid = used_names(ctx, env);
    let recursive = recursive_pairs(ctx, analysis);
    let mut out = Vec::new();
    for (pi, p) in ctx.procedures.iter().enumerate() {
        let plan = analysis
            .procs
            .get(pi)
            .map(|a| a.plan.obligations.clone())
            .unwrap_or_default();
        let mut g = ProcGen {
            ctx,
            env,
            p,
            avoid: &avoid,
            opts,
            out: Vec::new(),
        };
        for sit in 0..p.situations.len() {
            if opts.safety {
                g.invariant_safety(sit);
            }
            if opts.liveness && p.situation(sit).kind != crate::model::SituationKind::Post {
                g.situation_liveness(sit);
            }
            let blocks: Vec<usize> = p.outgoing_blocks(sit).map(|(i, _)| i).collect();
            for bi in blocks {
                g.block(bi, &plan, &recursive);
            }
        }
        out.extend(g.out);
    }
    out
}

/// Statements of a transition rendered on one line, for reports.
pub fn render_body(body: &[Statement]) -> String {
    body.iter()
        .map(|st| match &st.kind {
            StmtKind::Guard(e) => format!("[{e}]"),
            StmtKind::Assert(e) => format!("{{{e}}}"),
            StmtKind::Assign(x, e) => format!("{x} := {e}"),
            StmtKind::Call(f, args) => {
                format!(
                    "{f}({})",
                    args.iter()
                        .map(|a| a.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}
