//! Running a procedure from its precondition, checking every annotation on
//! the way.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::eval::{EvalError, Evaluator, Scope};
use crate::analysis::{Analysis, TermObligation};
use crate::diag::SourceSpan;
use crate::model::{
    Branch, Expr, ExprKind, ParamMode, Procedure, SitId, SituationKind, Statement, StmtKind, Value,
    VerificationContext,
};
use crate::prelude::TheoryEnv;

pub type Store = BTreeMap<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "policy", content = "seed", rename_all = "kebab-case")]
pub enum Policy {
    /// The first enabled transition in source order.
    FirstEnabled,
    /// Uniformly among the enabled transitions.
    Random(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Situation arrivals, summed over all nested calls.
    pub max_steps: u64,
    pub max_call_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: 1_000_000,
            max_call_depth: 256,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Precondition,
    Invariant,
    Postcondition,
    Liveness,
    Assert,
    Variant,
    /// A runtime fault: out-of-bounds access, division by zero, ...
    Safety,
    StepLimitExceeded,
    /// Malformed input or call: missing or ill-typed values, aliasing.
    Input,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Precondition => "PreconditionViolation",
            ViolationKind::Invariant => "InvariantViolation",
            ViolationKind::Postcondition => "PostconditionViolation",
            ViolationKind::Liveness => "LivenessViolation",
            ViolationKind::Assert => "AssertViolation",
            ViolationKind::Variant => "VariantViolation",
            ViolationKind::Safety => "SafetyViolation",
            ViolationKind::StepLimitExceeded => "StepLimitExceeded",
            ViolationKind::Input => "InputError",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{span}: {kind} in `{procedure}` at {situation}: {message}")]
pub struct Violation {
    pub kind: ViolationKind,
    pub procedure: String,
    pub situation: String,
    pub message: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub situation: String,
    pub store: Store,
    /// Variant values of the situation and its ancestors, outermost first.
    pub variants: Vec<(String, i64)>,
    /// Transition taken from here, as `t{block}#{branch}`.
    pub transition: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub procedure: String,
    pub policy: Policy,
    pub inputs: Store,
    pub steps: Vec<Step>,
    pub outcome: Result<Store, Violation>,
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

fn show_store(s: &Store) -> String {
    s.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One line per step, then the outcome.
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for st in &self.steps {
            write!(f, "{:<12} {}", st.situation, show_store(&st.store))?;
            for (s, v) in &st.variants {
                write!(f, " |{s}: {v}|")?;
            }
            match &st.transition {
                Some(t) => writeln!(f, "  -> {t}")?,
                None => writeln!(f)?,
            }
        }
        match &self.outcome {
            Ok(s) => writeln!(f, "final {}", show_store(s)),
            Err(v) => writeln!(f, "{v}"),
        }
    }
}

/// Parses `a=[3,1,2]; n=2; b=true`.
pub fn parse_store(text: &str) -> Result<Store, String> {
    let mut out = Store::new();
    for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("expected `name=value`, got `{item}`"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || !k.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(format!("bad variable name `{k}`"));
        }
        let val = if let Some(inner) = v.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let xs: Result<Vec<i64>, _> = inner
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse::<i64>)
                .collect();
            Value::Vector(xs.map_err(|e| format!("bad vector `{v}`: {e}"))?)
        } else if v == "true" || v == "false" {
            Value::Bool(v == "true")
        } else {
            Value::Int(v.parse().map_err(|e| format!("bad value `{v}`: {e}"))?)
        };
        if out.insert(k.to_string(), val).is_some() {
            return Err(format!("`{k}` given twice"));
        }
    }
    Ok(out)
}

pub struct Interpreter<'a> {
    pub ctx: &'a VerificationContext,
    pub env: &'a TheoryEnv,
    pub analysis: &'a Analysis,
    pub limits: Limits,
    eval: Evaluator<'a>,
}

struct RunState {
    rng: Option<ChaCha8Rng>,
    steps: u64,
}

/// Result of speculatively executing a statement path.
enum Exec {
    /// A guard failed: the path is not enabled.
    Blocked,
    Done(Store),
    Fault(Violation),
}

struct Frame<'p> {
    p: &'p Procedure,
    olds: Store,
    depth: usize,
}

impl<'a> Interpreter<'a> {
    pub fn new(ctx: &'a VerificationContext, env: &'a TheoryEnv, analysis: &'a Analysis) -> Self {
        Interpreter {
            ctx,
            env,
            analysis,
            limits: Limits::default(),
            eval: Evaluator::new(env),
        }
    }

    /// Runs `proc_name` on `inputs` (parameters and context constants).
    pub fn run(&self, proc_name: &str, inputs: &Store, policy: Policy) -> Result<Trace, String> {
        let p = self
            .ctx
            .procedure(proc_name)
            .ok_or_else(|| format!("no procedure `{proc_name}`"))?;
        let mut st = RunState {
            rng: match policy {
                Policy::FirstEnabled => None,
                Policy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            },
            steps: 0,
        };
        let mut steps = Vec::new();
        let outcome = self
            .call(p, inputs.clone(), &mut st, 0, Some(&mut steps))
            .map(|(s, _)| s);
        Ok(Trace {
            procedure: p.name.clone(),
            policy,
            inputs: inputs.clone(),
            steps,
            outcome,
        })
    }

    fn violation(
        &self,
        kind: ViolationKind,
        p: &Procedure,
        sit: &str,
        message: impl Into<String>,
        span: SourceSpan,
    ) -> Violation {
        Violation {
            kind,
            procedure: p.name.clone(),
            situation: sit.to_string(),
            message: message.into(),
            span,
        }
    }

    fn fault(&self, p: &Procedure, sit: &str, e: EvalError) -> Violation {
        let span = e.span.clone();
        self.violation(ViolationKind::Safety, p, sit, e.kind.to_string(), span)
    }

    fn proc_index(&self, p: &Procedure) -> usize {
        self.ctx
            .procedures
            .iter()
            .position(|q| q.name == p.name)
            .unwrap_or(0)
    }

    /// Executes a whole procedure; returns the final store and the name of
    /// the postcondition reached.
    fn call(
        &self,
        p: &Procedure,
        inputs: Store,
        st: &mut RunState,
        depth: usize,
        mut trace: Option<&mut Vec<Step>>,
    ) -> Result<(Store, String), Violation> {
        let pre_name = p.situation(p.pre).name.clone();
        let input_err =
            |m: String| self.violation(ViolationKind::Input, p, &pre_name, m, p.span.clone());
        let mut store = Store::new();
        for c in &self.ctx.constants {
            match inputs.get(&c.name) {
                Some(v) if v.has_type(c.ty) => store.insert(c.name.clone(), v.clone()),
                Some(v) => {
                    return Err(input_err(format!(
                        "constant `{}` = {v} is not a {}",
                        c.name, c.ty
                    )))
                }
                None => {
                    return Err(input_err(format!(
                        "missing value for constant `{}`",
                        c.name
                    )))
                }
            };
        }
        for prm in &p.params {
            match inputs.get(&prm.name) {
                Some(v) if v.has_type(prm.ty) => store.insert(prm.name.clone(), v.clone()),
                Some(v) => {
                    return Err(input_err(format!(
                        "`{}` = {v} is not a {}",
                        prm.name, prm.ty
                    )))
                }
                None => {
                    return Err(input_err(format!(
                        "missing value for parameter `{}`",
                        prm.name
                    )))
                }
            };
        }
        for k in inputs.keys() {
            if !store.contains_key(k) {
                return Err(input_err(format!(
                    "`{k}` is not a parameter of `{}`",
                    p.name
                )));
            }
        }
        for l in &p.locals {
            store.insert(l.name.clone(), Value::zero(l.ty));
        }
        let olds: Store = p
            .valres_params()
            .map(|x| (x.name.clone(), store[&x.name].clone()))
            .collect();
        let frame = Frame { p, olds, depth };

        if let Some(v) =
            self.check_invariants(&frame, p.pre, &store, ViolationKind::Precondition)?
        {
            return Err(v);
        }
        let mut cur = p.pre;
        loop {
            let sit = p.situation(cur);
            let variants = self.variant_values(&frame, cur, &store);
            if let Some(t) = trace.as_deref_mut() {
                t.push(Step {
                    situation: sit.name.clone(),
                    store: store.clone(),
                    variants,
                    transition: None,
                });
            }
            if sit.kind == SituationKind::Post {
                let visible: Store = store
                    .iter()
                    .filter(|(k, _)| p.param(k).is_some())
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                return Ok((visible, sit.name.clone()));
            }
            let candidates = self.enabled(&frame, cur, &store, st)?;
            let Some(pick) = self.choose(candidates.len(), st) else {
                let msg = "no transition is enabled".to_string();
                return Err(self.violation(
                    ViolationKind::Liveness,
                    p,
                    &sit.name,
                    msg,
                    sit.span.clone(),
                ));
            };
            let (ti, next) = candidates
                .into_iter()
                .nth(pick)
                .expect("chosen index in range");
            let next = match next {
                Exec::Done(s) => s,
                Exec::Fault(v) => return Err(v),
                Exec::Blocked => unreachable!("blocked paths are not candidates"),
            };
            let t = &p.transitions[ti];
            if let Some(tr) = trace.as_deref_mut() {
                if let Some(last) = tr.last_mut() {
                    last.transition = Some(format!("t{}#{}", t.block, t.branch));
                }
            }
            self.check_variants(&frame, ti, &store, &next)?;
            st.steps += 1;
            if st.steps > self.limits.max_steps {
                let m = format!("more than {} situation arrivals", self.limits.max_steps);
                return Err(self.violation(
                    ViolationKind::StepLimitExceeded,
                    p,
                    &p.situation(t.target).name,
                    m,
                    t.span.clone(),
                ));
            }
            let kind = if p.situation(t.target).kind == SituationKind::Post {
                ViolationKind::Postcondition
            } else {
                ViolationKind::Invariant
            };
            if let Some(v) = self.check_invariants(&frame, t.target, &next, kind)? {
                return Err(v);
            }
            store = next;
            cur = t.target;
        }
    }

    fn choose(&self, n: usize, st: &mut RunState) -> Option<usize> {
        if n == 0 {
            return None;
        }
        match &mut st.rng {
            None => Some(0),
            Some(rng) => (0..n).collect::<Vec<_>>().choose(rng).copied(),
        }
    }

    /// `Some(violation)` for the first invariant of `sit` (outermost first)
    /// that does not hold.
    fn check_invariants(
        &self,
        f: &Frame,
        sit: SitId,
        store: &Store,
        kind: ViolationKind,
    ) -> Result<Option<Violation>, Violation> {
        let name = &f.p.situation(sit).name;
        for inv in f.p.effective_invariant_conjuncts(sit) {
            let mut scope = Scope::new(store, &f.olds);
            match self.eval.eval_bool(&inv, &mut scope) {
                Ok(true) => {}
                Ok(false) => {
                    return Ok(Some(self.violation(
                        kind,
                        f.p,
                        name,
                        format!("`{inv}` does not hold"),
                        inv.span.clone(),
                    )))
                }
                Err(e) => return Err(self.fault(f.p, name, e)),
            }
        }
        Ok(None)
    }

    fn variant_values(&self, f: &Frame, sit: SitId, store: &Store) -> Vec<(String, i64)> {
        f.p.ancestry(sit)
            .into_iter()
            .filter_map(|s| {
                let v = f.p.situation(s).variant.as_ref()?;
                let val = self
                    .eval
                    .eval_int(v, &mut Scope::new(store, &f.olds))
                    .ok()?;
                Some((f.p.situation(s).name.clone(), val))
            })
            .collect()
    }

    /// The obligations of the termination plan for transition `ti`.
    fn check_variants(
        &self,
        f: &Frame,
        ti: usize,
        before: &Store,
        after: &Store,
    ) -> Result<(), Violation> {
        let plan = &self.analysis.procs[self.proc_index(f.p)].plan;
        let Some(obls) = plan.obligations.get(ti) else {
            return Ok(());
        };
        let t = &f.p.transitions[ti];
        for TermObligation {
            variant_sit,
            strict,
        } in obls
        {
            let s = f.p.situation(*variant_sit);
            let Some(v) = &s.variant else { continue };
            let old = self
                .eval
                .eval_int(v, &mut Scope::new(before, &f.olds))
                .map_err(|e| self.fault(f.p, &s.name, e))?;
            let new = self
                .eval
                .eval_int(v, &mut Scope::new(after, &f.olds))
                .map_err(|e| self.fault(f.p, &s.name, e))?;
            let ok = if *strict {
                0 <= new && new < old
            } else {
                new <= old
            };
            if !ok {
                let rel = if *strict {
                    "decrease and stay nonnegative"
                } else {
                    "not increase"
                };
                let m = format!(
                    "variant `{v}` of {} went from {old} to {new} but must {rel}",
                    s.name
                );
                return Err(self.violation(
                    ViolationKind::Variant,
                    f.p,
                    &f.p.situation(t.source).name,
                    m,
                    t.span.clone(),
                ));
            }
        }
        Ok(())
    }

    /// Every transition out of `sit` whose guards hold, paired with the
    /// result of executing it.
    fn enabled(
        &self,
        f: &Frame,
        sit: SitId,
        store: &Store,
        st: &mut RunState,
    ) -> Result<Vec<(usize, Exec)>, Violation> {
        let mut out = Vec::new();
        for (bi, b) in f.p.outgoing_blocks(sit) {
            let mut leaves = Vec::new();
            let src = &f.p.situation(sit).name;
            self.exec_branch(f, src, &b.tree, store.clone(), st, &mut leaves, &mut 0)?;
            for (leaf, r) in leaves {
                if matches!(r, Exec::Blocked) {
                    continue;
                }
                let ti =
                    f.p.transitions
                        .iter()
                        .position(|t| t.block == bi && t.branch == leaf)
                        .expect("every leaf has a transition");
                out.push((ti, r));
            }
        }
        Ok(out)
    }

    /// Runs the statements of `b`, then each choice. Leaves are numbered in
    /// depth-first order, matching `TransitionBlock::desugar`. A choice
    /// reached with every branch blocked is a liveness violation.
    #[allow(clippy::too_many_arguments)]
    fn exec_branch(
        &self,
        f: &Frame,
        src: &str,
        b: &Branch,
        store: Store,
        st: &mut RunState,
        out: &mut Vec<(usize, Exec)>,
        next_leaf: &mut usize,
    ) -> Result<(), Violation> {
        let r = self.exec_stmts(f, src, &b.stmts, store, st);
        if b.choices.is_empty() {
            out.push((*next_leaf, r));
            *next_leaf += 1;
            return Ok(());
        }
        match r {
            Exec::Done(s) => {
                let start = out.len();
                for c in &b.choices {
                    self.exec_branch(f, src, c, s.clone(), st, out, next_leaf)?;
                }
                if out[start..].iter().all(|(_, r)| matches!(r, Exec::Blocked)) {
                    let m = "no branch of the choice is enabled";
                    return Err(self.violation(
                        ViolationKind::Liveness,
                        f.p,
                        src,
                        m,
                        b.span.clone(),
                    ));
                }
            }
            blocked_or_fault => {
                // Every leaf below shares the outcome of the prefix.
                let n = count_leaves(b);
                let mut first = Some(blocked_or_fault);
                for _ in 0..n {
                    let r = first.take().unwrap_or(Exec::Blocked);
                    out.push((*next_leaf, r));
                    *next_leaf += 1;
                }
            }
        }
        Ok(())
    }

    fn exec_stmts(
        &self,
        f: &Frame,
        src: &str,
        stmts: &[Statement],
        mut store: Store,
        st: &mut RunState,
    ) -> Exec {
        for s in stmts {
            let mut scope = Scope::new(&store, &f.olds);
            match &s.kind {
                StmtKind::Guard(g) => match self.eval.eval_bool(g, &mut scope) {
                    Ok(true) => {}
                    Ok(false) => return Exec::Blocked,
                    Err(e) => return Exec::Fault(self.fault(f.p, src, e)),
                },
                StmtKind::Assert(b) => match self.eval.eval_bool(b, &mut scope) {
                    Ok(true) => {}
                    Ok(false) => {
                        let m = format!("assertion `{b}` does not hold");
                        return Exec::Fault(self.violation(
                            ViolationKind::Assert,
                            f.p,
                            src,
                            m,
                            s.span.clone(),
                        ));
                    }
                    Err(e) => return Exec::Fault(self.fault(f.p, src, e)),
                },
                StmtKind::Assign(x, e) => {
                    let v = match self.eval.eval(e, &mut scope) {
                        Ok(v) => v,
                        Err(e) => return Exec::Fault(self.fault(f.p, src, e)),
                    };
                    let ty = self.ctx.symbol_type(f.p, x);
                    if let Some(ty) = ty {
                        if !v.has_type(ty) {
                            let m = format!("`{x}` := {v} is not a {ty}");
                            return Exec::Fault(self.violation(
                                ViolationKind::Safety,
                                f.p,
                                src,
                                m,
                                s.span.clone(),
                            ));
                        }
                    }
                    store.insert(x.clone(), v);
                }
                StmtKind::Call(name, args) => {
                    match self.exec_call(f, src, name, args, s, store, st) {
                        Ok(next) => store = next,
                        Err(v) => return Exec::Fault(v),
                    }
                }
            }
        }
        Exec::Done(store)
    }

    #[allow(clippy::too_many_arguments)]
    fn exec_call(
        &self,
        f: &Frame,
        src: &str,
        name: &str,
        args: &[Expr],
        s: &Statement,
        mut store: Store,
        st: &mut RunState,
    ) -> Result<Store, Violation> {
        let callee = self
            .ctx
            .procedure(name)
            .expect("calls are resolved by the parser");
        if f.depth + 1 > self.limits.max_call_depth {
            let m = format!("call depth exceeds {}", self.limits.max_call_depth);
            return Err(self.violation(
                ViolationKind::StepLimitExceeded,
                f.p,
                src,
                m,
                s.span.clone(),
            ));
        }
        let mut inputs = Store::new();
        let mut copy_back = Vec::new();
        for c in &self.ctx.constants {
            inputs.insert(c.name.clone(), store[&c.name].clone());
        }
        for (prm, a) in callee.params.iter().zip(args) {
            let v = self
                .eval
                .eval(a, &mut Scope::new(&store, &f.olds))
                .map_err(|e| self.fault(f.p, src, e))?;
            if prm.mode == ParamMode::ValRes {
                let ExprKind::Var(x) = &a.kind else {
                    unreachable!("valres arguments are variables")
                };
                if copy_back.iter().any(|(_, y): &(String, String)| y == x) {
                    let m = format!("`{x}` is passed twice as a value-result argument");
                    return Err(self.violation(ViolationKind::Input, f.p, src, m, s.span.clone()));
                }
                copy_back.push((prm.name.clone(), x.clone()));
            }
            inputs.insert(prm.name.clone(), v);
        }
        let (out, _) = self.call(callee, inputs, st, f.depth + 1, None)?;
        for (prm, x) in copy_back {
            store.insert(x, out[&prm].clone());
        }
        Ok(store)
    }
}

fn count_leaves(b: &Branch) -> usize {
    if b.choices.is_empty() {
        1
    } else {
        b.choices.iter().map(count_leaves).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{load_file, load_source, Program};

    fn corpus(name: &str) -> Program {
        let path = format!("{}/../../corpus/{name}.ibp", env!("CARGO_MANIFEST_DIR"));
        load_file(&path).unwrap_or_else(|e| panic!("{name}: {e:?}"))
    }

    fn run(prog: &Program, proc_name: &str, input: &str, policy: Policy) -> Trace {
        let interp = Interpreter::new(&prog.ctx, &prog.env, &prog.analysis);
        interp
            .run(proc_name, &parse_store(input).unwrap(), policy)
            .unwrap()
    }

    #[test]
    fn store_syntax() {
        let s = parse_store("a=[3, 1,2]; n = 3; b=false;").unwrap();
        assert_eq!(s["a"], Value::Vector(vec![3, 1, 2]));
        assert_eq!(s["n"], Value::Int(3));
        assert_eq!(s["b"], Value::Bool(false));
        assert!(parse_store("a").is_err());
        assert!(parse_store("a=1; a=2").is_err());
        assert!(parse_store("a=[1,x]").is_err());
    }

    #[test]
    fn selection_sort_sorts() {
        let p = corpus("selection_sort");
        let t = run(&p, "sort", "a=[3, 1, 2, 1]; n=4", Policy::FirstEnabled);
        let out = t.outcome.clone().unwrap();
        assert_eq!(out["a"], Value::Vector(vec![1, 1, 2, 3]));
        assert_eq!(t.steps.first().unwrap().situation, "Pre");
        assert!(t.to_json().contains("\"first-enabled\""));
    }

    #[test]
    fn selection_sort_bug_is_caught() {
        let p = corpus("selection_sort_bug");
        let t = run(&p, "sort", "a=[3, 1, 2]; n=3", Policy::FirstEnabled);
        let v = t.outcome.unwrap_err();
        assert_eq!(v.kind, ViolationKind::Invariant, "{v}");
        assert_eq!(v.situation, "Inner");
    }

    #[test]
    fn precondition_is_checked() {
        let p = corpus("selection_sort");
        let t = run(&p, "sort", "a=[3, 1, 2]; n=2", Policy::FirstEnabled);
        assert_eq!(t.outcome.unwrap_err().kind, ViolationKind::Precondition);
        let t = run(&p, "sort", "a=[3, 1, 2]", Policy::FirstEnabled);
        assert_eq!(t.outcome.unwrap_err().kind, ViolationKind::Input);
        let t = run(&p, "sort", "a=[3, 1, 2]; n=-3", Policy::FirstEnabled);
        assert_eq!(t.outcome.unwrap_err().kind, ViolationKind::Input);
    }

    #[test]
    fn heapsort_runs_under_random_choice() {
        let p = corpus("heapsort_final");
        for seed in 0..20 {
            let t = run(
                &p,
                "heapsort",
                "a=[5, -2, 9, 9, 0, 3, 1]",
                Policy::Random(seed),
            );
            assert_eq!(
                t.outcome.unwrap()["a"],
                Value::Vector(vec![-2, 0, 1, 3, 5, 9, 9])
            );
        }
    }

    #[test]
    fn siftdown_exit_bug_is_caught() {
        // Node 0 has one child left of the boundary and it is larger.
        let p = corpus("siftdown_bug");
        let t = run(&p, "siftdown", "m=0; n=2; a=[1, 5]", Policy::FirstEnabled);
        let v = t.outcome.unwrap_err();
        assert!(
            matches!(
                v.kind,
                ViolationKind::Postcondition | ViolationKind::Liveness
            ),
            "{v}"
        );
    }

    #[test]
    fn partial_procedure_runs() {
        let p = corpus("partial");
        let t = run(&p, "find_zero", "a=[4, 0, 1]; i=0", Policy::FirstEnabled);
        assert_eq!(t.outcome.unwrap()["i"], Value::Int(1));
    }

    #[test]
    fn step_limit_stops_divergence() {
        let src = "context spin { procedure p(valres x: int) {
            situation Loop { true }
            post { false }
            transition to Loop { x := x + 1; }
            transition from Loop to Loop { x := x + 1; }
        } }";
        let prog = match load_source(src, "spin.ibp", None) {
            Ok(p) => p,
            Err(e) => panic!("{:?}", e.diagnostics()),
        };
        let mut interp = Interpreter::new(&prog.ctx, &prog.env, &prog.analysis);
        interp.limits.max_steps = 50;
        let t = interp
            .run("p", &parse_store("x=0").unwrap(), Policy::FirstEnabled)
            .unwrap();
        assert_eq!(
            t.outcome.unwrap_err().kind,
            ViolationKind::StepLimitExceeded
        );
    }

    #[test]
    fn variant_increase_is_caught() {
        let src = "context grow { procedure p(valres x: nat) {
            situation Loop variant 10 - x { x <= 10 }
            post { x = 10 }
            transition to Loop { [x <= 10]; }
            transition from Loop to Loop { [x < 10]; x := x + 1; }
            transition from Loop to Loop { [x = 10]; x := x - 1; }
            transition from Loop to Post { [x = 10]; }
        } }";
        let prog = match load_source(src, "grow.ibp", None) {
            Ok(p) => p,
            Err(e) => panic!("{:?}", e.diagnostics()),
        };
        let interp = Interpreter::new(&prog.ctx, &prog.env, &prog.analysis);
        let t = interp
            .run("p", &parse_store("x=9").unwrap(), Policy::FirstEnabled)
            .unwrap();
        assert_eq!(t.outcome.unwrap_err().kind, ViolationKind::Variant);
    }
}
