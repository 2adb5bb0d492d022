//! Cross-checking solver verdicts by concrete evaluation.
//!
//! `audit_vc` searches a small finite universe for an assignment that makes
//! every hypothesis of a VC true and its goal false. Symbols are bound one
//! at a time and each hypothesis conjunct is evaluated as soon as its
//! symbols are bound, so most of the space is pruned early. A conjunct
//! `x = e` with `e` already evaluable fixes `x` outright instead of
//! enumerating it.
//!
//! `replay` evaluates a VC under a countermodel returned by the solver.

use std::collections::{BTreeMap, BTreeSet};

use super::eval::{EvalError, Evaluator, Scope};
use super::lemmas::Universe;
use crate::model::{BinOp, Expr, ExprKind, SemType, Value};
use crate::prelude::TheoryEnv;
use crate::smt::Model;
use crate::vcgen::Vc;

pub type Store = BTreeMap<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Slot {
    Var,
    Old,
}

type Sym = (Slot, String);

enum Step {
    Enumerate(Sym, SemType),
    Compute(Sym, SemType, Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VcAudit {
    pub id: String,
    /// Assignments satisfying every hypothesis; the goal held in all of them.
    pub models: u64,
    /// Assignments where some hypothesis or the goal could not be evaluated.
    pub skipped: u64,
    /// False when the node budget ran out before the space was covered.
    pub complete: bool,
    /// Variables and entry values of a model that refutes the VC.
    pub countermodel: Option<(Store, Store)>,
}

pub struct AuditConfig {
    pub universe: Universe,
    /// Search nodes visited per VC before giving up.
    pub budget: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            universe: Universe {
                max_len: 4,
                lo: -1,
                hi: 1,
            },
            budget: 2_000_000,
        }
    }
}

fn syms_of(e: &Expr) -> BTreeSet<Sym> {
    let mut s: BTreeSet<Sym> = e.free_vars().into_iter().map(|x| (Slot::Var, x)).collect();
    s.extend(e.olds().into_iter().map(|x| (Slot::Old, x)));
    s
}

/// `x = e` or `e = x` where `x` does not occur in `e`.
fn definition(c: &Expr) -> Option<(String, &Expr)> {
    let ExprKind::Binary(BinOp::Eq, l, r) = &c.kind else {
        return None;
    };
    for (v, e) in [(l, r), (r, l)] {
        if let ExprKind::Var(x) = &v.kind {
            if !e.free_vars().contains(x) {
                return Some((x.clone(), e));
            }
        }
    }
    None
}

struct Plan {
    steps: Vec<Step>,
    /// Conjuncts to check after each step.
    checks: Vec<Vec<Expr>>,
    /// Conjuncts with no symbols at all.
    ground: Vec<Expr>,
}

fn plan(vc: &Vc) -> Plan {
    let conjuncts: Vec<Expr> = vc
        .hypotheses
        .iter()
        .flat_map(|h| h.conjuncts().into_iter().cloned())
        .collect();
    let mut types: BTreeMap<Sym, SemType> = vc
        .symbols
        .iter()
        .map(|(x, t)| ((Slot::Var, x.clone()), *t))
        .collect();
    types.extend(vc.olds.iter().map(|(x, t)| ((Slot::Old, x.clone()), *t)));
    let defs: Vec<(String, Expr)> = conjuncts
        .iter()
        .filter_map(|c| definition(c).map(|(x, e)| (x, e.clone())))
        .collect();
    let targets: BTreeSet<String> = defs.iter().map(|(x, _)| x.clone()).collect();
    let conj_syms: Vec<BTreeSet<Sym>> = conjuncts.iter().map(syms_of).collect();

    let mut bound: BTreeSet<Sym> = BTreeSet::new();
    let mut steps = Vec::new();
    while bound.len() < types.len() {
        let computable = defs.iter().find(|(x, e)| {
            let s = (Slot::Var, x.clone());
            types.contains_key(&s)
                && !bound.contains(&s)
                && syms_of(e).iter().all(|d| bound.contains(d))
        });
        if let Some((x, e)) = computable {
            let s = (Slot::Var, x.clone());
            steps.push(Step::Compute(s.clone(), types[&s], e.clone()));
            bound.insert(s);
            continue;
        }
        // Free symbols first, then the one that completes the most
        // conjuncts, vectors before scalars on ties.
        let completes = |s: &Sym| {
            conj_syms
                .iter()
                .filter(|cs| cs.contains(s) && cs.iter().all(|d| d == s || bound.contains(d)))
                .count()
        };
        let rank = |(s, t): (&Sym, &SemType)| {
            let defined = s.0 == Slot::Var && targets.contains(&s.1);
            (
                defined,
                std::cmp::Reverse(completes(s)),
                *t != SemType::Vector,
                s.clone(),
            )
        };
        let (s, t) = types
            .iter()
            .filter(|(s, _)| !bound.contains(*s))
            .min_by_key(|&(s, t)| rank((s, t)))
            .map(|(s, t)| (s.clone(), *t))
            .expect("some symbol is unbound");
        steps.push(Step::Enumerate(s.clone(), t));
        bound.insert(s);
    }

    let mut checks = vec![Vec::new(); steps.len()];
    let mut ground = Vec::new();
    for c in conjuncts {
        let need = syms_of(&c);
        let last = steps.iter().rposition(|st| {
            let s = match st {
                Step::Enumerate(s, _) | Step::Compute(s, _, _) => s,
            };
            need.contains(s)
        });
        match last {
            Some(i) => checks[i].push(c),
            None => ground.push(c),
        }
    }
    // Quantifier-free and function-free checks first.
    for cs in &mut checks {
        cs.sort_by_key(|c: &Expr| (c.has_quantifier(), !c.applied_functions().is_empty()));
    }
    Plan {
        steps,
        checks,
        ground,
    }
}

struct Search<'a> {
    ev: Evaluator<'a>,
    plan: Plan,
    goal: &'a Expr,
    u: Universe,
    vectors: Vec<Vec<i64>>,
    vars: Store,
    olds: Store,
    budget: u64,
    nodes: u64,
    out: VcAudit,
}

enum Stop {
    Budget,
    Found,
}

impl Search<'_> {
    fn set(&mut self, s: &Sym, v: Value) {
        match s.0 {
            Slot::Var => self.vars.insert(s.1.clone(), v),
            Slot::Old => self.olds.insert(s.1.clone(), v),
        };
    }

    /// `None` when no check is false but some could not be evaluated: a
    /// false conjunct settles the conjunction even next to an undefined one.
    fn checks_hold(&self, i: usize) -> Option<bool> {
        let mut undefined = false;
        for c in &self.plan.checks[i] {
            match self
                .ev
                .eval_bool(c, &mut Scope::new(&self.vars, &self.olds))
            {
                Ok(true) => {}
                Ok(false) => return Some(false),
                Err(_) => undefined = true,
            }
        }
        (!undefined).then_some(true)
    }

    fn go(&mut self, i: usize) -> Result<(), Stop> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Stop::Budget);
        }
        if i == self.plan.steps.len() {
            match self
                .ev
                .eval_bool(self.goal, &mut Scope::new(&self.vars, &self.olds))
            {
                Ok(true) => self.out.models += 1,
                Ok(false) => {
                    self.out.countermodel = Some((self.vars.clone(), self.olds.clone()));
                    return Err(Stop::Found);
                }
                Err(_) => self.out.skipped += 1,
            }
            return Ok(());
        }
        let candidates: Vec<Value> = match &self.plan.steps[i] {
            Step::Enumerate(_, SemType::Vector) => {
                self.vectors.iter().cloned().map(Value::Vector).collect()
            }
            Step::Enumerate(_, SemType::Bool) => vec![Value::Bool(false), Value::Bool(true)],
            Step::Enumerate(_, t) => {
                let m = self.u.max_len as i64 + 1;
                let lo = if *t == SemType::Nat { 0 } else { -m };
                (lo..=m).map(Value::Int).collect()
            }
            Step::Compute(_, t, e) => {
                match self.ev.eval(e, &mut Scope::new(&self.vars, &self.olds)) {
                    Ok(v) if v.has_type(*t) => vec![v],
                    Ok(_) => vec![],
                    Err(_) => {
                        self.out.skipped += 1;
                        vec![]
                    }
                }
            }
        };
        let sym = match &self.plan.steps[i] {
            Step::Enumerate(s, _) | Step::Compute(s, _, _) => s.clone(),
        };
        for v in candidates {
            self.set(&sym, v);
            match self.checks_hold(i) {
                Some(true) => self.go(i + 1)?,
                Some(false) => {}
                None => self.out.skipped += 1,
            }
        }
        Ok(())
    }
}

/// Searches for a countermodel of `vc` in the configured universe.
pub fn audit_vc(vc: &Vc, env: &TheoryEnv, cfg: &AuditConfig) -> VcAudit {
    let ev = Evaluator::new(env);
    let plan = plan(vc);
    let mut out = VcAudit {
        id: vc.id.clone(),
        models: 0,
        skipped: 0,
        complete: true,
        countermodel: None,
    };
    let none = Store::new();
    for g in &plan.ground {
        match ev.eval_bool(g, &mut Scope::new(&none, &none)) {
            Ok(true) => {}
            Ok(false) => return out,
            Err(_) => {
                out.skipped += 1;
                return out;
            }
        }
    }
    let mut s = Search {
        ev,
        plan,
        goal: &vc.goal,
        u: cfg.universe,
        vectors: cfg.universe.vectors(),
        vars: Store::new(),
        olds: Store::new(),
        budget: cfg.budget,
        nodes: 0,
        out,
    };
    if let Err(Stop::Budget) = s.go(0) {
        s.out.complete = false;
    }
    s.out
}

/// Audits many VCs, in parallel when the `parallel` feature is on.
pub fn audit_all(vcs: &[&Vc], env: &TheoryEnv, cfg: &AuditConfig) -> Vec<VcAudit> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        vcs.par_iter().map(|vc| audit_vc(vc, env, cfg)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        vcs.iter().map(|vc| audit_vc(vc, env, cfg)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Replay {
    /// Every hypothesis holds and the goal fails.
    Confirmed,
    /// Hypothesis `[-n]` (1-based, display order) is false under the model,
    /// or `0` when the goal holds.
    Spurious(usize),
    /// The model is partial or some formula cannot be evaluated.
    Inconclusive(String),
}

/// Evaluates `vc` under a solver countermodel.
pub fn replay(vc: &Vc, env: &TheoryEnv, model: &Model) -> Replay {
    if !model.is_total(&vc.symbols, &vc.olds) {
        return Replay::Inconclusive("model does not bind every symbol".into());
    }
    let ev = Evaluator::new(env);
    let eval = |e: &Expr| -> Result<bool, EvalError> {
        ev.eval_bool(e, &mut Scope::new(&model.vars, &model.olds))
    };
    for (i, h) in vc.hypotheses.iter().enumerate() {
        match eval(h) {
            Ok(true) => {}
            Ok(false) => return Replay::Spurious(i + 1),
            Err(e) => return Replay::Inconclusive(format!("[-{}]: {}", i + 1, e.kind)),
        }
    }
    match eval(&vc.goal) {
        Ok(false) => Replay::Confirmed,
        Ok(true) => Replay::Spurious(0),
        Err(e) => Replay::Inconclusive(format!("goal: {}", e.kind)),
    }
}
