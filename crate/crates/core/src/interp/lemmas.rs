//! Exhaustive finite-model checking of theory lemmas and `ensures` clauses.
//!
//! Every parameter ranges over a small universe: vectors up to a length
//! bound with elements from a value range, scalars over a window around the
//! length bound. Assignments are built one parameter at a time; as soon as a
//! premise conjunct whose variables are all bound evaluates to false, the
//! whole subtree is skipped. That keeps three-vector lemmas like transitivity
//! of `perm` cheap without losing any model where the premise holds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::eval::{EvalError, Evaluator, Scope};
use crate::model::{BinOp, Domain, Expr, ExprKind, SemType, Value};
use crate::prelude::{FParam, TheoryEnv};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Universe {
    pub max_len: usize,
    pub lo: i64,
    pub hi: i64,
}

impl Default for Universe {
    fn default() -> Self {
        Universe {
            max_len: 4,
            lo: -2,
            hi: 2,
        }
    }
}

impl Universe {
    /// All vectors up to `max_len`, shortest first.
    pub fn vectors(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        let mut layer = vec![Vec::new()];
        for _ in 0..self.max_len {
            let mut next = Vec::new();
            for v in &layer {
                for x in self.lo..=self.hi {
                    let mut w: Vec<i64> = v.clone();
                    w.push(x);
                    next.push(w);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    fn scalars(&self, ty: SemType) -> Vec<Value> {
        let m = self.max_len as i64 + 1;
        match ty {
            SemType::Bool => vec![Value::Bool(false), Value::Bool(true)],
            SemType::Nat => (0..=m).map(Value::Int).collect(),
            _ => (self.lo.min(-m)..=self.hi.max(m)).map(Value::Int).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Finding {
    /// The statement is false under these bindings.
    Countermodel(BTreeMap<String, Value>),
    /// The statement could not be evaluated under these bindings.
    Error(BTreeMap<String, Value>, EvalError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaReport {
    pub name: String,
    /// Complete assignments evaluated (pruned subtrees not counted).
    pub models: u64,
    pub finding: Option<Finding>,
}

impl fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |m: &BTreeMap<String, Value>| {
            m.iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match &self.finding {
            None => write!(f, "{}: holds ({} models)", self.name, self.models),
            Some(Finding::Countermodel(m)) => write!(f, "{}: FALSE at {}", self.name, show(m)),
            Some(Finding::Error(m, e)) => write!(
                f,
                "{}: cannot evaluate at {}: {}",
                self.name,
                show(m),
                e.kind
            ),
        }
    }
}

/// Checks every lemma of `env` (active or not) and every `ensures` clause.
pub fn audit_theory(env: &TheoryEnv, u: Universe) -> Vec<LemmaReport> {
    let mut out: Vec<LemmaReport> = env
        .lemmas
        .iter()
        .map(|l| check_statement(env, &l.name, &l.params, &l.statement, u))
        .collect();
    for f in &env.funcs {
        let Some(ens) = &f.ensures else { continue };
        let app = Expr::app(
            f.name.clone(),
            f.params.iter().map(|p| Expr::var(p.name.clone())).collect(),
        );
        let stmt = ens.substitute_one("result", &app);
        out.push(check_statement(
            env,
            &format!("{}/ensures", f.name),
            &f.params,
            &stmt,
            u,
        ));
    }
    out
}

/// Checks `forall params: stmt` over the universe.
pub fn check_statement(
    env: &TheoryEnv,
    name: &str,
    params: &[FParam],
    stmt: &Expr,
    u: Universe,
) -> LemmaReport {
    let premises: Vec<(Expr, BTreeSet<String>)> = match &stmt.kind {
        ExprKind::Binary(BinOp::Implies, p, _) => p
            .conjuncts()
            .into_iter()
            .map(|c| (c.clone(), c.free_vars()))
            .collect(),
        _ => Vec::new(),
    };
    let mut search = Search {
        ev: Evaluator::new(env),
        params,
        stmt,
        premises,
        vectors: u.vectors(),
        u,
        store: BTreeMap::new(),
        models: 0,
    };
    let finding = search.go(0).err();
    LemmaReport {
        name: name.to_string(),
        models: search.models,
        finding,
    }
}

struct Search<'a> {
    ev: Evaluator<'a>,
    params: &'a [FParam],
    stmt: &'a Expr,
    premises: Vec<(Expr, BTreeSet<String>)>,
    vectors: Vec<Vec<i64>>,
    u: Universe,
    store: BTreeMap<String, Value>,
    models: u64,
}

impl Search<'_> {
    fn go(&mut self, i: usize) -> Result<(), Finding> {
        let none = BTreeMap::new();
        if i == self.params.len() {
            self.models += 1;
            return match self
                .ev
                .eval_bool(self.stmt, &mut Scope::new(&self.store, &none))
            {
                Ok(true) => Ok(()),
                Ok(false) => Err(Finding::Countermodel(self.store.clone())),
                Err(e) => Err(Finding::Error(self.store.clone(), e)),
            };
        }
        let p = &self.params[i];
        let candidates: Vec<Value> = match p.domain.base_type() {
            SemType::Vector => self.vectors.iter().cloned().map(Value::Vector).collect(),
            t => self.u.scalars(t),
        };
        for v in candidates {
            self.store.insert(p.name.clone(), v);
            if self.in_domain(&p.domain, &p.name)? && self.premises_hold(i)? {
                self.go(i + 1)?;
            }
        }
        self.store.remove(&p.name);
        Ok(())
    }

    fn in_domain(&self, d: &Domain, x: &str) -> Result<bool, Finding> {
        let Some(c) = d.constraint(&Expr::var(x)) else {
            return Ok(true);
        };
        let none = BTreeMap::new();
        self.ev
            .eval_bool(&c, &mut Scope::new(&self.store, &none))
            .map_err(|e| Finding::Error(self.store.clone(), e))
    }

    /// False when a premise conjunct that became fully bound with parameter
    /// `i` is false.
    fn premises_hold(&self, i: usize) -> Result<bool, Finding> {
        let bound: BTreeSet<&str> = self.params[..=i].iter().map(|p| p.name.as_str()).collect();
        let new = self.params[i].name.as_str();
        let none = BTreeMap::new();
        for (c, fv) in &self.premises {
            if !fv.contains(new) || !fv.iter().all(|v| bound.contains(v.as_str())) {
                continue;
            }
            match self.ev.eval_bool(c, &mut Scope::new(&self.store, &none)) {
                Ok(true) => {}
                Ok(false) => return Ok(false),
                Err(e) => return Err(Finding::Error(self.store.clone(), e)),
            }
        }
        Ok(true)
    }
}
