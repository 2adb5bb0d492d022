//! Evaluation of expressions over concrete stores.
//!
//! Quantifiers are evaluated by enumeration, so their range has to be
//! recoverable: from the binder's domain (`index(a)`, `upto(n)`, ...) or
//! from comparisons in the body that make it trivially true (for `forall`)
//! or false (for `exists`) outside some interval. `l(i) < n` bounds `i`
//! because `l(i)` expands to `2 * i + 1`, which grows at least as fast as
//! `i` over the naturals.

use std::collections::{BTreeMap, HashMap};

use crate::diag::SourceSpan;
use crate::model::{floor_div, BinOp, Domain, Expr, ExprKind, Quantifier, SemType, UnOp, Value};
use crate::prelude::TheoryEnv;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalErrorKind {
    #[error("index {index} out of bounds for length {len}")]
    OutOfBounds { index: i64, len: usize },
    #[error("division by zero")]
    DivByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("cannot find a finite range for `{0}`")]
    UnboundedQuantifier(String),
    #[error("range of `{0}` has {1} elements, more than the evaluator enumerates")]
    RangeTooLarge(String, i128),
    #[error("argument {arg} of `{func}` is outside its domain")]
    Domain { func: String, arg: String },
    #[error("`{0}` has no runtime meaning")]
    NoRuntimeMeaning(String),
    #[error("`{0}` is not bound")]
    Unbound(String),
    #[error("{0}")]
    Type(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {kind}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub span: SourceSpan,
}

fn err<T>(kind: EvalErrorKind, e: &Expr) -> Result<T, EvalError> {
    Err(EvalError {
        kind,
        span: e.span.clone(),
    })
}

/// Variable bindings: the current store, entry values (`x_0`) and
/// quantifier binders, innermost last.
#[derive(Clone, Debug, Default)]
pub struct Scope<'a> {
    pub vars: Option<&'a BTreeMap<String, Value>>,
    pub olds: Option<&'a BTreeMap<String, Value>>,
    bound: Vec<(String, Value)>,
}

impl<'a> Scope<'a> {
    pub fn new(vars: &'a BTreeMap<String, Value>, olds: &'a BTreeMap<String, Value>) -> Self {
        Scope {
            vars: Some(vars),
            olds: Some(olds),
            bound: Vec::new(),
        }
    }

    pub fn lookup(&self, x: &str) -> Option<&Value> {
        self.bound
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, v)| v)
            .or_else(|| self.vars.and_then(|m| m.get(x)))
    }

    pub fn push(&mut self, x: &str, v: Value) {
        self.bound.push((x.to_string(), v));
    }

    pub fn pop(&mut self) {
        self.bound.pop();
    }
}

/// Largest quantifier range the evaluator will enumerate.
pub const MAX_RANGE: i128 = 1 << 22;

/// Macro expansions followed while looking for quantifier bounds.
const MAX_LINEAR_DEPTH: usize = 16;

pub struct Evaluator<'e> {
    pub env: &'e TheoryEnv,
}

type Bound = Option<i64>;

fn min_b(a: Bound, b: Bound) -> Bound {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) | (None, x) => x,
    }
}

fn max_b(a: Bound, b: Bound) -> Bound {
    Some(a?.max(b?))
}

impl<'e> Evaluator<'e> {
    pub fn new(env: &'e TheoryEnv) -> Self {
        Evaluator { env }
    }

    pub fn eval_bool(&self, e: &Expr, s: &mut Scope) -> Result<bool, EvalError> {
        match self.eval(e, s)? {
            Value::Bool(b) => Ok(b),
            v => err(
                EvalErrorKind::Type(format!("expected a boolean, got {v}")),
                e,
            ),
        }
    }

    pub fn eval_int(&self, e: &Expr, s: &mut Scope) -> Result<i64, EvalError> {
        match self.eval(e, s)? {
            Value::Int(v) => Ok(v),
            v => err(
                EvalErrorKind::Type(format!("expected an integer, got {v}")),
                e,
            ),
        }
    }

    fn eval_vec(&self, e: &Expr, s: &mut Scope) -> Result<Vec<i64>, EvalError> {
        match self.eval(e, s)? {
            Value::Vector(v) => Ok(v),
            v => err(
                EvalErrorKind::Type(format!("expected a vector, got {v}")),
                e,
            ),
        }
    }

    pub fn eval(&self, e: &Expr, s: &mut Scope) -> Result<Value, EvalError> {
        use EvalErrorKind::*;
        Ok(match &e.kind {
            ExprKind::Int(v) => Value::Int(*v),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Var(x) => match s.lookup(x) {
                Some(v) => v.clone(),
                None => return err(Unbound(x.clone()), e),
            },
            ExprKind::Old(x) => match s.olds.and_then(|m| m.get(x)) {
                Some(v) => v.clone(),
                None => return err(Unbound(format!("{x}_0")), e),
            },
            ExprKind::Unary(UnOp::Neg, a) => match self.eval_int(a, s)?.checked_neg() {
                Some(v) => Value::Int(v),
                None => return err(Overflow, e),
            },
            ExprKind::Unary(UnOp::Not, a) => Value::Bool(!self.eval_bool(a, s)?),
            ExprKind::Binary(op, a, b) => match op {
                BinOp::And => Value::Bool(self.eval_bool(a, s)? && self.eval_bool(b, s)?),
                BinOp::Or => Value::Bool(self.eval_bool(a, s)? || self.eval_bool(b, s)?),
                BinOp::Implies => Value::Bool(!self.eval_bool(a, s)? || self.eval_bool(b, s)?),
                BinOp::Iff => Value::Bool(self.eval_bool(a, s)? == self.eval_bool(b, s)?),
                BinOp::Eq => Value::Bool(self.eval(a, s)? == self.eval(b, s)?),
                BinOp::Ne => Value::Bool(self.eval(a, s)? != self.eval(b, s)?),
                _ => {
                    let (x, y) = (self.eval_int(a, s)?, self.eval_int(b, s)?);
                    let r = match op {
                        BinOp::Add => x.checked_add(y).map(Value::Int),
                        BinOp::Sub => x.checked_sub(y).map(Value::Int),
                        BinOp::Mul => x.checked_mul(y).map(Value::Int),
                        BinOp::Div if y == 0 => return err(DivByZero, e),
                        BinOp::Div => floor_div(x, y).map(Value::Int),
                        BinOp::Lt => Some(Value::Bool(x < y)),
                        BinOp::Le => Some(Value::Bool(x <= y)),
                        BinOp::Gt => Some(Value::Bool(x > y)),
                        BinOp::Ge => Some(Value::Bool(x >= y)),
                        _ => unreachable!("logical operators handled above"),
                    };
                    match r {
                        Some(v) => v,
                        None => return err(Overflow, e),
                    }
                }
            },
            ExprKind::Ite(c, t, f) => {
                if self.eval_bool(c, s)? {
                    self.eval(t, s)?
                } else {
                    self.eval(f, s)?
                }
            }
            ExprKind::Quant(q, x, d, body) => Value::Bool(self.quantifier(*q, x, d, body, e, s)?),
            ExprKind::Len(a) => Value::Int(self.eval_vec(a, s)?.len() as i64),
            ExprKind::Get(a, i) => {
                let v = self.eval_vec(a, s)?;
                let i = self.eval_int(i, s)?;
                match usize::try_from(i).ok().and_then(|k| v.get(k)) {
                    Some(x) => Value::Int(*x),
                    None => {
                        return err(
                            OutOfBounds {
                                index: i,
                                len: v.len(),
                            },
                            e,
                        )
                    }
                }
            }
            ExprKind::Set(a, i, x) => {
                let mut v = self.eval_vec(a, s)?;
                let i = self.eval_int(i, s)?;
                let x = self.eval_int(x, s)?;
                match usize::try_from(i).ok().filter(|k| *k < v.len()) {
                    Some(k) => v[k] = x,
                    None => {
                        return err(
                            OutOfBounds {
                                index: i,
                                len: v.len(),
                            },
                            e,
                        )
                    }
                }
                Value::Vector(v)
            }
            ExprKind::App(f, args) => {
                let vals: Vec<Value> = args
                    .iter()
                    .map(|a| self.eval(a, s))
                    .collect::<Result<_, _>>()?;
                self.apply(f, &vals, e)?
            }
        })
    }

    /// Applies a theory function to values, checking parameter domains.
    pub fn apply(&self, f: &str, vals: &[Value], at: &Expr) -> Result<Value, EvalError> {
        if (f, vals.len()) == ("perm", 2) {
            if let (Some(a), Some(b)) = (vals[0].as_vector(), vals[1].as_vector()) {
                return Ok(Value::Bool(is_permutation(a, b)));
            }
        }
        let Some(def) = self.env.func(f, vals.len()) else {
            return err(EvalErrorKind::NoRuntimeMeaning(f.to_string()), at);
        };
        let Some(body) = &def.body else {
            return err(EvalErrorKind::NoRuntimeMeaning(f.to_string()), at);
        };
        let params: BTreeMap<String, Value> = def
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(vals.iter().cloned())
            .collect();
        let none = BTreeMap::new();
        let mut inner = Scope::new(&params, &none);
        for (p, v) in def.params.iter().zip(vals) {
            let ok = match &p.domain {
                Domain::Type(t) => v.has_type(*t),
                d => {
                    let x = Expr::var(p.name.clone());
                    match d.constraint(&x) {
                        Some(c) => self.eval_bool(&c, &mut inner)?,
                        None => true,
                    }
                }
            };
            if !ok {
                return err(
                    EvalErrorKind::Domain {
                        func: f.to_string(),
                        arg: p.name.clone(),
                    },
                    at,
                );
            }
        }
        self.eval(body, &mut inner).map_err(|mut e| {
            if e.span.is_synthetic() {
                e.span = at.span.clone();
            }
            e
        })
    }

    fn quantifier(
        &self,
        q: Quantifier,
        x: &str,
        d: &Domain,
        body: &Expr,
        at: &Expr,
        s: &mut Scope,
    ) -> Result<bool, EvalError> {
        let ty = d.base_type();
        if ty == SemType::Bool {
            for b in [false, true] {
                s.push(x, Value::Bool(b));
                let r = self.eval_bool(body, s);
                s.pop();
                if r? == (q == Quantifier::Exists) {
                    return Ok(q == Quantifier::Exists);
                }
            }
            return Ok(q == Quantifier::Forall);
        }
        if ty == SemType::Vector {
            return err(EvalErrorKind::UnboundedQuantifier(x.to_string()), at);
        }
        let (mut lo, mut hi): (Bound, Bound) = match d {
            Domain::Type(SemType::Nat) => (Some(0), None),
            Domain::Type(_) => (None, None),
            Domain::Index(a) => (Some(0), Some(self.eval_vec(a, s)?.len() as i64)),
            Domain::Upto(n) => (Some(0), Some(self.eval_int(n, s)?.saturating_add(1))),
            Domain::Below(n) => (Some(0), Some(self.eval_int(n, s)?)),
        };
        let exists = q == Quantifier::Exists;
        // Outside [lo, hi) the body is constant: true for forall, false for exists.
        lo = max_lo(lo, self.lower(body, x, !exists, s));
        let nonneg = lo.is_some_and(|l| l >= 0);
        hi = min_b(hi, self.upper(body, x, !exists, s, nonneg));
        let (Some(lo), Some(hi)) = (lo, hi) else {
            return err(EvalErrorKind::UnboundedQuantifier(x.to_string()), at);
        };
        let count = hi as i128 - lo as i128;
        if count > MAX_RANGE {
            return err(EvalErrorKind::RangeTooLarge(x.to_string(), count), at);
        }
        for i in lo..hi.max(lo) {
            s.push(x, Value::Int(i));
            let r = self.eval_bool(body, s);
            s.pop();
            if r? == exists {
                return Ok(exists);
            }
        }
        Ok(!exists)
    }

    /// Exclusive upper bound beyond which `e` has the truth value `want`.
    /// `nonneg` says the binder only ranges over naturals there, which lets
    /// `c * x + r` with `c >= 1` bound `x` from above.
    fn upper(&self, e: &Expr, x: &str, want: bool, s: &mut Scope, nonneg: bool) -> Bound {
        match &e.kind {
            ExprKind::Bool(b) if *b == want => Some(i64::MIN),
            ExprKind::Unary(UnOp::Not, a) => self.upper(a, x, !want, s, nonneg),
            ExprKind::Binary(BinOp::Implies, a, b) => {
                let r = self.upper(b, x, want, s, nonneg);
                if want {
                    min_b(self.upper(a, x, false, s, nonneg), r)
                } else {
                    max_b(self.upper(a, x, true, s, nonneg), r)
                }
            }
            ExprKind::Binary(op @ (BinOp::And | BinOp::Or), a, b) => {
                let (l, r) = (
                    self.upper(a, x, want, s, nonneg),
                    self.upper(b, x, want, s, nonneg),
                );
                // `and` is true only where both are; false where either is.
                if (*op == BinOp::And) == want {
                    max_b(l, r)
                } else {
                    min_b(l, r)
                }
            }
            ExprKind::Binary(op, a, b) if op.is_comparison() && !want => {
                // The atom is false wherever `x` is large: x grows on one side only.
                let (lin, h, op) = match (self.linear(a, x, 0), self.linear(b, x, 0)) {
                    (Some((c, r)), Some((0, h))) if c > 0 => ((c, r), h, *op),
                    (Some((0, h)), Some((c, r))) if c > 0 => ((c, r), h, flip(*op)),
                    _ => return None,
                };
                let (c, r) = lin;
                if c != 1 && !nonneg {
                    return None;
                }
                let h = self.eval_int(&h, s).ok()?;
                let r = self.eval_int(&r, s).ok()?;
                let t = h.checked_sub(r)?;
                // c*x + r OP h with c >= 1 and x >= 0 (or c = 1) implies x OP' h - r.
                match op {
                    BinOp::Lt => Some(t),
                    BinOp::Le | BinOp::Eq => t.checked_add(1),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Inclusive lower bound below which `e` has the truth value `want`.
    /// Only unit-coefficient comparisons are used.
    fn lower(&self, e: &Expr, x: &str, want: bool, s: &mut Scope) -> Bound {
        match &e.kind {
            ExprKind::Bool(b) if *b == want => Some(i64::MAX),
            ExprKind::Unary(UnOp::Not, a) => self.lower(a, x, !want, s),
            ExprKind::Binary(BinOp::Implies, a, b) => {
                let r = self.lower(b, x, want, s);
                if want {
                    max_lo(self.lower(a, x, false, s), r)
                } else {
                    min_lo(self.lower(a, x, true, s), r)
                }
            }
            ExprKind::Binary(op @ (BinOp::And | BinOp::Or), a, b) => {
                let (l, r) = (self.lower(a, x, want, s), self.lower(b, x, want, s));
                if (*op == BinOp::And) == want {
                    min_lo(l, r)
                } else {
                    max_lo(l, r)
                }
            }
            ExprKind::Binary(op, a, b) if op.is_comparison() && !want => {
                let (r, h, op) = match (self.linear(a, x, 0), self.linear(b, x, 0)) {
                    (Some((1, r)), Some((0, h))) => (r, h, *op),
                    (Some((0, h)), Some((1, r))) => (r, h, flip(*op)),
                    _ => return None,
                };
                let h = self.eval_int(&h, s).ok()?;
                let r = self.eval_int(&r, s).ok()?;
                let t = h.checked_sub(r)?;
                // x + r OP h, false for every x below the returned bound.
                match op {
                    BinOp::Gt => t.checked_add(1),
                    BinOp::Ge | BinOp::Eq => Some(t),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// `e` as `c * x + r` with `r` free of `x`, expanding macros.
    fn linear(&self, e: &Expr, x: &str, depth: usize) -> Option<(i64, Expr)> {
        if !e.free_vars().contains(x) {
            return Some((0, e.clone()));
        }
        match &e.kind {
            ExprKind::Var(y) if y == x => Some((1, Expr::int(0))),
            ExprKind::Unary(UnOp::Neg, a) => {
                let (c, r) = self.linear(a, x, depth)?;
                Some((c.checked_neg()?, Expr::neg(r)))
            }
            ExprKind::Binary(op @ (BinOp::Add | BinOp::Sub), a, b) => {
                let (ca, ra) = self.linear(a, x, depth)?;
                let (cb, rb) = self.linear(b, x, depth)?;
                let c = if *op == BinOp::Add {
                    ca.checked_add(cb)?
                } else {
                    ca.checked_sub(cb)?
                };
                Some((c, Expr::bin(*op, ra, rb)))
            }
            ExprKind::Binary(BinOp::Mul, a, b) => match (&a.kind, &b.kind) {
                (ExprKind::Int(k), _) => {
                    let (c, r) = self.linear(b, x, depth)?;
                    Some((c.checked_mul(*k)?, Expr::bin(BinOp::Mul, Expr::int(*k), r)))
                }
                (_, ExprKind::Int(k)) => {
                    let (c, r) = self.linear(a, x, depth)?;
                    Some((c.checked_mul(*k)?, Expr::bin(BinOp::Mul, r, Expr::int(*k))))
                }
                _ => None,
            },
            ExprKind::App(f, args) if depth < MAX_LINEAR_DEPTH => {
                let def = self.env.func(f, args.len()).filter(|d| d.is_macro())?;
                let bind: HashMap<String, Expr> = def
                    .params
                    .iter()
                    .map(|p| p.name.clone())
                    .zip(args.iter().cloned())
                    .collect();
                self.linear(&def.body.as_ref()?.substitute(&bind), x, depth + 1)
            }
            _ => None,
        }
    }
}

fn min_lo(a: Bound, b: Bound) -> Bound {
    Some(a?.min(b?))
}

fn max_lo(a: Bound, b: Bound) -> Bound {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) | (None, x) => x,
    }
}

fn flip(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Le => BinOp::Ge,
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        o => o,
    }
}

/// Multiset equality.
pub fn is_permutation(a: &[i64], b: &[i64]) -> bool {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable();
    y.sort_unstable();
    x == y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr;
    use crate::prelude::builtin_theory;

    fn eval_in(src: &str, vars: &[(&str, Value)]) -> Result<Value, EvalError> {
        let env = builtin_theory();
        let e = parse_expr(src).expect("parses");
        let store: BTreeMap<String, Value> = vars
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        let olds = BTreeMap::new();
        Evaluator::new(&env).eval(&e, &mut Scope::new(&store, &olds))
    }

    fn holds(src: &str, vars: &[(&str, Value)]) -> bool {
        eval_in(src, vars).expect("evaluates") == Value::Bool(true)
    }

    #[test]
    fn theory_functions() {
        let a = ("a", Value::Vector(vec![5, 3, 4]));
        assert!(holds("heap(a, 0, 3)", std::slice::from_ref(&a)));
        assert!(!holds(
            "heap(a, 0, 3)",
            &[("a", Value::Vector(vec![3, 5, 4]))]
        ));
        let v = |xs: &[i64]| Value::Vector(xs.to_vec());
        assert!(holds(
            "perm(b, c)",
            &[("b", v(&[1, 2, 2])), ("c", v(&[2, 1, 2]))]
        ));
        assert!(!holds(
            "perm(b, c)",
            &[("b", v(&[1, 2, 2])), ("c", v(&[2, 1, 1]))]
        ));
        assert!(holds("sorted(b)", &[("b", v(&[1, 2, 2, 7]))]));
        assert!(holds("partitioned(b, 2)", &[("b", v(&[2, 1, 5, 9]))]));
        assert!(!holds("partitioned(b, 1)", &[("b", v(&[7, 6, 5, 9]))]));
        assert_eq!(
            eval_in("swap(a, 0, 2)", &[a]).unwrap(),
            Value::Vector(vec![4, 3, 5])
        );
    }

    #[test]
    fn arithmetic_is_floored() {
        assert_eq!(eval_in("-7 / 2", &[]).unwrap(), Value::Int(-4));
        assert_eq!(eval_in("7 / -2", &[]).unwrap(), Value::Int(-4));
        assert_eq!(
            eval_in("1 / 0", &[]).unwrap_err().kind,
            EvalErrorKind::DivByZero
        );
    }

    #[test]
    fn index_errors_are_reported() {
        let e = eval_in("a[3]", &[("a", Value::Vector(vec![1, 2, 3]))]).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::OutOfBounds { index: 3, len: 3 });
    }

    #[test]
    fn quantifier_ranges_come_from_the_body() {
        let a = ("a", Value::Vector(vec![9, 4, 8, 1, 2]));
        let k = ("k", Value::Int(1));
        let n = ("n", Value::Int(5));
        let inv = "forall (i: nat): k <= i and i < n and i /= k and (l(i) = k or r(i) = k) => a[i] <= a[k]";
        assert!(holds(inv, &[a.clone(), k.clone(), n.clone()]));
        assert!(holds(
            "forall (i: nat): l(i) < n => a[i] >= a[l(i)]",
            &[a.clone(), n.clone()]
        ));
        assert!(holds(
            "exists (i: nat): i < n and a[i] = 1",
            &[a.clone(), n]
        ));
        let e = eval_in("forall (i: int): i > 0 => i > -1", &[]).unwrap_err();
        assert!(matches!(e.kind, EvalErrorKind::UnboundedQuantifier(_)));
    }

    #[test]
    fn vacuous_quantifiers() {
        assert!(holds(
            "forall (i: index(a)): a[i] > 100",
            &[("a", Value::Vector(vec![]))]
        ));
        assert!(!holds(
            "exists (i: index(a)): true",
            &[("a", Value::Vector(vec![]))]
        ));
        assert!(holds("forall (b: bool): b or not b", &[]));
    }

    #[test]
    fn permutation_check() {
        assert!(is_permutation(&[3, 1, 2], &[1, 2, 3]));
        assert!(!is_permutation(&[1, 1], &[1]));
    }
}
