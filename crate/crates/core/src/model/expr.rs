//! First-order expressions: the tree, constructors, traversal and substitution.

use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::diag::SourceSpan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SemType {
    Int,
    Nat,
    Bool,
    Vector,
}

impl SemType {
    pub fn is_numeric(self) -> bool {
        matches!(self, SemType::Int | SemType::Nat)
    }

    /// Nat and Int share a carrier; everything else is only compatible with itself.
    pub fn compatible(self, other: SemType) -> bool {
        self == other || (self.is_numeric() && other.is_numeric())
    }

    pub fn keyword(self) -> &'static str {
        match self {
            SemType::Int => "int",
            SemType::Nat => "nat",
            SemType::Bool => "bool",
            SemType::Vector => "vector",
        }
    }
}

impl std::fmt::Display for SemType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.keyword())
    }
}

/// The range of a bound variable or parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Type(SemType),
    /// `index(a)`: `0 <= i < len(a)`.
    Index(Box<Expr>),
    /// `upto(n)`: `0 <= i <= n`.
    Upto(Box<Expr>),
    /// `below(n)`: `0 <= i < n`.
    Below(Box<Expr>),
}

impl Domain {
    pub fn base_type(&self) -> SemType {
        match self {
            Domain::Type(t) => *t,
            _ => SemType::Nat,
        }
    }

    /// Membership constraint for `x`, or `None` when the domain is the whole sort.
    pub fn constraint(&self, x: &Expr) -> Option<Expr> {
        let zero = || Expr::int(0);
        match self {
            Domain::Type(SemType::Nat) => Some(Expr::bin(BinOp::Le, zero(), x.clone())),
            Domain::Type(_) => None,
            Domain::Index(a) => Some(Expr::and(
                Expr::bin(BinOp::Le, zero(), x.clone()),
                Expr::bin(BinOp::Lt, x.clone(), Expr::len((**a).clone())),
            )),
            Domain::Upto(n) => Some(Expr::and(
                Expr::bin(BinOp::Le, zero(), x.clone()),
                Expr::bin(BinOp::Le, x.clone(), (**n).clone()),
            )),
            Domain::Below(n) => Some(Expr::and(
                Expr::bin(BinOp::Le, zero(), x.clone()),
                Expr::bin(BinOp::Lt, x.clone(), (**n).clone()),
            )),
        }
    }

    fn map_exprs(&self, f: &mut impl FnMut(&Expr) -> Expr) -> Domain {
        match self {
            Domain::Type(t) => Domain::Type(*t),
            Domain::Index(e) => Domain::Index(Box::new(f(e))),
            Domain::Upto(e) => Domain::Upto(Box::new(f(e))),
            Domain::Below(e) => Domain::Below(Box::new(f(e))),
        }
    }

    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Domain::Type(_) => None,
            Domain::Index(e) | Domain::Upto(e) | Domain::Below(e) => Some(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Floor division.
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Iff,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Ne => "/=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "=>",
            BinOp::Iff => "<=>",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Implies | BinOp::Iff)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Var(String),
    /// Entry value of a value-result parameter (`a_0`).
    Old(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Quant(Quantifier, String, Domain, Box<Expr>),
    Len(Box<Expr>),
    Get(Box<Expr>, Box<Expr>),
    Set(Box<Expr>, Box<Expr>, Box<Expr>),
    App(String, Vec<Expr>),
}

/// An expression node. Equality and hashing look at structure only; spans and
/// type annotations are ignored.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
    pub ty: Option<SemType>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state)
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Self {
        Expr {
            kind,
            span,
            ty: None,
        }
    }

    pub fn synth(kind: ExprKind) -> Self {
        Expr::new(kind, SourceSpan::synthetic())
    }

    pub fn int(v: i64) -> Self {
        Expr::synth(ExprKind::Int(v))
    }

    pub fn boolean(b: bool) -> Self {
        Expr::synth(ExprKind::Bool(b))
    }

    pub fn tt() -> Self {
        Expr::boolean(true)
    }

    pub fn ff() -> Self {
        Expr::boolean(false)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::synth(ExprKind::Var(name.into()))
    }

    pub fn old(name: impl Into<String>) -> Self {
        Expr::synth(ExprKind::Old(name.into()))
    }

    pub fn len(v: Expr) -> Self {
        Expr::synth(ExprKind::Len(Box::new(v)))
    }

    pub fn get(v: Expr, i: Expr) -> Self {
        Expr::synth(ExprKind::Get(Box::new(v), Box::new(i)))
    }

    pub fn set(v: Expr, i: Expr, x: Expr) -> Self {
        Expr::synth(ExprKind::Set(Box::new(v), Box::new(i), Box::new(x)))
    }

    pub fn app(f: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::synth(ExprKind::App(f.into(), args))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        let span = a.span.to(&b.span);
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), span)
    }

    pub fn and(a: Expr, b: Expr) -> Self {
        Expr::bin(BinOp::And, a, b)
    }

    pub fn or(a: Expr, b: Expr) -> Self {
        Expr::bin(BinOp::Or, a, b)
    }

    pub fn implies(a: Expr, b: Expr) -> Self {
        Expr::bin(BinOp::Implies, a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Self {
        let span = a.span.clone();
        Expr::new(ExprKind::Unary(UnOp::Not, Box::new(a)), span)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Self {
        let span = a.span.clone();
        Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(a)), span)
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Self {
        Expr::synth(ExprKind::Ite(Box::new(c), Box::new(t), Box::new(e)))
    }

    pub fn forall(x: impl Into<String>, dom: Domain, body: Expr) -> Self {
        Expr::synth(ExprKind::Quant(
            Quantifier::Forall,
            x.into(),
            dom,
            Box::new(body),
        ))
    }

    pub fn exists(x: impl Into<String>, dom: Domain, body: Expr) -> Self {
        Expr::synth(ExprKind::Quant(
            Quantifier::Exists,
            x.into(),
            dom,
            Box::new(body),
        ))
    }

    /// Left-nested conjunction; `true` for an empty list.
    pub fn conj(items: impl IntoIterator<Item = Expr>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::tt(),
            Some(first) => it.fold(first, Expr::and),
        }
    }

    /// Left-nested disjunction; `false` for an empty list.
    pub fn disj(items: impl IntoIterator<Item = Expr>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::ff(),
            Some(first) => it.fold(first, Expr::or),
        }
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = span;
        self
    }

    pub fn is_true(&self) -> bool {
        matches!(self.kind, ExprKind::Bool(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self.kind, ExprKind::Bool(false))
    }

    /// Top-level conjuncts, flattening nested `and` on both sides.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match &e.kind {
                ExprKind::Binary(BinOp::And, a, b) => {
                    go(a, out);
                    go(b, out);
                }
                _ => out.push(e),
            }
        }
        go(self, &mut out);
        out
    }

    /// Immediate subexpressions, including domain expressions of quantifiers.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::Old(_) => vec![],
            ExprKind::Unary(_, a) | ExprKind::Len(a) => vec![a],
            ExprKind::Binary(_, a, b) | ExprKind::Get(a, b) => vec![a, b],
            ExprKind::Ite(a, b, c) | ExprKind::Set(a, b, c) => vec![a, b, c],
            ExprKind::Quant(_, _, d, b) => {
                d.expr().into_iter().chain(std::iter::once(&**b)).collect()
            }
            ExprKind::App(_, args) => args.iter().collect(),
        }
    }

    /// Pre-order visit of every node.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn any(&self, pred: &mut impl FnMut(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match &self.kind {
            ExprKind::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            ExprKind::Quant(_, x, d, body) => {
                if let Some(e) = d.expr() {
                    e.collect_free(bound, out);
                }
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    /// Names of value-result parameters referenced through `Old`.
    pub fn olds(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let ExprKind::Old(x) = &e.kind {
                out.insert(x.clone());
            }
        });
        out
    }

    pub fn has_quantifier(&self) -> bool {
        self.any(&mut |e| matches!(e.kind, ExprKind::Quant(..)))
    }

    /// True when no variable (free or `Old`) occurs.
    pub fn is_ground(&self) -> bool {
        !self.any(&mut |e| matches!(e.kind, ExprKind::Var(_) | ExprKind::Old(_)))
    }

    pub fn applied_functions(&self) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let ExprKind::App(f, args) = &e.kind {
                out.insert((f.clone(), args.len()));
            }
        });
        out
    }

    /// Rebuilds the node with `f` applied to each immediate child. Quantifier
    /// binders are kept as they are; callers handle scoping themselves.
    pub fn map_children(&self, f: &mut impl FnMut(&Expr) -> Expr) -> Expr {
        let kind = match &self.kind {
            k @ (ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::Old(_)) => {
                k.clone()
            }
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(f(a))),
            ExprKind::Binary(op, a, b) => ExprKind::Binary(*op, Box::new(f(a)), Box::new(f(b))),
            ExprKind::Ite(a, b, c) => ExprKind::Ite(Box::new(f(a)), Box::new(f(b)), Box::new(f(c))),
            ExprKind::Quant(q, x, d, b) => {
                ExprKind::Quant(*q, x.clone(), d.map_exprs(f), Box::new(f(b)))
            }
            ExprKind::Len(a) => ExprKind::Len(Box::new(f(a))),
            ExprKind::Get(a, i) => ExprKind::Get(Box::new(f(a)), Box::new(f(i))),
            ExprKind::Set(a, i, x) => ExprKind::Set(Box::new(f(a)), Box::new(f(i)), Box::new(f(x))),
            ExprKind::App(g, args) => ExprKind::App(g.clone(), args.iter().map(&mut *f).collect()),
        };
        Expr {
            kind,
            span: self.span.clone(),
            ty: self.ty,
        }
    }

    /// Replaces free occurrences of the given variables. Bound variables that
    /// shadow a binding suspend it; binders that would capture a free variable
    /// of a replacement are renamed.
    pub fn substitute(&self, vars: &HashMap<String, Expr>) -> Expr {
        if vars.is_empty() {
            return self.clone();
        }
        self.subst(vars, &HashMap::new())
    }

    /// Replaces `Old(x)` nodes.
    pub fn substitute_old(&self, olds: &HashMap<String, Expr>) -> Expr {
        if olds.is_empty() {
            return self.clone();
        }
        self.subst(&HashMap::new(), olds)
    }

    pub fn substitute_one(&self, x: &str, e: &Expr) -> Expr {
        let mut m = HashMap::new();
        m.insert(x.to_string(), e.clone());
        self.substitute(&m)
    }

    /// Simultaneous substitution of variables and `Old` nodes.
    pub fn subst(&self, vars: &HashMap<String, Expr>, olds: &HashMap<String, Expr>) -> Expr {
        match &self.kind {
            ExprKind::Var(x) => match vars.get(x) {
                Some(r) => r.clone(),
                None => self.clone(),
            },
            ExprKind::Old(x) => match olds.get(x) {
                Some(r) => r.clone(),
                None => self.clone(),
            },
            ExprKind::Quant(q, x, d, body) => {
                let dom = d.map_exprs(&mut |e| e.subst(vars, olds));
                let mut inner: HashMap<String, Expr> = vars.clone();
                inner.remove(x);
                let body_free = body.free_vars();
                let mut repl_free = BTreeSet::new();
                for (k, r) in &inner {
                    if body_free.contains(k) {
                        repl_free.extend(r.free_vars());
                    }
                }
                for r in olds.values() {
                    repl_free.extend(r.free_vars());
                }
                let (name, body) = if repl_free.contains(x) {
                    let avoid: BTreeSet<String> =
                        body_free.iter().chain(repl_free.iter()).cloned().collect();
                    let fresh = fresh_name(x, &avoid);
                    inner.insert(x.clone(), Expr::var(fresh.clone()));
                    (fresh, body.subst(&inner, olds))
                } else {
                    (x.clone(), body.subst(&inner, olds))
                };
                Expr {
                    kind: ExprKind::Quant(*q, name, dom, Box::new(body)),
                    span: self.span.clone(),
                    ty: self.ty,
                }
            }
            _ => self.map_children(&mut |c| c.subst(vars, olds)),
        }
    }

    /// Drops spans and type annotations, for comparisons in tests and caches.
    pub fn strip(&self) -> Expr {
        let mut e = self.map_children(&mut |c| c.strip());
        e.span = SourceSpan::synthetic();
        e.ty = None;
        e
    }
}

/// Integer division rounding toward negative infinity; `None` on a zero
/// divisor or overflow.
pub fn floor_div(x: i64, y: i64) -> Option<i64> {
    let q = x.checked_div(y)?;
    if x % y != 0 && ((x < 0) != (y < 0)) {
        Some(q - 1)
    } else {
        Some(q)
    }
}

/// `base_1`, `base_2`, ... first one not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded iterator")
}
