//! SMT-LIB 2 encoding of verification conditions.
//!
//! Vectors are an uninterpreted sort `Vec` observed through `len` and
//! `elem`; `upd` is pointwise update (a no-op outside the bounds).
//! Program variables, entry values and theory symbols get the prefixes
//! `v.`, `o.` and `f.` so they never collide with each other or with the
//! fixed vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::model::{BinOp, Domain, Expr, ExprKind, Quantifier, SemType, UnOp};
use crate::prelude::{FuncDef, TheoryEnv};
use crate::vcgen::Vc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("no definition of `{0}` with {1} arguments")]
    UnknownFunction(String, usize),
    #[error("expanding `{0}` does not terminate")]
    CyclicExpansion(String),
}

const PRELUDE: &str = "\
(declare-sort Vec 0)
(declare-fun len (Vec) Int)
(declare-fun elem (Vec Int) Int)
(assert (forall ((v Vec)) (! (<= 0 (len v)) :pattern ((len v)))))
";

// Only emitted when some formula updates a vector: on satisfiable queries
// the quantified `elem` axiom sends model search into long detours.
const UPD_PRELUDE: &str = "\
(declare-fun upd (Vec Int Int) Vec)
(assert (forall ((v Vec) (i Int) (x Int)) (! (= (len (upd v i x)) (len v)) :pattern ((upd v i x)))))
(assert (forall ((v Vec) (i Int) (x Int) (j Int))
  (! (= (elem (upd v i x) j) (ite (and (= j i) (<= 0 i) (< i (len v))) x (elem v j)))
     :pattern ((elem (upd v i x) j)))))
";

pub fn var_symbol(x: &str) -> String {
    format!("v.{x}")
}

pub fn old_symbol(x: &str) -> String {
    format!("o.{x}")
}

fn func_symbol(f: &str, arity: usize) -> String {
    format!("f.{f}.{arity}")
}

fn sort(t: SemType) -> &'static str {
    match t {
        SemType::Int | SemType::Nat => "Int",
        SemType::Bool => "Bool",
        SemType::Vector => "Vec",
    }
}

/// Translates expressions, expanding quantifier-free transparent
/// definitions in place and recording every other theory symbol used.
struct Encoder<'a> {
    env: &'a TheoryEnv,
    used: BTreeSet<(String, usize)>,
    depth: usize,
}

/// Nesting bound for macro expansion; only reached by recursive definitions.
const MAX_EXPANSION_DEPTH: usize = 64;

impl<'a> Encoder<'a> {
    fn new(env: &'a TheoryEnv) -> Self {
        Encoder {
            env,
            used: BTreeSet::new(),
            depth: 0,
        }
    }

    fn func(&self, f: &str, n: usize) -> Result<&'a FuncDef, EncodeError> {
        self.env
            .func(f, n)
            .ok_or_else(|| EncodeError::UnknownFunction(f.to_string(), n))
    }

    fn expr(&mut self, e: &Expr) -> Result<String, EncodeError> {
        Ok(match &e.kind {
            ExprKind::Int(v) if *v < 0 => format!("(- {})", v.unsigned_abs()),
            ExprKind::Int(v) => v.to_string(),
            ExprKind::Bool(b) => b.to_string(),
            ExprKind::Var(x) => var_symbol(x),
            ExprKind::Old(x) => old_symbol(x),
            ExprKind::Unary(UnOp::Neg, a) => format!("(- {})", self.expr(a)?),
            ExprKind::Unary(UnOp::Not, a) => format!("(not {})", self.expr(a)?),
            ExprKind::Binary(op, a, b) => {
                let (x, y) = (self.expr(a)?, self.expr(b)?);
                match op {
                    BinOp::Div => match b.kind {
                        ExprKind::Int(d) if d > 0 => format!("(div {x} {y})"),
                        // SMT-LIB `div` is Euclidean; adjust to floor for negative divisors.
                        _ => format!("(ite (or (> {y} 0) (= (mod {x} {y}) 0)) (div {x} {y}) (- (div {x} {y}) 1))"),
                    },
                    BinOp::Ne => format!("(not (= {x} {y}))"),
                    _ => {
                        let s = match op {
                            BinOp::Add => "+",
                            BinOp::Sub => "-",
                            BinOp::Mul => "*",
                            BinOp::Eq | BinOp::Iff => "=",
                            BinOp::Lt => "<",
                            BinOp::Le => "<=",
                            BinOp::Gt => ">",
                            BinOp::Ge => ">=",
                            BinOp::And => "and",
                            BinOp::Or => "or",
                            BinOp::Implies => "=>",
                            BinOp::Div | BinOp::Ne => unreachable!(),
                        };
                        format!("({s} {x} {y})")
                    }
                }
            }
            ExprKind::Ite(c, t, f) => format!(
                "(ite {} {} {})",
                self.expr(c)?,
                self.expr(t)?,
                self.expr(f)?
            ),
            ExprKind::Quant(q, x, d, body) => {
                let v = var_symbol(x);
                let b = self.expr(body)?;
                let c = d
                    .constraint(&Expr::var(x.clone()))
                    .map(|c| self.expr(&c))
                    .transpose()?;
                let s = sort(d.base_type());
                match (q, c) {
                    (Quantifier::Forall, Some(c)) => format!("(forall (({v} {s})) (=> {c} {b}))"),
                    (Quantifier::Forall, None) => format!("(forall (({v} {s})) {b})"),
                    (Quantifier::Exists, Some(c)) => format!("(exists (({v} {s})) (and {c} {b}))"),
                    (Quantifier::Exists, None) => format!("(exists (({v} {s})) {b})"),
                }
            }
            ExprKind::Len(a) => format!("(len {})", self.expr(a)?),
            ExprKind::Get(a, i) => format!("(elem {} {})", self.expr(a)?, self.expr(i)?),
            ExprKind::Set(a, i, x) => format!(
                "(upd {} {} {})",
                self.expr(a)?,
                self.expr(i)?,
                self.expr(x)?
            ),
            ExprKind::App(f, args) => {
                let def = self.func(f, args.len())?;
                if def.is_macro() {
                    if self.depth >= MAX_EXPANSION_DEPTH {
                        return Err(EncodeError::CyclicExpansion(f.clone()));
                    }
                    let bind = def
                        .params
                        .iter()
                        .map(|p| p.name.clone())
                        .zip(args.iter().cloned())
                        .collect();
                    let body = def
                        .body
                        .as_ref()
                        .expect("macro has a body")
                        .substitute(&bind);
                    self.depth += 1;
                    let out = self.expr(&body);
                    self.depth -= 1;
                    return out;
                }
                self.used.insert((f.clone(), args.len()));
                let sym = func_symbol(f, args.len());
                if args.is_empty() {
                    sym
                } else {
                    let mut s = format!("({sym}");
                    for a in args {
                        s.push(' ');
                        s.push_str(&self.expr(a)?);
                    }
                    s.push(')');
                    s
                }
            }
        })
    }

    /// `(forall ((x S) ...) (! (=> dom body) :pattern ...))`, or the bare
    /// body when there are no parameters.
    fn closed(
        &mut self,
        params: &[(String, Domain)],
        body: &Expr,
        patterns: &[Vec<Expr>],
    ) -> Result<String, EncodeError> {
        let mut b = self.expr(body)?;
        let mut guards = Vec::new();
        for (x, d) in params {
            if let Some(c) = d.constraint(&Expr::var(x.clone())) {
                guards.push(self.expr(&c)?);
            }
        }
        if !guards.is_empty() {
            let g = if guards.len() == 1 {
                guards.remove(0)
            } else {
                format!("(and {})", guards.join(" "))
            };
            b = format!("(=> {g} {b})");
        }
        if params.is_empty() {
            return Ok(b);
        }
        let binders: Vec<String> = params
            .iter()
            .map(|(x, d)| format!("({} {})", var_symbol(x), sort(d.base_type())))
            .collect();
        let mut pats = String::new();
        for p in patterns {
            let terms: Vec<String> = p.iter().map(|t| self.expr(t)).collect::<Result<_, _>>()?;
            let _ = write!(pats, " :pattern ({})", terms.join(" "));
        }
        if pats.is_empty() {
            Ok(format!("(forall ({}) {b})", binders.join(" ")))
        } else {
            Ok(format!("(forall ({}) (! {b}{pats}))", binders.join(" ")))
        }
    }
}

fn params_of(def: &FuncDef) -> Vec<(String, Domain)> {
    def.params
        .iter()
        .map(|p| (p.name.clone(), p.domain.clone()))
        .collect()
}

fn app_of(def: &FuncDef) -> Expr {
    Expr::app(
        def.name.clone(),
        def.params
            .iter()
            .map(|p| Expr::var(p.name.clone()))
            .collect(),
    )
}

/// The script for one VC: validity of `hyps ⊢ goal` is checked as
/// unsatisfiability of `hyps ∧ ¬goal`. Ends with `(check-sat)`; model
/// queries are issued separately by the driver.
pub fn encode(
    vc: &Vc,
    env: &TheoryEnv,
    logic: &str,
    seed: Option<u64>,
) -> Result<String, EncodeError> {
    let mut enc = Encoder::new(env);
    let hyps: Vec<String> = vc
        .hypotheses
        .iter()
        .rev()
        .map(|h| enc.expr(h))
        .collect::<Result<_, _>>()?;
    let goal = enc.expr(&vc.goal)?;

    let mut lemmas = Vec::new();
    for l in env.active_lemmas() {
        let params: Vec<(String, Domain)> = l
            .params
            .iter()
            .map(|p| (p.name.clone(), p.domain.clone()))
            .collect();
        lemmas.push((
            l.name.clone(),
            enc.closed(&params, &l.statement, &l.triggers)?,
        ));
    }

    // Axioms of axiomatized and opaque symbols; these may pull in further
    // symbols, so iterate to a fixpoint.
    let mut axioms: BTreeMap<(String, usize), Vec<String>> = BTreeMap::new();
    loop {
        let pending: Vec<(String, usize)> = enc
            .used
            .iter()
            .filter(|k| !axioms.contains_key(*k))
            .cloned()
            .collect();
        if pending.is_empty() {
            break;
        }
        for (f, n) in pending {
            let def = enc.func(&f, n)?;
            let mut ax = Vec::new();
            let params = params_of(def);
            let app = app_of(def);
            if let (true, Some(body)) = (def.is_axiomatized(), &def.body) {
                let eq = Expr::bin(
                    if def.result == SemType::Bool {
                        BinOp::Iff
                    } else {
                        BinOp::Eq
                    },
                    app.clone(),
                    body.clone(),
                );
                ax.push(enc.closed(&params, &eq, &[vec![app.clone()]])?);
            }
            if let Some(ens) = &def.ensures {
                let inst = ens.substitute_one("result", &app);
                ax.push(enc.closed(&params, &inst, &[vec![app.clone()]])?);
            }
            axioms.insert((f, n), ax);
        }
    }

    let mut s = String::new();
    let _ = writeln!(s, "; {}", vc.id);
    s.push_str("(set-option :produce-models true)\n");
    if let Some(seed) = seed {
        let _ = writeln!(s, "(set-option :random-seed {seed})");
    }
    let _ = writeln!(s, "(set-logic {logic})");
    s.push_str(PRELUDE);
    let updates = |t: &String| t.contains("(upd ");
    if hyps.iter().any(updates)
        || updates(&goal)
        || lemmas.iter().any(|(_, l)| updates(l))
        || axioms.values().flatten().any(updates)
    {
        s.push_str(UPD_PRELUDE);
    }
    for (f, n) in &enc.used {
        let def = enc.func(f, *n)?;
        let args: Vec<&str> = def
            .params
            .iter()
            .map(|p| sort(p.domain.base_type()))
            .collect();
        let _ = writeln!(
            s,
            "(declare-fun {} ({}) {})",
            func_symbol(f, *n),
            args.join(" "),
            sort(def.result)
        );
    }
    for (t, syms) in [(false, &vc.symbols), (true, &vc.olds)] {
        for (x, ty) in syms {
            let sym = if t { old_symbol(x) } else { var_symbol(x) };
            let _ = writeln!(s, "(declare-fun {sym} () {})", sort(*ty));
            if *ty == SemType::Nat {
                let _ = writeln!(s, "(assert (<= 0 {sym}))");
            }
        }
    }
    for ((f, n), ax) in &axioms {
        for a in ax {
            let _ = writeln!(s, "; {f}/{n}\n(assert {a})");
        }
    }
    for (name, l) in &lemmas {
        let _ = writeln!(s, "; lemma {name}\n(assert {l})");
    }
    for h in &hyps {
        let _ = writeln!(s, "(assert {h})");
    }
    let _ = writeln!(s, "(assert (not {goal}))");
    s.push_str("(check-sat)\n");
    Ok(s)
}
