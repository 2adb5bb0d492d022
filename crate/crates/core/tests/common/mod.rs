//! Shared helpers for the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use ibp::diag::SourceSpan;
use ibp::frontend::{load_file, Program};
use ibp::interp::{Evaluator, Scope};
use ibp::model::{BinOp, Domain, Expr, SemType, Statement, StmtKind, Value, VerificationContext};
use ibp::prelude::TheoryEnv;
use ibp::smt::{check_one, SolverConfig};
use ibp::vcgen::{wp, Fresh, Vc, VcKind};

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

pub fn corpus(name: &str) -> Program {
    load_file(corpus_path(&format!("{name}.ibp"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn solver_available() -> bool {
    let cfg = SolverConfig::default();
    std::process::Command::new(&cfg.command[0])
        .arg("-version")
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .is_ok()
}

pub fn solver(timeout_ms: u64) -> SolverConfig {
    let mut cfg = SolverConfig {
        timeout_ms,
        ..SolverConfig::default()
    };
    if let Ok(cmd) = std::env::var("IBP_SOLVER") {
        cfg = cfg.with_command_line(&cmd).expect("IBP_SOLVER parses");
    }
    cfg
}

// Random straight-line programs over three integer variables.

pub const VARS: [&str; 3] = ["x", "y", "z"];

fn var() -> impl Strategy<Value = String> {
    prop::sample::select(VARS.to_vec()).prop_map(String::from)
}

pub fn arith() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-3i64..=3).prop_map(Expr::int), var().prop_map(Expr::var)];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Sub, a, b)),
            (-2i64..=3, inner.clone()).prop_map(|(c, a)| Expr::bin(BinOp::Mul, Expr::int(c), a)),
            (inner, 1i64..=3).prop_map(|(a, c)| Expr::bin(BinOp::Div, a, Expr::int(c))),
        ]
    })
}

pub fn boolean() -> impl Strategy<Value = Expr> {
    let op = prop::sample::select(vec![BinOp::Lt, BinOp::Le, BinOp::Eq, BinOp::Ne]);
    let atom = (op, arith(), arith()).prop_map(|(o, a, b)| Expr::bin(o, a, b));
    atom.prop_recursive(1, 4, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::or(a, b)),
            inner.prop_map(Expr::not),
        ]
    })
}

pub fn statement() -> impl Strategy<Value = Statement> {
    prop_oneof![
        3 => (var(), arith()).prop_map(|(x, e)| Statement::assign(x, e)),
        1 => boolean().prop_map(Statement::guard),
        1 => boolean().prop_map(Statement::assert),
    ]
}

pub fn program() -> impl Strategy<Value = Vec<Statement>> {
    prop::collection::vec(statement(), 0..5)
}

pub fn empty_context() -> VerificationContext {
    ibp::parser::parse_context("context props { }", "props.ibp").expect("empty context parses")
}

pub fn wp_of(body: &[Statement], post: &Expr, ctx: &VerificationContext) -> Expr {
    let mut fresh = Fresh::new(VARS.iter().map(|s| s.to_string()).collect());
    wp(body, post.clone(), ctx, &mut fresh, false)
}

/// `Ok` when the solver proves `goal` valid over integers x, y, z.
pub fn valid(goal: Expr, env: &TheoryEnv, cfg: &SolverConfig) -> Result<(), String> {
    let vc = Vc {
        id: "prop".into(),
        kind: VcKind::Consistency,
        procedure: "props".into(),
        situation: "S".into(),
        hypotheses: Vec::new(),
        goal,
        span: SourceSpan::synthetic(),
        symbols: VARS.iter().map(|v| (v.to_string(), SemType::Int)).collect(),
        olds: BTreeMap::new(),
    };
    let v = check_one(&vc, env, cfg);
    if v.outcome.is_proved() {
        Ok(())
    } else {
        Err(format!("{} on {}", v.outcome.label(), vc.goal))
    }
}

pub fn iff(a: Expr, b: Expr) -> Expr {
    Expr::bin(BinOp::Iff, a, b)
}

/// Runs `body` from `store`: `None` when a guard blocks, `Some(Err)` when an
/// assert fails, otherwise the final store.
pub fn execute(
    body: &[Statement],
    env: &TheoryEnv,
    mut store: BTreeMap<String, Value>,
) -> Option<Result<BTreeMap<String, Value>, ()>> {
    let ev = Evaluator::new(env);
    let olds = BTreeMap::new();
    for st in body {
        match &st.kind {
            StmtKind::Guard(g) => {
                if !ev
                    .eval_bool(g, &mut Scope::new(&store, &olds))
                    .expect("guard evaluates")
                {
                    return None;
                }
            }
            StmtKind::Assert(b) => {
                if !ev
                    .eval_bool(b, &mut Scope::new(&store, &olds))
                    .expect("assert evaluates")
                {
                    return Some(Err(()));
                }
            }
            StmtKind::Assign(x, e) => {
                let v = ev
                    .eval(e, &mut Scope::new(&store, &olds))
                    .expect("rhs evaluates");
                store.insert(x.clone(), v);
            }
            StmtKind::Call(..) => unreachable!("generated programs have no calls"),
        }
    }
    Some(Ok(store))
}

pub fn holds(e: &Expr, env: &TheoryEnv, store: &BTreeMap<String, Value>) -> bool {
    Evaluator::new(env)
        .eval_bool(e, &mut Scope::new(store, &BTreeMap::new()))
        .expect("evaluates")
}

/// Conjunctivity: `wp(S, P and Q) <=> wp(S, P) and wp(S, Q)`.
pub fn conjunctivity(
    body: &[Statement],
    p: &Expr,
    q: &Expr,
    env: &TheoryEnv,
    cfg: &SolverConfig,
) -> Result<(), String> {
    let ctx = empty_context();
    let whole = wp_of(body, &Expr::and(p.clone(), q.clone()), &ctx);
    let parts = Expr::and(wp_of(body, p, &ctx), wp_of(body, q, &ctx));
    valid(iff(whole, parts), env, cfg)
}

/// Substitution: `wp(x := e, Q) <=> forall x': x' = e => Q[x'/x]`, with
/// the right side built without substituting `e` anywhere.
pub fn substitution(
    x: &str,
    e: &Expr,
    q: &Expr,
    env: &TheoryEnv,
    cfg: &SolverConfig,
) -> Result<(), String> {
    let ctx = empty_context();
    let lhs = wp_of(&[Statement::assign(x, e.clone())], q, &ctx);
    let x2 = format!("{x}_new");
    let renamed = q.substitute_one(x, &Expr::var(x2.clone()));
    let rhs = Expr::forall(
        x2.clone(),
        Domain::Type(SemType::Int),
        Expr::implies(Expr::bin(BinOp::Eq, Expr::var(x2), e.clone()), renamed),
    );
    valid(iff(lhs, rhs), env, cfg)
}
