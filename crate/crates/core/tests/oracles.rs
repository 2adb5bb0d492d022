mod common;

use ibp::frontend::load_source;
use ibp::interp::{
    is_permutation, replay, Evaluator, Interpreter, Policy, Replay, Store, Universe,
};
use ibp::model::Value;
use ibp::prelude::builtin_theory;
use ibp::smt::{check_all, check_one, Outcome};
use ibp::vcgen::{generate_all, GenOptions, Vc, VcKind};

use common::{corpus, solver, solver_available};

fn store(a: &[i64]) -> Store {
    [("a".to_string(), Value::Vector(a.to_vec()))].into()
}

fn sorted(a: &[i64]) -> Value {
    let mut v = a.to_vec();
    v.sort();
    Value::Vector(v)
}

#[test]
fn heapsort_on_empty_and_singleton() {
    let p = corpus("heapsort_final");
    let interp = Interpreter::new(&p.ctx, &p.env, &p.analysis);
    for a in [vec![], vec![7], vec![-3]] {
        for policy in [Policy::FirstEnabled, Policy::Random(1)] {
            let t = interp.run("heapsort", &store(&a), policy).unwrap();
            assert_eq!(t.outcome.unwrap()["a"], Value::Vector(a.clone()));
        }
    }
}

#[test]
fn heapsort_sorts_every_small_array() {
    let p = corpus("heapsort_final");
    let interp = Interpreter::new(&p.ctx, &p.env, &p.analysis);
    for len in 0..=5u32 {
        for code in 0..4u32.pow(len) {
            let a: Vec<i64> = (0..len).map(|i| ((code >> (2 * i)) & 3) as i64).collect();
            let t = interp
                .run("heapsort", &store(&a), Policy::FirstEnabled)
                .unwrap();
            let out = t.outcome.unwrap_or_else(|v| panic!("{a:?}: {v}"));
            assert_eq!(out["a"], sorted(&a), "{a:?}");
        }
    }
}

#[test]
fn selection_sort_agrees_with_heapsort() {
    let sel = corpus("selection_sort");
    let heap = corpus("heapsort_final");
    let s = Interpreter::new(&sel.ctx, &sel.env, &sel.analysis);
    let h = Interpreter::new(&heap.ctx, &heap.env, &heap.analysis);
    for a in (Universe {
        max_len: 4,
        lo: -1,
        hi: 2,
    })
    .vectors()
    {
        let mut input = store(&a);
        input.insert("n".into(), Value::Int(a.len() as i64));
        let x = s
            .run("sort", &input, Policy::FirstEnabled)
            .unwrap()
            .outcome
            .unwrap();
        let y = h
            .run("heapsort", &store(&a), Policy::FirstEnabled)
            .unwrap()
            .outcome
            .unwrap();
        assert_eq!(x["a"], y["a"], "{a:?}");
    }
}

/// Brute force: some bijection i -> j with a[i] = b[j].
fn bijection_exists(a: &[i64], b: &[i64]) -> bool {
    fn go(a: &[i64], b: &[i64], used: &mut Vec<bool>) -> bool {
        let Some((x, rest)) = a.split_first() else {
            return true;
        };
        for j in 0..b.len() {
            if !used[j] && b[j] == *x {
                used[j] = true;
                if go(rest, b, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    a.len() == b.len() && go(a, b, &mut vec![false; b.len()])
}

#[test]
fn perm_matches_bijection_search() {
    let env = builtin_theory();
    let ev = Evaluator::new(&env);
    let at = ibp::model::Expr::tt();
    let vs = Universe {
        max_len: 3,
        lo: -1,
        hi: 1,
    }
    .vectors();
    let mut positive = 0;
    for a in &vs {
        for b in &vs {
            let want = bijection_exists(a, b);
            assert_eq!(is_permutation(a, b), want, "{a:?} {b:?}");
            let got = ev
                .apply(
                    "perm",
                    &[Value::Vector(a.clone()), Value::Vector(b.clone())],
                    &at,
                )
                .unwrap();
            assert_eq!(got, Value::Bool(want), "{a:?} {b:?}");
            positive += usize::from(want);
        }
    }
    assert!(
        positive > vs.len(),
        "only reflexive pairs were permutations"
    );
}

const BROKEN_SEARCH: &str = "
context broken {
  procedure find_zero(a: vector, valres i: nat) {
    post { i <= len(a); forall (j: nat): j < i => a[j] /= 0 }
    situation Scan { i <= len(a); forall (j: nat): j < i => a[j] /= 0; }
    transition to Scan { i := 0; }
    transition from Scan to Scan { [i < len(a)]; i := i + 1; }
    transition from Scan to Post { [i = len(a) or a[i] = 0]; }
  }
}";

#[test]
fn solver_countermodel_replays() {
    if !solver_available() {
        return;
    }
    let p = load_source(BROKEN_SEARCH, "broken.ibp", None).unwrap();
    let vcs = generate_all(
        &p.ctx,
        &p.env,
        &p.analysis,
        GenOptions {
            termination: false,
            ..GenOptions::default()
        },
    );
    let verdicts = check_all(&vcs, &p.env, &solver(10_000), |_, _, _| {});
    let mut confirmed = 0;
    for (vc, v) in vcs.iter().zip(&verdicts) {
        if let Outcome::Refuted(m) = &v.outcome {
            assert!(
                vc.id.starts_with("find_zero/Scan/t1#0/"),
                "{} refuted",
                vc.id
            );
            match replay(vc, &p.env, m) {
                Replay::Confirmed => confirmed += 1,
                other => panic!("{}: {other:?} under {m:?}", vc.id),
            }
        }
    }
    assert!(confirmed > 0, "no refuted VC");
}

#[test]
fn active_lemmas_are_consistent() {
    if !solver_available() {
        return;
    }
    let base = builtin_theory();
    let all: Vec<String> = base.lemmas.iter().map(|l| l.name.clone()).collect();
    let env = base.with_active(all.clone());
    assert_eq!(env.active_lemmas().count(), all.len());
    let vc = Vc {
        id: "vacuity".into(),
        kind: VcKind::Consistency,
        procedure: String::new(),
        situation: String::new(),
        hypotheses: Vec::new(),
        goal: ibp::model::Expr::app(
            "perm",
            vec![ibp::model::Expr::var("v"), ibp::model::Expr::var("v")],
        ),
        span: ibp::diag::SourceSpan::synthetic(),
        symbols: [("v".to_string(), ibp::model::SemType::Vector)].into(),
        olds: Default::default(),
    };
    assert!(
        check_one(&vc, &env, &solver(10_000)).outcome.is_proved(),
        "perm_ref should prove this"
    );
    let falsum = Vc {
        goal: ibp::model::Expr::ff(),
        ..vc
    };
    let v = check_one(&falsum, &env, &solver(10_000));
    assert!(!v.outcome.is_proved(), "theory proves false");
}
