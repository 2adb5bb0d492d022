//! Discharging verification conditions with an external SMT solver.

mod encode;
mod sexp;
mod solver;

pub use encode::{encode, old_symbol, var_symbol, EncodeError};
pub use sexp::{parse_all, Sexp, SexpError};
pub use solver::{run_solver, Model, Outcome, Query, SolverConfig, Verdict, DEFAULT_SOLVER};

use std::collections::BTreeMap;
use std::sync::mpsc;

use crate::prelude::TheoryEnv;
use crate::vcgen::Vc;

/// Encodes and checks one VC.
pub fn check_one(vc: &Vc, env: &TheoryEnv, config: &SolverConfig) -> Verdict {
    match encode(vc, env, &config.logic, config.seed) {
        Ok(script) => run_solver(
            &script,
            &Query {
                symbols: Some(&vc.symbols),
                olds: Some(&vc.olds),
            },
            config,
        ),
        Err(e) => Verdict {
            outcome: Outcome::SolverError(e.to_string()),
            millis: 0,
        },
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub proved: usize,
    pub refuted: usize,
    pub unknown: usize,
    pub errors: usize,
}

impl Summary {
    pub fn of<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Summary {
        let mut s = Summary::default();
        for v in verdicts {
            match v.outcome {
                Outcome::Proved => s.proved += 1,
                Outcome::Refuted(_) => s.refuted += 1,
                Outcome::Unknown(_) => s.unknown += 1,
                Outcome::SolverError(_) => s.errors += 1,
            }
        }
        s
    }

    pub fn all_proved(&self) -> bool {
        self.refuted == 0 && self.unknown == 0 && self.errors == 0
    }
}

/// Checks every VC with up to `config.workers` solver processes at a time.
/// `emit` sees each verdict in VC order, as soon as it and all earlier ones
/// are available.
pub fn check_all(
    vcs: &[Vc],
    env: &TheoryEnv,
    config: &SolverConfig,
    mut emit: impl FnMut(usize, &Vc, &Verdict),
) -> Vec<Verdict> {
    let (tx, rx) = mpsc::channel::<(usize, Verdict)>();
    let mut done: Vec<Option<Verdict>> = vec![None; vcs.len()];
    let mut next = 0;
    std::thread::scope(|scope| {
        scope.spawn(move || dispatch(vcs, env, config, tx));
        let mut pending = BTreeMap::new();
        for (i, v) in rx {
            pending.insert(i, v);
            while let Some(v) = pending.remove(&next) {
                emit(next, &vcs[next], &v);
                done[next] = Some(v);
                next += 1;
            }
        }
    });
    done.into_iter()
        .map(|v| v.expect("every VC gets a verdict"))
        .collect()
}

#[cfg(feature = "parallel")]
fn dispatch(
    vcs: &[Vc],
    env: &TheoryEnv,
    config: &SolverConfig,
    tx: mpsc::Sender<(usize, Verdict)>,
) {
    use rayon::prelude::*;
    let run = || {
        vcs.par_iter().enumerate().for_each_with(tx, |tx, (i, vc)| {
            let _ = tx.send((i, check_one(vc, env, config)));
        })
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn dispatch(
    vcs: &[Vc],
    env: &TheoryEnv,
    config: &SolverConfig,
    tx: mpsc::Sender<(usize, Verdict)>,
) {
    for (i, vc) in vcs.iter().enumerate() {
        let _ = tx.send((i, check_one(vc, env, config)));
    }
}

/// File name for a VC's script under `--dump-smt`.
pub fn dump_file_name(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{s}.smt2")
}
