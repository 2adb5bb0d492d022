//! Static analyses run between parsing and VC generation.

mod graph;
mod typecheck;

pub use graph::{
    miracle_scan, reachability_check, reachable, recursion_check, recursive_cycles, scc_decompose,
    tarjan, termination_plan, SccInfo, TermObligation, TerminationPlan,
};
pub use typecheck::{infer, typecheck, typecheck_theory, TypeScope};

use crate::diag::{has_errors, Diagnostic};
use crate::model::VerificationContext;
use crate::prelude::TheoryEnv;

/// Per-procedure results, in procedure order.
#[derive(Clone, Debug, Default)]
pub struct ProcAnalysis {
    pub sccs: Vec<SccInfo>,
    pub plan: TerminationPlan,
}

#[derive(Clone, Debug, Default)]
pub struct Analysis {
    pub diagnostics: Vec<Diagnostic>,
    pub procs: Vec<ProcAnalysis>,
    /// Procedure indices of each recursive call cycle.
    pub recursive: Vec<Vec<usize>>,
}

impl Analysis {
    pub fn has_errors(&self) -> bool {
        has_errors(&self.diagnostics)
    }
}

/// Type checks theory and context (annotating both in place), then runs the
/// graph analyses. Graph analyses are skipped when typing fails.
pub fn analyze(ctx: &mut VerificationContext, env: &mut TheoryEnv) -> Analysis {
    let mut diagnostics = typecheck_theory(env);
    diagnostics.extend(typecheck(ctx, env));
    if has_errors(&diagnostics) {
        return Analysis {
            diagnostics,
            ..Default::default()
        };
    }
    let mut procs = Vec::new();
    for p in &ctx.procedures {
        diagnostics.extend(reachability_check(p));
        diagnostics.extend(miracle_scan(p));
        let (plan, d) = termination_plan(p);
        diagnostics.extend(d);
        procs.push(ProcAnalysis {
            sccs: scc_decompose(p),
            plan,
        });
    }
    diagnostics.extend(recursion_check(ctx));
    Analysis {
        diagnostics,
        procs,
        recursive: recursive_cycles(ctx),
    }
}
