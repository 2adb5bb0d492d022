//! Graph analyses over the situation graph: reachability, strongly connected
//! components and the termination plan derived from them.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::diag::Diagnostic;
use crate::model::{Procedure, SitId, SituationKind, Statement, StmtKind, VerificationContext};

/// Strongly connected components of a directed graph on `0..n`, in reverse
/// topological order (sinks first). Iterative Tarjan.
pub fn tarjan(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Nodes reachable from `start` (inclusive).
pub fn reachable(n: usize, adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut work = vec![start];
    seen[start] = true;
    while let Some(v) = work.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                work.push(w);
            }
        }
    }
    seen
}

fn situation_graph(p: &Procedure) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); p.situations.len()];
    for t in &p.transitions {
        if !adj[t.source].contains(&t.target) {
            adj[t.source].push(t.target);
        }
    }
    adj
}

/// Liveness precheck on the shape of the diagram.
pub fn reachability_check(p: &Procedure) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let n = p.situations.len();
    let adj = situation_graph(p);
    let seen = reachable(n, &adj, p.pre);
    let mut incoming = vec![false; n];
    for t in &p.transitions {
        incoming[t.target] = true;
    }
    if !p.posts().any(|q| seen[q]) {
        diags.push(Diagnostic::warning(
            "LIVE001",
            format!("procedure `{}` is not live: no path leads from the precondition to a postcondition", p.name),
            p.span.clone(),
        ));
    }
    for (id, s) in p.situations.iter().enumerate() {
        let container = !s.children.is_empty() && adj[id].is_empty() && !incoming[id];
        if container {
            continue;
        }
        if s.kind != SituationKind::Post && adj[id].is_empty() {
            diags.push(Diagnostic::warning(
                "LIVE002",
                format!("situation `{}` has no outgoing transition", s.name),
                s.span.clone(),
            ));
        }
        if !seen[id] {
            diags.push(Diagnostic::note(
                "LIVE004",
                format!(
                    "situation `{}` is not yet reachable from the precondition",
                    s.name
                ),
                s.span.clone(),
            ));
        }
    }
    diags
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SccInfo {
    pub members: Vec<SitId>,
    /// Indices into `Procedure::transitions` whose source and target both lie
    /// in the component.
    pub internal: Vec<usize>,
    /// Situation whose variant bounds the component's cycles.
    pub variant: Option<SitId>,
    /// Members entered from outside the component (or the precondition).
    pub entries: Vec<SitId>,
}

impl SccInfo {
    pub fn is_cyclic(&self) -> bool {
        !self.internal.is_empty()
    }
}

/// One termination conjunct on a transition: the variant of `variant_sit`
/// must decrease strictly (and stay nonnegative), or merely not increase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TermObligation {
    pub variant_sit: SitId,
    pub strict: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TerminationPlan {
    /// Indexed by transition.
    pub obligations: Vec<Vec<TermObligation>>,
}

/// Top-level components of the situation graph.
pub fn scc_decompose(p: &Procedure) -> Vec<SccInfo> {
    let all: Vec<usize> = (0..p.transitions.len()).collect();
    let nodes: Vec<SitId> = (0..p.situations.len()).collect();
    components(p, &nodes, &all)
}

fn components(p: &Procedure, nodes: &[SitId], edges: &[usize]) -> Vec<SccInfo> {
    let n = p.situations.len();
    let mut adj = vec![Vec::new(); n];
    for &e in edges {
        let t = &p.transitions[e];
        adj[t.source].push(t.target);
    }
    let in_nodes: BTreeSet<SitId> = nodes.iter().copied().collect();
    let mut comps: Vec<Vec<usize>> = tarjan(n, &adj)
        .into_iter()
        .filter(|c| in_nodes.contains(&c[0]))
        .collect();
    comps.sort();
    comps
        .into_iter()
        .map(|members| {
            let inside: BTreeSet<SitId> = members.iter().copied().collect();
            let internal: Vec<usize> = edges
                .iter()
                .copied()
                .filter(|&e| {
                    inside.contains(&p.transitions[e].source)
                        && inside.contains(&p.transitions[e].target)
                })
                .collect();
            let mut entries: Vec<SitId> = p
                .transitions
                .iter()
                .filter(|t| inside.contains(&t.target) && !inside.contains(&t.source))
                .map(|t| t.target)
                .collect();
            if inside.contains(&p.pre) {
                entries.push(p.pre);
            }
            entries.sort_unstable();
            entries.dedup();
            let variant = designated_variant(p, &members);
            SccInfo {
                members,
                internal,
                variant,
                entries,
            }
        })
        .collect()
}

/// The variant-carrying member that is an ancestor of every other
/// variant-carrying member, if there is exactly such one.
fn designated_variant(p: &Procedure, members: &[SitId]) -> Option<SitId> {
    let with: Vec<SitId> = members
        .iter()
        .copied()
        .filter(|&s| p.situations[s].variant.is_some())
        .collect();
    with.iter()
        .copied()
        .find(|&d| with.iter().all(|&o| p.is_ancestor_or_self(d, o)))
}

/// Lexicographic termination argument: in each cyclic component the
/// designated variant must drop on every transition into its situation and
/// not grow on the other internal transitions; the strict transitions are
/// then removed and the remainder is analysed again.
pub fn termination_plan(p: &Procedure) -> (TerminationPlan, Vec<Diagnostic>) {
    let mut plan = TerminationPlan {
        obligations: vec![Vec::new(); p.transitions.len()],
    };
    let mut diags = Vec::new();
    let mut in_cycle = vec![false; p.situations.len()];
    let nodes: Vec<SitId> = (0..p.situations.len()).collect();
    let all: Vec<usize> = (0..p.transitions.len()).collect();
    let mut work = vec![(nodes, all)];
    while let Some((nodes, edges)) = work.pop() {
        for c in components(p, &nodes, &edges) {
            if !c.is_cyclic() {
                continue;
            }
            for &m in &c.members {
                in_cycle[m] = true;
            }
            let names = || {
                c.members
                    .iter()
                    .map(|&m| format!("`{}`", p.situations[m].name))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            let Some(d) = c.variant else {
                let carriers = c
                    .members
                    .iter()
                    .filter(|&&m| p.situations[m].variant.is_some())
                    .count();
                let span = p.situations[c.members[0]].span.clone();
                if carriers == 0 {
                    diags.push(Diagnostic::warning(
                        "TERM001",
                        format!("procedure `{}` may not be terminating: cycle through {} has no variant", p.name, names()),
                        span,
                    ));
                } else {
                    diags.push(Diagnostic::error(
                        "TERM002",
                        format!(
                            "situations {} form one cycle but carry unrelated variants",
                            names()
                        ),
                        span,
                    ));
                }
                continue;
            };
            let mut rest = Vec::new();
            for &e in &c.internal {
                let strict = p.transitions[e].target == d;
                plan.obligations[e].push(TermObligation {
                    variant_sit: d,
                    strict,
                });
                if !strict {
                    rest.push(e);
                }
            }
            work.push((c.members.clone(), rest));
        }
    }
    for (id, s) in p.situations.iter().enumerate() {
        if s.variant.is_some() && !in_cycle[id] {
            diags.push(Diagnostic::warning(
                "TERM004",
                format!(
                    "variant of situation `{}` is unused: it lies on no cycle",
                    s.name
                ),
                s.span.clone(),
            ));
        }
    }
    (plan, diags)
}

/// Procedures grouped into call-graph components; each entry lists the
/// procedures of one recursive cycle.
pub fn recursive_cycles(ctx: &VerificationContext) -> Vec<Vec<usize>> {
    let n = ctx.procedures.len();
    let mut adj = vec![Vec::new(); n];
    for (i, p) in ctx.procedures.iter().enumerate() {
        for t in &p.transitions {
            for st in &t.body {
                if let StmtKind::Call(f, _) = &st.kind {
                    if let Some(j) = ctx.procedures.iter().position(|q| &q.name == f) {
                        if !adj[i].contains(&j) {
                            adj[i].push(j);
                        }
                    }
                }
            }
        }
    }
    let mut cycles: Vec<Vec<usize>> = tarjan(n, &adj)
        .into_iter()
        .filter(|c| c.len() > 1 || adj[c[0]].contains(&c[0]))
        .collect();
    cycles.sort();
    cycles
}

/// TERM003 for recursive cycles in which some procedure has no recursion
/// variant.
pub fn recursion_check(ctx: &VerificationContext) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for cycle in recursive_cycles(ctx) {
        for &i in &cycle {
            let p = &ctx.procedures[i];
            if p.recursion_variant.is_none() {
                diags.push(Diagnostic::warning(
                    "TERM003",
                    format!(
                        "procedure `{}` is recursive but declares no recursion variant",
                        p.name
                    ),
                    p.span.clone(),
                ));
            }
        }
    }
    diags
}

/// LIVE003 for guards that follow a state change on their path.
pub fn miracle_scan(p: &Procedure) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    fn go(b: &crate::model::Branch, mut changed: bool, diags: &mut Vec<Diagnostic>) {
        for st in &b.stmts {
            changed = flag(st, changed, diags);
        }
        for c in &b.choices {
            go(c, changed, diags);
        }
    }
    fn flag(st: &Statement, changed: bool, diags: &mut Vec<Diagnostic>) -> bool {
        match &st.kind {
            StmtKind::Guard(_) => {
                if changed {
                    diags.push(Diagnostic::warning(
                        "LIVE003",
                        "guard after a state change acts as an assumption; the transition may not be live",
                        st.span.clone(),
                    ));
                }
                changed
            }
            StmtKind::Assert(_) => changed,
            StmtKind::Assign(..) | StmtKind::Call(..) => true,
        }
    }
    for b in &p.blocks {
        go(&b.tree, false, &mut diags);
    }
    diags
}
