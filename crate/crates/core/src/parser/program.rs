//! Program files: verification contexts, procedures and invariant diagrams.

use std::collections::{HashMap, HashSet};

use super::{PResult, Parser, Tok};
use crate::diag::{Diagnostic, SourceSpan};
use crate::model::{
    Branch, Constant, Expr, ExprKind, Local, Param, ParamMode, Procedure, SitId, Situation,
    SituationKind, Statement, StmtKind, TransitionBlock, VerificationContext,
};

struct RawSit {
    name: String,
    span: SourceSpan,
    kind: SituationKind,
    invariants: Vec<Expr>,
    variant: Option<Expr>,
    children: Vec<RawSit>,
}

struct RawBranch {
    stmts: Vec<Statement>,
    target: Option<(String, SourceSpan)>,
    choices: Vec<RawBranch>,
    span: SourceSpan,
}

struct RawBlock {
    source: Option<(String, SourceSpan)>,
    tree: RawBranch,
    span: SourceSpan,
}

struct RawProc {
    name: String,
    span: SourceSpan,
    params: Vec<Param>,
    locals: Vec<Local>,
    sits: Vec<RawSit>,
    blocks: Vec<RawBlock>,
    recursion_variant: Option<Expr>,
}

/// Parses and resolves a program file. Returns every diagnostic found; the
/// context is only produced when there are no errors.
pub fn parse_context(text: &str, file: &str) -> Result<VerificationContext, Vec<Diagnostic>> {
    let mut p = Parser::new(text, file).map_err(|d| vec![d])?;
    let (name, span, constants, imports, strategy, procs) = context(&mut p).map_err(|d| vec![d])?;
    let mut diags = Vec::new();
    let mut seen = HashSet::new();
    for c in &constants {
        if !seen.insert(c.name.clone()) {
            diags.push(Diagnostic::error(
                "RESOLVE006",
                format!("duplicate declaration of `{}`", c.name),
                c.span.clone(),
            ));
        }
    }
    let mut proc_names = HashSet::new();
    for rp in &procs {
        if !proc_names.insert(rp.name.clone()) {
            diags.push(Diagnostic::error(
                "RESOLVE006",
                format!("duplicate procedure `{}`", rp.name),
                rp.span.clone(),
            ));
        }
    }
    let signatures: HashMap<String, Vec<Param>> = procs
        .iter()
        .map(|p| (p.name.clone(), p.params.clone()))
        .collect();
    let mut procedures = Vec::new();
    for rp in procs {
        if let Some(p) = resolve_procedure(rp, &constants, &signatures, &mut diags) {
            procedures.push(p);
        }
    }
    if crate::diag::has_errors(&diags) {
        return Err(diags);
    }
    Ok(VerificationContext {
        name,
        constants,
        imports,
        strategy,
        procedures,
        span,
    })
}

type ContextParts = (
    String,
    SourceSpan,
    Vec<Constant>,
    Vec<(String, SourceSpan)>,
    Vec<(String, SourceSpan)>,
    Vec<RawProc>,
);

fn context(p: &mut Parser) -> PResult<ContextParts> {
    let start = p.expect_kw("context")?;
    let (name, _) = p.ident()?;
    p.expect(Tok::LBrace)?;
    let mut constants = Vec::new();
    let mut imports = Vec::new();
    let mut strategy = Vec::new();
    let mut procs = Vec::new();
    while !p.at(&Tok::RBrace) {
        if p.eat_kw("import") {
            imports.extend(p.ident_list()?);
            p.expect(Tok::Semi)?;
        } else if p.eat_kw("strategy") {
            p.expect_kw("lemmas")?;
            strategy.extend(p.ident_list()?);
            p.expect(Tok::Semi)?;
        } else if p.eat_kw("const") {
            let names = p.ident_list()?;
            p.expect(Tok::Colon)?;
            let ty = p.sem_type()?;
            p.expect(Tok::Semi)?;
            constants.extend(
                names
                    .into_iter()
                    .map(|(name, span)| Constant { name, ty, span }),
            );
        } else if p.at_kw("procedure") {
            procs.push(procedure(p)?);
        } else {
            return p.error("`import`, `strategy`, `const` or `procedure`");
        }
    }
    let end = p.expect(Tok::RBrace)?;
    p.expect(Tok::Eof)?;
    Ok((name, start.to(&end), constants, imports, strategy, procs))
}

fn procedure(p: &mut Parser) -> PResult<RawProc> {
    let start = p.expect_kw("procedure")?;
    let (name, _) = p.ident()?;
    p.expect(Tok::LParen)?;
    let mut params = Vec::new();
    if !p.at(&Tok::RParen) {
        loop {
            let mode = if p.eat_kw("valres") {
                ParamMode::ValRes
            } else {
                ParamMode::Value
            };
            let names = p.ident_list()?;
            p.expect(Tok::Colon)?;
            let ty = p.sem_type()?;
            params.extend(names.into_iter().map(|(name, span)| Param {
                name,
                ty,
                mode,
                span,
            }));
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
    }
    p.expect(Tok::RParen)?;
    p.expect(Tok::LBrace)?;
    let mut rp = RawProc {
        name,
        span: start.clone(),
        params,
        locals: vec![],
        sits: vec![],
        blocks: vec![],
        recursion_variant: None,
    };
    while !p.at(&Tok::RBrace) {
        let item = p.span();
        if p.at_kw("pre") || p.at_kw("post") {
            let kind = if p.bump().tok == Tok::Ident("pre".into()) {
                SituationKind::Pre
            } else {
                SituationKind::Post
            };
            let name = match p.peek() {
                Tok::Ident(_) => Some(p.ident()?.0),
                _ => None,
            };
            let (invariants, children) = sit_body(p)?;
            if let Some(c) = children.first() {
                return Err(Diagnostic::error(
                    "PARSE006",
                    "situations cannot be nested inside a pre- or postcondition",
                    c.span.clone(),
                ));
            }
            let name = name.unwrap_or_else(|| {
                let base = if kind == SituationKind::Pre {
                    "Pre"
                } else {
                    "Post"
                };
                let taken = |n: &str| rp.sits.iter().any(|s| s.name == n);
                if !taken(base) {
                    base.to_string()
                } else {
                    (2..)
                        .map(|i| format!("{base}{i}"))
                        .find(|n| !taken(n))
                        .unwrap_or_default()
                }
            });
            let span = item.to(&p.prev_span());
            rp.sits.push(RawSit {
                name,
                span,
                kind,
                invariants,
                variant: None,
                children: vec![],
            });
        } else if p.at_kw("situation") {
            rp.sits.push(situation(p)?);
        } else if p.eat_kw("var") {
            let names = p.ident_list()?;
            p.expect(Tok::Colon)?;
            let ty = p.sem_type()?;
            p.expect(Tok::Semi)?;
            rp.locals.extend(
                names
                    .into_iter()
                    .map(|(name, span)| Local { name, ty, span }),
            );
        } else if p.at_kw("transition") {
            rp.blocks.push(transition(p)?);
        } else if p.eat_kw("recursion") {
            p.expect_kw("variant")?;
            rp.recursion_variant = Some(p.expr()?);
            p.expect(Tok::Semi)?;
        } else {
            return p.error("`pre`, `post`, `situation`, `var`, `transition` or `recursion`");
        }
    }
    let end = p.expect(Tok::RBrace)?;
    rp.span = start.to(&end);
    Ok(rp)
}

fn sit_body(p: &mut Parser) -> PResult<(Vec<Expr>, Vec<RawSit>)> {
    p.expect(Tok::LBrace)?;
    let mut invs = Vec::new();
    let mut children = Vec::new();
    while !p.at(&Tok::RBrace) {
        if p.at_kw("situation") {
            children.push(situation(p)?);
        } else {
            invs.push(p.expr()?);
            if !p.at(&Tok::RBrace) {
                p.expect(Tok::Semi)?;
            }
        }
    }
    p.expect(Tok::RBrace)?;
    Ok((invs, children))
}

fn situation(p: &mut Parser) -> PResult<RawSit> {
    let start = p.expect_kw("situation")?;
    let (name, _) = p.ident()?;
    let variant = if p.eat_kw("variant") {
        Some(p.expr()?)
    } else {
        None
    };
    let (invariants, children) = sit_body(p)?;
    let span = start.to(&p.prev_span());
    Ok(RawSit {
        name,
        span,
        kind: SituationKind::Intermediate,
        invariants,
        variant,
        children,
    })
}

fn transition(p: &mut Parser) -> PResult<RawBlock> {
    let start = p.expect_kw("transition")?;
    let source = if p.eat_kw("from") {
        Some(p.ident()?)
    } else {
        None
    };
    let target = if p.eat_kw("to") {
        Some(p.ident()?)
    } else {
        None
    };
    let mut tree = branch_body(p, target)?;
    let span = start.to(&p.prev_span());
    tree.span = span.clone();
    Ok(RawBlock { source, tree, span })
}

fn branch_body(p: &mut Parser, target: Option<(String, SourceSpan)>) -> PResult<RawBranch> {
    let start = p.expect(Tok::LBrace)?;
    let mut stmts = Vec::new();
    let mut choices = Vec::new();
    while !p.at(&Tok::RBrace) {
        if p.at_kw("choice") {
            p.bump();
            p.expect(Tok::LBrace)?;
            while !p.at(&Tok::RBrace) {
                let bstart = p.expect_kw("branch")?;
                let t = if p.eat_kw("to") {
                    Some(p.ident()?)
                } else {
                    None
                };
                let mut b = branch_body(p, t)?;
                b.span = bstart.to(&p.prev_span());
                choices.push(b);
            }
            p.expect(Tok::RBrace)?;
            if choices.is_empty() {
                return p.error("at least one `branch`");
            }
            break;
        }
        stmts.push(statement(p)?);
    }
    let end = p.expect(Tok::RBrace)?;
    Ok(RawBranch {
        stmts,
        target,
        choices,
        span: start.to(&end),
    })
}

fn statement(p: &mut Parser) -> PResult<Statement> {
    let start = p.span();
    match p.peek().clone() {
        Tok::LBracket => {
            p.bump();
            let e = p.expr()?;
            p.expect(Tok::RBracket)?;
            let span = start.to(&p.prev_span());
            p.eat(&Tok::Semi);
            Ok(Statement::new(StmtKind::Guard(e), span))
        }
        Tok::LBrace => {
            p.bump();
            let e = p.expr()?;
            p.expect(Tok::RBrace)?;
            let span = start.to(&p.prev_span());
            p.eat(&Tok::Semi);
            Ok(Statement::new(StmtKind::Assert(e), span))
        }
        Tok::Ident(kw) if kw == "call" => {
            p.bump();
            call_rest(p, start)
        }
        Tok::Ident(_) if p.peek_at(1) == &Tok::LParen => call_rest(p, start),
        Tok::Ident(x) => {
            p.bump();
            let xspan = p.prev_span();
            let index = if p.eat(&Tok::LBracket) {
                let i = p.expr()?;
                p.expect(Tok::RBracket)?;
                Some(i)
            } else {
                None
            };
            p.expect(Tok::Assign)?;
            let rhs = p.expr()?;
            let end = p.expect(Tok::Semi)?;
            let rhs = match index {
                None => rhs,
                Some(i) => {
                    let sp = xspan.to(&rhs.span);
                    let a = Expr::new(ExprKind::Var(x.clone()), xspan);
                    Expr::new(ExprKind::Set(Box::new(a), Box::new(i), Box::new(rhs)), sp)
                }
            };
            Ok(Statement::new(StmtKind::Assign(x, rhs), start.to(&end)))
        }
        _ => p.error("a statement (`[guard]`, `{assertion}`, assignment or call)"),
    }
}

fn call_rest(p: &mut Parser, start: SourceSpan) -> PResult<Statement> {
    let (f, _) = p.ident()?;
    p.expect(Tok::LParen)?;
    let mut args = Vec::new();
    if !p.at(&Tok::RParen) {
        args.push(p.expr()?);
        while p.eat(&Tok::Comma) {
            args.push(p.expr()?);
        }
    }
    p.expect(Tok::RParen)?;
    let end = p.expect(Tok::Semi)?;
    Ok(Statement::new(StmtKind::Call(f, args), start.to(&end)))
}

/// Names visible to an expression and how to reinterpret `x_0` spellings.
struct Scope<'a> {
    vars: HashSet<&'a str>,
    valres: HashSet<&'a str>,
}

fn resolve_expr(e: &mut Expr, scope: &Scope, bound: &mut Vec<String>, diags: &mut Vec<Diagnostic>) {
    match &mut e.kind {
        ExprKind::Var(x) => {
            if bound.iter().any(|b| b == x) || scope.vars.contains(x.as_str()) {
                return;
            }
            if let Some(base) = x.strip_suffix("_0") {
                if scope.valres.contains(base) {
                    e.kind = ExprKind::Old(base.to_string());
                    return;
                }
            }
            diags.push(Diagnostic::error(
                "RESOLVE003",
                format!("unknown variable `{x}`"),
                e.span.clone(),
            ));
        }
        ExprKind::Old(x) => {
            if !scope.valres.contains(x.as_str()) {
                diags.push(Diagnostic::error(
                    "RESOLVE015",
                    format!("`old` applies only to value-result parameters, not `{x}`"),
                    e.span.clone(),
                ));
            }
        }
        ExprKind::Quant(_, x, d, body) => {
            if let crate::model::Domain::Index(a)
            | crate::model::Domain::Upto(a)
            | crate::model::Domain::Below(a) = d
            {
                resolve_expr(a, scope, bound, diags);
            }
            bound.push(x.clone());
            resolve_expr(body, scope, bound, diags);
            bound.pop();
        }
        ExprKind::Int(_) | ExprKind::Bool(_) => {}
        ExprKind::Unary(_, a) | ExprKind::Len(a) => resolve_expr(a, scope, bound, diags),
        ExprKind::Binary(_, a, b) | ExprKind::Get(a, b) => {
            resolve_expr(a, scope, bound, diags);
            resolve_expr(b, scope, bound, diags);
        }
        ExprKind::Ite(a, b, c) | ExprKind::Set(a, b, c) => {
            resolve_expr(a, scope, bound, diags);
            resolve_expr(b, scope, bound, diags);
            resolve_expr(c, scope, bound, diags);
        }
        ExprKind::App(_, args) => {
            for a in args {
                resolve_expr(a, scope, bound, diags);
            }
        }
    }
}

fn flatten(raw: RawSit, parent: Option<SitId>, out: &mut Vec<Situation>) -> SitId {
    let id = out.len();
    out.push(Situation {
        name: raw.name,
        kind: raw.kind,
        invariants: raw.invariants,
        variant: raw.variant,
        parent,
        children: vec![],
        span: raw.span,
        implicit: false,
    });
    for c in raw.children {
        let cid = flatten(c, Some(id), out);
        out[id].children.push(cid);
    }
    id
}

struct Resolver<'a> {
    sits: &'a [Situation],
    diags: &'a mut Vec<Diagnostic>,
}

impl Resolver<'_> {
    fn sit(&mut self, name: &str, span: &SourceSpan) -> Option<SitId> {
        let id = self.sits.iter().position(|s| s.name == name);
        if id.is_none() {
            self.diags.push(Diagnostic::error(
                "RESOLVE001",
                format!("unknown situation `{name}`"),
                span.clone(),
            ));
        }
        id
    }

    fn branch(&mut self, raw: RawBranch, inherited: Option<SitId>) -> Branch {
        let target = raw.target.as_ref().and_then(|(n, sp)| self.sit(n, sp));
        if let Some(t) = target {
            if self.sits[t].kind == SituationKind::Pre {
                self.diags.push(Diagnostic::error(
                    "RESOLVE004",
                    format!("transition into precondition `{}`", self.sits[t].name),
                    raw.target
                        .as_ref()
                        .map(|(_, s)| s.clone())
                        .unwrap_or(raw.span.clone()),
                ));
            }
        }
        let effective = target.or(inherited);
        if raw.choices.is_empty() && effective.is_none() && raw.target.is_none() {
            self.diags.push(Diagnostic::error(
                "RESOLVE010",
                "transition path has no target situation",
                raw.span.clone(),
            ));
        }
        let choices = raw
            .choices
            .into_iter()
            .map(|c| self.branch(c, effective))
            .collect();
        Branch {
            stmts: raw.stmts,
            target,
            choices,
            span: raw.span,
        }
    }
}

fn resolve_procedure(
    rp: RawProc,
    constants: &[Constant],
    signatures: &HashMap<String, Vec<Param>>,
    diags: &mut Vec<Diagnostic>,
) -> Option<Procedure> {
    let n_errors = diags.iter().filter(|d| d.is_error()).count();
    let mut situations = Vec::new();
    let explicit_pre: Vec<usize> = rp
        .sits
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SituationKind::Pre)
        .map(|(i, _)| i)
        .collect();
    if explicit_pre.len() > 1 {
        diags.push(Diagnostic::error(
            "RESOLVE009",
            "a procedure has exactly one precondition",
            rp.sits[explicit_pre[1]].span.clone(),
        ));
    }
    let mut pre = None;
    if explicit_pre.is_empty() {
        let taken = |n: &str| rp.sits.iter().any(|s| s.name == n);
        let name = if taken("Pre") { "Entry" } else { "Pre" };
        situations.push(Situation {
            name: name.to_string(),
            kind: SituationKind::Pre,
            invariants: vec![],
            variant: None,
            parent: None,
            children: vec![],
            span: rp.span.clone(),
            implicit: true,
        });
        pre = Some(0);
    }
    for s in rp.sits {
        let is_pre = s.kind == SituationKind::Pre;
        let id = flatten(s, None, &mut situations);
        if is_pre && pre.is_none() {
            pre = Some(id);
        }
    }
    let pre = pre.unwrap_or(0);
    let mut names = HashSet::new();
    for s in &situations {
        if !names.insert(s.name.clone()) {
            diags.push(Diagnostic::error(
                "RESOLVE002",
                format!("duplicate situation `{}`", s.name),
                s.span.clone(),
            ));
        }
    }
    if !situations.iter().any(|s| s.kind == SituationKind::Post) {
        diags.push(Diagnostic::error(
            "RESOLVE008",
            format!("procedure `{}` has no postcondition", rp.name),
            rp.span.clone(),
        ));
    }

    let mut declared = HashSet::new();
    for (n, sp) in rp
        .params
        .iter()
        .map(|p| (&p.name, &p.span))
        .chain(rp.locals.iter().map(|l| (&l.name, &l.span)))
        .chain(constants.iter().map(|c| (&c.name, &c.span)))
    {
        if !declared.insert(n.clone()) {
            diags.push(Diagnostic::error(
                "RESOLVE006",
                format!("duplicate declaration of `{n}`"),
                sp.clone(),
            ));
        }
    }

    let valres: HashSet<&str> = rp
        .params
        .iter()
        .filter(|p| p.mode == ParamMode::ValRes)
        .map(|p| p.name.as_str())
        .collect();
    let iface_vars: HashSet<&str> = rp
        .params
        .iter()
        .map(|p| p.name.as_str())
        .chain(constants.iter().map(|c| c.name.as_str()))
        .collect();
    let all_vars: HashSet<&str> = iface_vars
        .iter()
        .copied()
        .chain(rp.locals.iter().map(|l| l.name.as_str()))
        .collect();
    let iface = Scope {
        vars: iface_vars,
        valres: valres.clone(),
    };
    let full = Scope {
        vars: all_vars,
        valres: valres.clone(),
    };

    for s in situations.iter_mut() {
        let scope = if s.kind == SituationKind::Intermediate {
            &full
        } else {
            &iface
        };
        for inv in s.invariants.iter_mut() {
            resolve_expr(inv, scope, &mut Vec::new(), diags);
        }
        if let Some(v) = s.variant.as_mut() {
            resolve_expr(v, &full, &mut Vec::new(), diags);
        }
    }
    let mut recursion_variant = rp.recursion_variant;
    if let Some(v) = recursion_variant.as_mut() {
        let value_params = Scope {
            vars: rp
                .params
                .iter()
                .map(|p| p.name.as_str())
                .chain(constants.iter().map(|c| c.name.as_str()))
                .collect(),
            valres: HashSet::new(),
        };
        resolve_expr(v, &value_params, &mut Vec::new(), diags);
    }

    let assignable: HashSet<&str> = rp
        .locals
        .iter()
        .map(|l| l.name.as_str())
        .chain(valres.iter().copied())
        .collect();
    let mut blocks = Vec::new();
    for mut rb in rp.blocks {
        let mut stack = vec![&mut rb.tree];
        while let Some(b) = stack.pop() {
            for st in b.stmts.iter_mut() {
                resolve_statement(st, &full, &assignable, signatures, diags);
            }
            stack.extend(b.choices.iter_mut());
        }
        let mut r = Resolver {
            sits: &situations,
            diags,
        };
        let source = match &rb.source {
            None => Some(pre),
            Some((n, sp)) => r.sit(n, sp),
        };
        if let Some(src) = source {
            if situations[src].kind == SituationKind::Post {
                r.diags.push(Diagnostic::error(
                    "RESOLVE005",
                    format!("transition out of postcondition `{}`", situations[src].name),
                    rb.source
                        .as_ref()
                        .map(|(_, s)| s.clone())
                        .unwrap_or(rb.span.clone()),
                ));
            }
        }
        let tree = r.branch(rb.tree, None);
        if let Some(source) = source {
            blocks.push(TransitionBlock {
                source,
                tree,
                span: rb.span,
            });
        }
    }

    if diags.iter().filter(|d| d.is_error()).count() > n_errors {
        return None;
    }
    let transitions = blocks
        .iter()
        .enumerate()
        .flat_map(|(i, b)| b.desugar(i))
        .collect();
    Some(Procedure {
        name: rp.name,
        params: rp.params,
        locals: rp.locals,
        situations,
        pre,
        blocks,
        transitions,
        recursion_variant,
        span: rp.span,
    })
}

fn resolve_statement(
    st: &mut Statement,
    scope: &Scope,
    assignable: &HashSet<&str>,
    signatures: &HashMap<String, Vec<Param>>,
    diags: &mut Vec<Diagnostic>,
) {
    match &mut st.kind {
        StmtKind::Guard(e) | StmtKind::Assert(e) => resolve_expr(e, scope, &mut Vec::new(), diags),
        StmtKind::Assign(x, e) => {
            resolve_expr(e, scope, &mut Vec::new(), diags);
            if !assignable.contains(x.as_str()) {
                let msg = if scope.vars.contains(x.as_str()) {
                    format!("`{x}` is not assignable (only locals and value-result parameters are)")
                } else {
                    format!("unknown variable `{x}`")
                };
                diags.push(Diagnostic::error("RESOLVE014", msg, st.span.clone()));
            }
        }
        StmtKind::Call(f, args) => {
            for a in args.iter_mut() {
                resolve_expr(a, scope, &mut Vec::new(), diags);
            }
            match signatures.get(f.as_str()) {
                None => diags.push(Diagnostic::error(
                    "RESOLVE007",
                    format!("unknown procedure `{f}`"),
                    st.span.clone(),
                )),
                Some(params) => {
                    if params.len() != args.len() {
                        diags.push(Diagnostic::error(
                            "RESOLVE013",
                            format!(
                                "`{f}` expects {} arguments, got {}",
                                params.len(),
                                args.len()
                            ),
                            st.span.clone(),
                        ));
                        return;
                    }
                    let mut seen = HashSet::new();
                    for (p, a) in params.iter().zip(args.iter()) {
                        if p.mode != ParamMode::ValRes {
                            continue;
                        }
                        match &a.kind {
                            ExprKind::Var(x) if assignable.contains(x.as_str()) => {
                                if !seen.insert(x.clone()) {
                                    diags.push(Diagnostic::error(
                                        "RESOLVE016",
                                        format!("`{x}` is passed to more than one value-result parameter"),
                                        a.span.clone(),
                                    ));
                                }
                            }
                            _ => diags.push(Diagnostic::error(
                                "RESOLVE016",
                                format!("argument for value-result parameter `{}` must be an assignable variable", p.name),
                                a.span.clone(),
                            )),
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> VerificationContext {
        parse_context(src, "t.ibp").unwrap_or_else(|d| {
            panic!(
                "{}",
                d.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join("\n")
            )
        })
    }

    fn codes(src: &str) -> Vec<&'static str> {
        parse_context(src, "t.ibp")
            .unwrap_err()
            .into_iter()
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn empty_procedure_gets_implicit_precondition() {
        let c = parse("context c { procedure p() { post { true } } }");
        let p = &c.procedures[0];
        assert!(p.situations[p.pre].implicit);
        assert_eq!(p.posts().count(), 1);
    }

    #[test]
    fn unknown_target_is_reported_with_span() {
        let src = "context c { procedure p() { post { true }\n transition to Foo { } } }";
        let d = parse_context(src, "t.ibp").unwrap_err();
        assert_eq!(d[0].code, "RESOLVE001");
        assert_eq!(d[0].span.start_line, 2);
    }

    #[test]
    fn valres_old_spelling_resolves() {
        let c = parse("context c { procedure p(valres a: vector) { post { len(a) = len(a_0) } transition to Post { } } }");
        let post = &c.procedures[0].situations[1];
        assert_eq!(
            post.invariants[0].olds().into_iter().collect::<Vec<_>>(),
            ["a"]
        );
    }

    #[test]
    fn forks_desugar_to_linear_paths() {
        let c = parse(
            "context c { procedure p(valres a: vector) { var k: nat; post Done { true }
               situation S { true }
               transition to S { k := 0; }
               transition from S { [k > 0];
                 choice {
                   branch to Done { [k = 1]; }
                   branch { [k > 1]; choice { branch to S { k := k - 1; } branch to Done { a := a; } } }
                 }
               } } }",
        );
        let p = &c.procedures[0];
        let from_s: Vec<_> = p.transitions.iter().filter(|t| t.block == 1).collect();
        assert_eq!(from_s.len(), 3);
        assert_eq!(from_s[1].body.len(), 3);
        assert_eq!(p.situations[from_s[1].target].name, "S");
        assert_eq!(p.blocks[1].forks().len(), 2);
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            codes("context c { procedure p() { situation S { true } } }"),
            ["RESOLVE008"]
        );
        assert_eq!(
            codes("context c { procedure p() { pre { true } post { true } transition from Post to Pre { } } }"),
            ["RESOLVE005", "RESOLVE004"]
        );
        assert_eq!(codes("context c { procedure p(n: nat) { post { true } transition to Post { n := 1; } } }"), ["RESOLVE014"]);
        assert_eq!(
            codes("context c { procedure p() { post { x > 0 } } }"),
            ["RESOLVE003"]
        );
    }

    #[test]
    fn locals_are_not_visible_in_postconditions() {
        assert_eq!(
            codes("context c { procedure p() { var k: nat; post { k = 0 } } }"),
            ["RESOLVE003"]
        );
    }

    #[test]
    fn array_element_assignment_is_sugar() {
        let c = parse("context c { procedure p(valres a: vector) { post { true } transition to Post { a[0] := 1; } } }");
        match &c.procedures[0].transitions[0].body[0].kind {
            StmtKind::Assign(x, e) => {
                assert_eq!(x, "a");
                assert!(matches!(e.kind, ExprKind::Set(..)));
            }
            other => panic!("{other:?}"),
        }
    }
}
