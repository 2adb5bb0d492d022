//! Theory files: definitions, uninterpreted symbols, lemmas and trigger hints.

use super::{PResult, Parser, Tok};
use crate::diag::{Diagnostic, SourceSpan};
use crate::prelude::{FParam, FuncDef, Lemma};

/// A parsed `.ibt` file before it is merged into a theory environment.
#[derive(Clone, Debug)]
pub struct TheoryFile {
    pub name: String,
    pub defs: Vec<FuncDef>,
    pub lemmas: Vec<Lemma>,
    /// Names hidden from the solver by an `opaque f, g;` directive.
    pub opaque: Vec<(String, SourceSpan)>,
    pub triggers: Vec<(String, Vec<crate::model::Expr>, SourceSpan)>,
    pub span: SourceSpan,
}

pub fn parse_theory(text: &str, file: &str) -> PResult<TheoryFile> {
    let mut p = Parser::new(text, file)?;
    let start = p.expect_kw("theory")?;
    let (name, _) = p.ident()?;
    p.expect(Tok::LBrace)?;
    let mut th = TheoryFile {
        name,
        defs: vec![],
        lemmas: vec![],
        opaque: vec![],
        triggers: vec![],
        span: start.clone(),
    };
    while !p.at(&Tok::RBrace) {
        let item_start = p.span();
        if p.eat_kw("opaque") {
            if p.at_kw("def") {
                p.bump();
                th.defs.push(def_rest(&mut p, item_start, true)?);
            } else {
                for n in p.ident_list()? {
                    th.opaque.push(n);
                }
                p.expect(Tok::Semi)?;
            }
        } else if p.eat_kw("def") {
            th.defs.push(def_rest(&mut p, item_start, false)?);
        } else if p.eat_kw("uninterpreted") {
            let (name, _) = p.ident()?;
            let params = fparams(&mut p)?;
            p.expect(Tok::Colon)?;
            let result = p.sem_type()?;
            let end = p.expect(Tok::Semi)?;
            th.defs.push(FuncDef {
                name,
                params,
                result,
                body: None,
                opaque: true,
                ensures: None,
                span: item_start.to(&end),
            });
        } else if p.eat_kw("lemma") {
            let (name, _) = p.ident()?;
            let params = if p.at(&Tok::LParen) {
                fparams(&mut p)?
            } else {
                vec![]
            };
            p.expect(Tok::Colon)?;
            let statement = p.expr()?;
            let end = p.expect(Tok::Semi)?;
            th.lemmas.push(Lemma {
                name,
                params,
                statement,
                triggers: vec![],
                span: item_start.to(&end),
            });
        } else if p.eat_kw("trigger") {
            let (name, _) = p.ident()?;
            p.expect(Tok::Colon)?;
            let mut terms = vec![p.expr()?];
            while p.eat(&Tok::Comma) {
                terms.push(p.expr()?);
            }
            let end = p.expect(Tok::Semi)?;
            th.triggers.push((name, terms, item_start.to(&end)));
        } else {
            return p.error("`def`, `opaque`, `uninterpreted`, `lemma` or `trigger`");
        }
    }
    let end = p.expect(Tok::RBrace)?;
    p.expect(Tok::Eof)?;
    th.span = start.to(&end);
    attach_triggers(&mut th)?;
    Ok(th)
}

fn def_rest(p: &mut Parser, start: SourceSpan, opaque: bool) -> PResult<FuncDef> {
    let (name, _) = p.ident()?;
    let params = fparams(p)?;
    p.expect(Tok::Colon)?;
    let result = p.sem_type()?;
    p.expect(Tok::Eq)?;
    let body = p.expr()?;
    let ensures = if p.eat_kw("ensures") {
        Some(p.expr()?)
    } else {
        None
    };
    let end = p.expect(Tok::Semi)?;
    Ok(FuncDef {
        name,
        params,
        result,
        body: Some(body),
        opaque,
        ensures,
        span: start.to(&end),
    })
}

fn fparams(p: &mut Parser) -> PResult<Vec<FParam>> {
    p.expect(Tok::LParen)?;
    let mut out = Vec::new();
    if !p.at(&Tok::RParen) {
        loop {
            let names = p.ident_list()?;
            p.expect(Tok::Colon)?;
            let d = p.domain()?;
            for (n, span) in names {
                out.push(FParam {
                    name: n,
                    domain: d.clone(),
                    span,
                });
            }
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
    }
    p.expect(Tok::RParen)?;
    Ok(out)
}

fn attach_triggers(th: &mut TheoryFile) -> PResult<()> {
    for (name, terms, span) in std::mem::take(&mut th.triggers) {
        match th.lemmas.iter_mut().find(|l| l.name == name) {
            Some(l) => l.triggers.push(terms),
            None => {
                return Err(Diagnostic::error(
                    "RESOLVE011",
                    format!("trigger refers to unknown lemma `{name}`"),
                    span,
                ))
            }
        }
    }
    Ok(())
}
