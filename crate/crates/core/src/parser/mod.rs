//! Recursive-descent parser for `.ibp` program files, `.ibt` theory files and
//! standalone expressions.

mod lexer;
mod program;
mod theory;

use std::sync::Arc;

pub use lexer::{tokenize, Tok, Token};
pub use program::parse_context;
pub use theory::{parse_theory, TheoryFile};

use crate::diag::{Diagnostic, SourceSpan};
use crate::model::{BinOp, Domain, Expr, ExprKind, Quantifier, SemType, UnOp};

pub type PResult<T> = Result<T, Diagnostic>;

/// Parses a single expression; the whole input must be consumed.
pub fn parse_expr(text: &str) -> PResult<Expr> {
    parse_expr_in(text, "<expr>")
}

pub fn parse_expr_in(text: &str, file: &str) -> PResult<Expr> {
    let mut p = Parser::new(text, file)?;
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(text: &str, file: &str) -> PResult<Self> {
        let file: Arc<str> = Arc::from(file);
        Ok(Parser {
            toks: tokenize(text, &file)?,
            pos: 0,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    pub(crate) fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    pub(crate) fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn error<T>(&self, what: &str) -> PResult<T> {
        Err(Diagnostic::error(
            "PARSE001",
            format!("expected {what}, found {}", self.peek().describe()),
            self.span(),
        ))
    }

    pub(crate) fn expect(&mut self, t: Tok) -> PResult<SourceSpan> {
        if self.at(&t) {
            Ok(self.bump().span)
        } else {
            let what = match &t {
                Tok::Eof => "end of input".to_string(),
                other => other.describe(),
            };
            self.error(&what)
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: &str) -> PResult<SourceSpan> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    pub(crate) fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().span;
                Ok((s, sp))
            }
            _ => self.error("identifier"),
        }
    }

    pub(crate) fn ident_list(&mut self) -> PResult<Vec<(String, SourceSpan)>> {
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    pub(crate) fn sem_type(&mut self) -> PResult<SemType> {
        let (name, _) = self.ident()?;
        let t = match name.as_str() {
            "int" => SemType::Int,
            "nat" => SemType::Nat,
            "bool" => SemType::Bool,
            "vector" => {
                if self.eat(&Tok::LBracket) {
                    self.expect_kw("int")?;
                    self.expect(Tok::RBracket)?;
                }
                SemType::Vector
            }
            _ => {
                self.pos -= 1;
                return self.error("a type (`int`, `nat`, `bool` or `vector`)");
            }
        };
        Ok(t)
    }

    pub(crate) fn domain(&mut self) -> PResult<Domain> {
        for (kw, mk) in [
            ("index", Domain::Index as fn(Box<Expr>) -> Domain),
            ("upto", Domain::Upto),
            ("below", Domain::Below),
        ] {
            if self.at_kw(kw) && self.peek_at(1) == &Tok::LParen {
                self.bump();
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(mk(Box::new(e)));
            }
        }
        Ok(Domain::Type(self.sem_type()?))
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        if matches!(self.peek(), Tok::Forall | Tok::Exists) {
            return self.quant();
        }
        self.iff()
    }

    fn quant(&mut self) -> PResult<Expr> {
        let start = self.span();
        let q = if self.bump().tok == Tok::Forall {
            Quantifier::Forall
        } else {
            Quantifier::Exists
        };
        self.expect(Tok::LParen)?;
        let mut binders = Vec::new();
        loop {
            let names = self.ident_list()?;
            self.expect(Tok::Colon)?;
            let d = self.domain()?;
            for (n, _) in names {
                binders.push((n, d.clone()));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Colon)?;
        let body = self.expr()?;
        let span = start.to(&body.span);
        Ok(binders.into_iter().rev().fold(body, |acc, (x, d)| {
            Expr::new(ExprKind::Quant(q, x, d, Box::new(acc)), span.clone())
        }))
    }

    fn iff(&mut self) -> PResult<Expr> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.implies()?;
            lhs = Expr::bin(BinOp::Iff, lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> PResult<Expr> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = if matches!(self.peek(), Tok::Forall | Tok::Exists) {
                self.quant()?
            } else {
                self.implies()?
            };
            return Ok(Expr::bin(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            let rhs = self.and()?;
            lhs = Expr::bin(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut lhs = self.not()?;
        while self.eat(&Tok::And) {
            let rhs = self.not()?;
            lhs = Expr::bin(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> PResult<Expr> {
        if self.at(&Tok::Not) {
            let start = self.bump().span;
            let e = self.not()?;
            let span = start.to(&e.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> PResult<Expr> {
        let lhs = self.add()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add()?;
        if matches!(
            self.peek(),
            Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge
        ) {
            return Err(Diagnostic::error(
                "PARSE001",
                "comparison operators do not chain",
                self.span(),
            ));
        }
        Ok(Expr::bin(op, lhs, rhs))
    }

    fn add(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn mul(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at(&Tok::Minus) {
            let start = self.bump().span;
            if let Tok::Int(v) = *self.peek() {
                let sp = start.to(&self.bump().span);
                return self.postfix(Expr::new(ExprKind::Int(-v), sp));
            }
            let e = self.unary()?;
            let span = start.to(&e.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span));
        }
        let a = self.atom()?;
        self.postfix(a)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        while self.at(&Tok::LBracket) {
            self.bump();
            let i = self.expr()?;
            if self.eat(&Tok::Assign) {
                let x = self.expr()?;
                let end = self.expect(Tok::RBracket)?;
                let span = e.span.to(&end);
                e = Expr::new(ExprKind::Set(Box::new(e), Box::new(i), Box::new(x)), span);
            } else {
                let end = self.expect(Tok::RBracket)?;
                let span = e.span.to(&end);
                e = Expr::new(ExprKind::Get(Box::new(e), Box::new(i)), span);
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<(Vec<Expr>, SourceSpan)> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            args.push(self.expr()?);
            while self.eat(&Tok::Comma) {
                args.push(self.expr()?);
            }
        }
        let end = self.expect(Tok::RParen)?;
        Ok((args, end))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(v), start))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                let end = self.expect(Tok::RParen)?;
                Ok(e.with_span(start.to(&end)))
            }
            Tok::Forall | Tok::Exists => self.quant(),
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "true" => return Ok(Expr::new(ExprKind::Bool(true), start)),
                    "false" => return Ok(Expr::new(ExprKind::Bool(false), start)),
                    "if" => return self.ite(start),
                    _ => {}
                }
                if !self.at(&Tok::LParen) {
                    return Ok(Expr::new(ExprKind::Var(name), start));
                }
                if name == "old" {
                    self.bump();
                    let (x, _) = self.ident()?;
                    let end = self.expect(Tok::RParen)?;
                    return Ok(Expr::new(ExprKind::Old(x), start.to(&end)));
                }
                let (mut args, end) = self.args()?;
                let span = start.to(&end);
                let builtin = |n: usize| args.len() == n;
                let kind = match name.as_str() {
                    "len" if builtin(1) => ExprKind::Len(Box::new(args.remove(0))),
                    "access" if builtin(2) => {
                        let i = args.remove(1);
                        ExprKind::Get(Box::new(args.remove(0)), Box::new(i))
                    }
                    "update" if builtin(3) => {
                        let x = args.remove(2);
                        let i = args.remove(1);
                        ExprKind::Set(Box::new(args.remove(0)), Box::new(i), Box::new(x))
                    }
                    "len" | "access" | "update" => {
                        return Err(Diagnostic::error(
                            "PARSE005",
                            format!("wrong number of arguments to built-in `{name}`"),
                            span,
                        ))
                    }
                    _ => ExprKind::App(name, args),
                };
                Ok(Expr::new(kind, span))
            }
            _ => self.error("an expression"),
        }
    }

    fn ite(&mut self, start: SourceSpan) -> PResult<Expr> {
        let c = self.expr()?;
        self.expect_kw("then")?;
        let t = self.expr()?;
        let f = if self.eat_kw("elsif") {
            let sp = self.prev_span();
            self.ite(sp)?
        } else {
            self.expect_kw("else")?;
            let f = self.expr()?;
            self.expect_kw("endif")?;
            f
        };
        let span = start.to(&self.prev_span());
        Ok(Expr::new(
            ExprKind::Ite(Box::new(c), Box::new(t), Box::new(f)),
            span,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap_or_else(|d| panic!("{d}"))
    }

    #[test]
    fn implication_associates_right() {
        assert_eq!(p("a => b => c"), p("a => (b => c)"));
        assert_ne!(p("a => b => c"), p("(a => b) => c"));
    }

    #[test]
    fn precedence_ladder() {
        assert_eq!(
            p("not a and b or c => d <=> e"),
            p("((((not a) and b) or c) => d) <=> e")
        );
        assert_eq!(p("a + b * c < d - e"), p("(a + (b * c)) < (d - e)"));
    }

    #[test]
    fn quantifier_shape() {
        let e = p("forall (i:nat): m<=i => a[l(i)] <= a[i]");
        match &e.kind {
            ExprKind::Quant(Quantifier::Forall, x, Domain::Type(SemType::Nat), body) => {
                assert_eq!(x, "i");
                assert!(matches!(body.kind, ExprKind::Binary(BinOp::Implies, _, _)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn multi_binder_nests() {
        assert_eq!(
            p("forall (i, j: index(a)): i < j"),
            p("forall (i: index(a)): forall (j: index(a)): i < j")
        );
    }

    #[test]
    fn unclosed_index_is_an_error() {
        let d = parse_expr("a[i").unwrap_err();
        assert_eq!(d.code, "PARSE001");
        assert_eq!((d.span.start_line, d.span.start_col), (1, 4));
    }

    #[test]
    fn comparisons_do_not_chain() {
        assert!(parse_expr("a < b < c").is_err());
    }

    #[test]
    fn builtins_and_updates() {
        assert_eq!(p("access(a, i)"), p("a[i]"));
        assert_eq!(p("update(a, i, x)"), p("a[i := x]"));
        assert!(matches!(p("len(a)").kind, ExprKind::Len(_)));
        assert!(matches!(p("old(a)").kind, ExprKind::Old(_)));
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(p("-3").kind, ExprKind::Int(-3));
        assert!(matches!(p("-x").kind, ExprKind::Unary(UnOp::Neg, _)));
        assert!(matches!(
            p("a - 3").kind,
            ExprKind::Binary(BinOp::Sub, _, _)
        ));
    }

    #[test]
    fn elsif_chain() {
        assert_eq!(
            p("if k = i then j elsif k = j then i else k endif"),
            p("if k = i then j else if k = j then i else k endif endif")
        );
    }

    #[test]
    fn printing_reparses() {
        for s in [
            "a => b => c",
            "(a => b) => c",
            "forall (i: nat): m <= i => (i /= k => (l(i) < n => a[l(i)] <= a[i]) and (r(i) < n => a[r(i)] <= a[i]))",
            "a - (b - c) * -2",
            "-(1) + -x",
            "not (a or b) and c",
            "swap(a, 0, k)[k := 3][0]",
            "(forall (i: nat): i < k) and (exists (j: upto(n)): j = k)",
        ] {
            let e = p(s);
            assert_eq!(p(&e.to_string()), e, "{s} printed as {e}");
        }
    }
}
