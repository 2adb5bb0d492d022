//! Concrete-syntax printing with minimal parentheses. Output reparses to the
//! same tree.

use std::fmt::{self, Display, Formatter, Write};

use super::expr::{BinOp, Domain, Expr, ExprKind, Quantifier, UnOp};

const P_QUANT: u8 = 0;
const P_IFF: u8 = 1;
const P_IMPLIES: u8 = 2;
const P_OR: u8 = 3;
const P_AND: u8 = 4;
const P_NOT: u8 = 5;
const P_CMP: u8 = 6;
const P_ADD: u8 = 7;
const P_MUL: u8 = 8;
const P_NEG: u8 = 9;
const P_ATOM: u8 = 10;

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Iff => P_IFF,
        BinOp::Implies => P_IMPLIES,
        BinOp::Or => P_OR,
        BinOp::And => P_AND,
        BinOp::Add | BinOp::Sub => P_ADD,
        BinOp::Mul | BinOp::Div => P_MUL,
        _ => P_CMP,
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Quant(..) => P_QUANT,
        ExprKind::Binary(op, ..) => binop_prec(*op),
        ExprKind::Unary(UnOp::Not, _) => P_NOT,
        ExprKind::Unary(UnOp::Neg, _) => P_NEG,
        ExprKind::Int(v) if *v < 0 => P_NEG,
        _ => P_ATOM,
    }
}

fn write_prec(e: &Expr, min: u8, out: &mut Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        out.write_char('(')?;
        write_expr(e, out)?;
        out.write_char(')')
    } else {
        write_expr(e, out)
    }
}

fn write_list(args: &[Expr], out: &mut Formatter<'_>) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.write_str(", ")?;
        }
        write_expr(a, out)?;
    }
    Ok(())
}

fn write_expr(e: &Expr, out: &mut Formatter<'_>) -> fmt::Result {
    match &e.kind {
        ExprKind::Int(v) => write!(out, "{v}"),
        ExprKind::Bool(b) => write!(out, "{b}"),
        ExprKind::Var(x) => out.write_str(x),
        ExprKind::Old(x) => write!(out, "{x}_0"),
        ExprKind::Unary(UnOp::Not, a) => {
            out.write_str("not ")?;
            write_prec(a, P_NOT, out)
        }
        ExprKind::Unary(UnOp::Neg, a) => {
            out.write_char('-')?;
            if matches!(a.kind, ExprKind::Int(_)) {
                write!(out, "({a})")
            } else {
                write_prec(a, P_ATOM, out)
            }
        }
        ExprKind::Binary(op, a, b) => {
            let p = binop_prec(*op);
            let (lp, rp) = match op {
                BinOp::Implies => (p + 1, p),
                _ if op.is_comparison() => (p + 1, p + 1),
                _ => (p, p + 1),
            };
            write_prec(a, lp, out)?;
            write!(out, " {} ", op.symbol())?;
            write_prec(b, rp, out)
        }
        ExprKind::Ite(c, t, f) => {
            out.write_str("if ")?;
            write_expr(c, out)?;
            out.write_str(" then ")?;
            write_expr(t, out)?;
            let mut rest = &**f;
            while let ExprKind::Ite(c2, t2, f2) = &rest.kind {
                out.write_str(" elsif ")?;
                write_expr(c2, out)?;
                out.write_str(" then ")?;
                write_expr(t2, out)?;
                rest = f2;
            }
            out.write_str(" else ")?;
            write_expr(rest, out)?;
            out.write_str(" endif")
        }
        ExprKind::Quant(q, x, d, body) => {
            let kw = match q {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            };
            write!(out, "{kw} ({x}: {d}): ")?;
            write_expr(body, out)
        }
        ExprKind::Len(a) => {
            out.write_str("len(")?;
            write_expr(a, out)?;
            out.write_char(')')
        }
        ExprKind::Get(a, i) => {
            write_prec(a, P_ATOM, out)?;
            out.write_char('[')?;
            write_expr(i, out)?;
            out.write_char(']')
        }
        ExprKind::Set(a, i, x) => {
            write_prec(a, P_ATOM, out)?;
            out.write_char('[')?;
            write_expr(i, out)?;
            out.write_str(" := ")?;
            write_expr(x, out)?;
            out.write_char(']')
        }
        ExprKind::App(f, args) => {
            out.write_str(f)?;
            out.write_char('(')?;
            write_list(args, out)?;
            out.write_char(')')
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

impl Display for Domain {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Type(t) => write!(f, "{t}"),
            Domain::Index(e) => write!(f, "index({e})"),
            Domain::Upto(e) => write!(f, "upto({e})"),
            Domain::Below(e) => write!(f, "below({e})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::expr::SemType;
    use super::*;

    fn v(x: &str) -> Expr {
        Expr::var(x)
    }

    #[test]
    fn implication_is_right_associative() {
        let r = Expr::implies(v("a"), Expr::implies(v("b"), v("c")));
        assert_eq!(r.to_string(), "a => b => c");
        let l = Expr::implies(Expr::implies(v("a"), v("b")), v("c"));
        assert_eq!(l.to_string(), "(a => b) => c");
    }

    #[test]
    fn subtraction_keeps_right_grouping() {
        let e = Expr::bin(BinOp::Sub, v("a"), Expr::bin(BinOp::Sub, v("b"), v("c")));
        assert_eq!(e.to_string(), "a - (b - c)");
    }

    #[test]
    fn quantifier_under_operator_is_parenthesized() {
        let q = Expr::forall(
            "i",
            Domain::Type(SemType::Nat),
            Expr::bin(BinOp::Le, v("i"), v("k")),
        );
        let e = Expr::and(q, v("p"));
        assert_eq!(e.to_string(), "(forall (i: nat): i <= k) and p");
    }

    #[test]
    fn negation_of_literal_stays_distinct() {
        assert_eq!(Expr::neg(Expr::int(1)).to_string(), "-(1)");
        assert_eq!(Expr::int(-1).to_string(), "-1");
    }

    #[test]
    fn ite_chain_prints_elsif() {
        let e = Expr::ite(v("p"), v("x"), Expr::ite(v("q"), v("y"), v("z")));
        assert_eq!(e.to_string(), "if p then x elsif q then y else z endif");
    }
}
