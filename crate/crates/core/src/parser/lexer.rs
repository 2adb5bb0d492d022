//! Tokenizer shared by program and theory files.

use std::sync::Arc;

use crate::diag::{Diagnostic, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Assign,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Implies,
    Iff,
    And,
    Or,
    Not,
    Forall,
    Exists,
    Bar,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Assign => ":=",
            Tok::Eq => "=",
            Tok::Ne => "/=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Implies => "=>",
            Tok::Iff => "<=>",
            Tok::And => "and",
            Tok::Or => "or",
            Tok::Not => "not",
            Tok::Forall => "forall",
            Tok::Exists => "exists",
            Tok::Bar => "|",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        "forall" | "FORALL" => Tok::Forall,
        "exists" | "EXISTS" => Tok::Exists,
        "AND" => Tok::And,
        "OR" => Tok::Or,
        "NOT" => Tok::Not,
        _ => return None,
    })
}

pub fn tokenize(text: &str, file: &Arc<str>) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        let start = (cur.line, cur.col);
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                span: SourceSpan::new(file.clone(), start, start),
            });
            return Ok(out);
        };
        let tok = match c {
            '/' if cur.eat('/') => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
                continue;
            }
            '/' if cur.eat('*') => {
                let mut closed = false;
                while let Some(c) = cur.bump() {
                    if c == '*' && cur.eat('/') {
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    return Err(Diagnostic::error(
                        "PARSE003",
                        "unterminated block comment",
                        SourceSpan::new(file.clone(), start, (cur.line, cur.col)),
                    ));
                }
                continue;
            }
            '/' if cur.eat('=') => Tok::Ne,
            '/' => Tok::Slash,
            '!' if cur.eat('=') => Tok::Ne,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '|' => Tok::Bar,
            ':' if cur.eat('=') => Tok::Assign,
            ':' => Tok::Colon,
            '=' if cur.eat('>') => Tok::Implies,
            '=' => Tok::Eq,
            '<' if cur.eat('=') => {
                if cur.eat('>') {
                    Tok::Iff
                } else {
                    Tok::Le
                }
            }
            '<' => Tok::Lt,
            '>' if cur.eat('=') => Tok::Ge,
            '>' => Tok::Gt,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' | '×' => Tok::Star,
            '≤' => Tok::Le,
            '≥' => Tok::Ge,
            '≠' => Tok::Ne,
            '∧' => Tok::And,
            '∨' => Tok::Or,
            '¬' => Tok::Not,
            '⇒' => Tok::Implies,
            '⇔' => Tok::Iff,
            '∀' => Tok::Forall,
            '∃' => Tok::Exists,
            '0'..='9' => {
                let mut s = String::from(c);
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    s.push(d);
                    cur.bump();
                }
                match s.parse::<i64>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => {
                        return Err(Diagnostic::error(
                            "PARSE004",
                            format!("integer literal `{s}` is out of range"),
                            SourceSpan::new(file.clone(), start, (cur.line, cur.col)),
                        ))
                    }
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(d) = cur.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                    s.push(d);
                    cur.bump();
                }
                keyword(&s).unwrap_or(Tok::Ident(s))
            }
            other => {
                return Err(Diagnostic::error(
                    "PARSE002",
                    format!("unexpected character `{other}`"),
                    SourceSpan::new(file.clone(), start, (cur.line, cur.col)),
                ))
            }
        };
        out.push(Token {
            tok,
            span: SourceSpan::new(file.clone(), start, (cur.line, cur.col)),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s, &Arc::from("t"))
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn operators_and_comments() {
        assert_eq!(
            toks("a <= b // x\n /* y */ => c /= d != e <=> f := 1"),
            vec![
                Tok::Ident("a".into()),
                Tok::Le,
                Tok::Ident("b".into()),
                Tok::Implies,
                Tok::Ident("c".into()),
                Tok::Ne,
                Tok::Ident("d".into()),
                Tok::Ne,
                Tok::Ident("e".into()),
                Tok::Iff,
                Tok::Ident("f".into()),
                Tok::Assign,
                Tok::Int(1),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn unicode_operators() {
        assert_eq!(
            toks("∀ ≤ ⇒ ∧"),
            vec![Tok::Forall, Tok::Le, Tok::Implies, Tok::And, Tok::Eof]
        );
    }

    #[test]
    fn spans_track_lines() {
        let t = tokenize("a\n  bc", &Arc::from("f")).unwrap();
        assert_eq!(
            (t[1].span.start_line, t[1].span.start_col, t[1].span.end_col),
            (2, 3, 5)
        );
    }

    #[test]
    fn unterminated_comment_is_reported() {
        let e = tokenize("a /* b", &Arc::from("f")).unwrap_err();
        assert_eq!(e.code, "PARSE003");
    }
}
