//! Just enough of an s-expression reader for solver responses.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            Sexp::Atom(_) => None,
        }
    }

    /// Integer literal, including the `(- n)` form.
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Sexp::Atom(a) => a.parse().ok(),
            Sexp::List(l) => match l.as_slice() {
                [Sexp::Atom(m), x] if m == "-" => x.as_int()?.checked_neg(),
                _ => None,
            },
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.atom()? {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(l) => {
                f.write_str("(")?;
                for (i, x) in l.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SexpError {
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unterminated {0}")]
    Unterminated(&'static str),
}

/// Reads every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or(SexpError::Unbalanced)?;
                stack
                    .last_mut()
                    .ok_or(SexpError::Unbalanced)?
                    .push(Sexp::List(done));
            }
            ';' => {
                for (_, c) in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            '"' | '|' => {
                let close = c;
                let mut end = None;
                while let Some((j, d)) = chars.next() {
                    if d == close {
                        // `""` is an escaped quote inside a string literal.
                        if close == '"' && chars.peek().map(|p| p.1) == Some('"') {
                            chars.next();
                            continue;
                        }
                        end = Some(j);
                        break;
                    }
                }
                let end = end.ok_or(SexpError::Unterminated(if close == '"' {
                    "string"
                } else {
                    "quoted symbol"
                }))?;
                let tok = &text[i..=end];
                let tok = if close == '|' {
                    &tok[1..tok.len() - 1]
                } else {
                    tok
                };
                stack
                    .last_mut()
                    .ok_or(SexpError::Unbalanced)?
                    .push(Sexp::Atom(tok.to_string()));
            }
            _ => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' || d == ';' {
                        break;
                    }
                    end = j + d.len_utf8();
                    chars.next();
                }
                stack
                    .last_mut()
                    .ok_or(SexpError::Unbalanced)?
                    .push(Sexp::Atom(text[i..end].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SexpError::Unbalanced);
    }
    Ok(stack.pop().unwrap_or_default())
}
