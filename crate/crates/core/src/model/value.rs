//! Runtime values: integers, booleans and integer vectors.

use std::fmt;

use serde::Serialize;

use super::SemType;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Vector(Vec<i64>),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[i64]> {
        match self {
            Value::Vector(v) => Some(v),
            _ => None,
        }
    }

    /// Whether the value inhabits `ty`.
    pub fn has_type(&self, ty: SemType) -> bool {
        match (self, ty) {
            (Value::Int(_), SemType::Int)
            | (Value::Bool(_), SemType::Bool)
            | (Value::Vector(_), SemType::Vector) => true,
            (Value::Int(v), SemType::Nat) => *v >= 0,
            _ => false,
        }
    }

    /// Default initial value of a local.
    pub fn zero(ty: SemType) -> Value {
        match ty {
            SemType::Int | SemType::Nat => Value::Int(0),
            SemType::Bool => Value::Bool(false),
            SemType::Vector => Value::Vector(Vec::new()),
        }
    }
}

/// Renders in the input literal syntax: `3`, `true`, `[1, 2]`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Vector(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nat_membership() {
        assert!(Value::Int(0).has_type(SemType::Nat));
        assert!(!Value::Int(-1).has_type(SemType::Nat));
        assert!(Value::Int(-1).has_type(SemType::Int));
        assert!(!Value::Bool(true).has_type(SemType::Int));
    }

    #[test]
    fn display_uses_literal_syntax() {
        assert_eq!(Value::Vector(vec![3, -1, 2]).to_string(), "[3, -1, 2]");
        assert_eq!(Value::Vector(vec![]).to_string(), "[]");
    }
}
