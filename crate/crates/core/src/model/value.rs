use std::fmt;

use serde::{Deserialize, Serialize};

/// A concrete data value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(String),
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
            Value::Bool(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

/// The finite set of values a variable or event parameter may take.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Domain {
    Int { lo: i64, hi: i64 },
    Enum(Vec<String>),
    Bool,
}

impl Domain {
    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::Int { lo, hi }, Value::Int(v)) => lo <= v && v <= hi,
            (Domain::Enum(syms), Value::Sym(s)) => syms.iter().any(|x| x == s),
            (Domain::Bool, Value::Bool(_)) => true,
            _ => false,
        }
    }

    /// All values in domain order: ascending integers, declared symbol
    /// order, `false` before `true`.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            Domain::Enum(syms) => syms.iter().cloned().map(Value::Sym).collect(),
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            Domain::Int { lo, hi } => (hi - lo + 1).max(0) as u64,
            Domain::Enum(syms) => syms.len() as u64,
            Domain::Bool => 2,
        }
    }

    /// Position of `value` in domain order, if it belongs to the domain.
    pub fn index_of(&self, value: &Value) -> Option<usize> {
        match (self, value) {
            (Domain::Int { lo, hi }, Value::Int(v)) if lo <= v && v <= hi => Some((v - lo) as usize),
            (Domain::Enum(syms), Value::Sym(s)) => syms.iter().position(|x| x == s),
            (Domain::Bool, Value::Bool(b)) => Some(*b as usize),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Int { lo, hi } => write!(f, "int[{lo}..{hi}]"),
            Domain::Enum(syms) => write!(f, "enum{{{}}}", syms.join(",")),
            Domain::Bool => f.write_str("bool"),
        }
    }
}

impl Serialize for Domain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
