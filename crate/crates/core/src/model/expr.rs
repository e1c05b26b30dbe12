//! Guard, action and output expressions.
//!
//! Expressions are resolved at parse time: variables and trigger parameters
//! are referenced by index, record lookups by the list of flattened
//! variables they can select from.

use std::fmt;

use super::value::{Domain, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn apply<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

/// Record lookup `table[key]`: selects the flattened variable `table.<key>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lookup {
    pub table: String,
    pub key: Box<Expr>,
    /// `(symbol, variable index)` for every symbol of the key's domain.
    pub slots: Vec<(String, usize)>,
}

impl Lookup {
    pub fn slot(&self, vars: &[Value], params: &[Value]) -> Result<usize, EvalError> {
        match self.key.eval(vars, params)? {
            Value::Sym(s) => self
                .slots
                .iter()
                .find(|(sym, _)| *sym == s)
                .map(|(_, idx)| *idx)
                .ok_or(EvalError::NoSlot(self.table.clone(), s)),
            other => Err(EvalError::Type(format!("lookup key {other} is not a symbol"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Value),
    Var(usize),
    Param(usize),
    Lookup(Lookup),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("type error: {0}")]
    Type(String),
    #[error("record {0} has no slot {1}")]
    NoSlot(String, String),
    #[error("index out of range")]
    Index,
}

impl Expr {
    pub fn eval(&self, vars: &[Value], params: &[Value]) -> Result<Value, EvalError> {
        Ok(match self {
            Expr::Lit(v) => v.clone(),
            Expr::Var(i) => vars.get(*i).cloned().ok_or(EvalError::Index)?,
            Expr::Param(i) => params.get(*i).cloned().ok_or(EvalError::Index)?,
            Expr::Lookup(l) => {
                let idx = l.slot(vars, params)?;
                vars.get(idx).cloned().ok_or(EvalError::Index)?
            }
            Expr::Arith(op, a, b) => {
                let (x, y) = (int(a.eval(vars, params)?)?, int(b.eval(vars, params)?)?);
                Value::Int(match op {
                    ArithOp::Add => x.saturating_add(y),
                    ArithOp::Sub => x.saturating_sub(y),
                })
            }
            Expr::Cmp(op, a, b) => {
                let (x, y) = (a.eval(vars, params)?, b.eval(vars, params)?);
                let r = match (&x, &y) {
                    (Value::Int(p), Value::Int(q)) => op.apply(p, q),
                    (Value::Bool(p), Value::Bool(q)) if !op.is_ordering() => op.apply(p, q),
                    (Value::Sym(p), Value::Sym(q)) if !op.is_ordering() => op.apply(p, q),
                    _ => return Err(EvalError::Type(format!("cannot compare {x} {} {y}", op.symbol()))),
                };
                Value::Bool(r)
            }
            Expr::And(a, b) => Value::Bool(boolean(a.eval(vars, params)?)? & boolean(b.eval(vars, params)?)?),
            Expr::Or(a, b) => Value::Bool(boolean(a.eval(vars, params)?)? | boolean(b.eval(vars, params)?)?),
            Expr::Not(a) => Value::Bool(!boolean(a.eval(vars, params)?)?),
        })
    }

    pub fn eval_bool(&self, vars: &[Value], params: &[Value]) -> Result<bool, EvalError> {
        boolean(self.eval(vars, params)?)
    }

    /// Atomic conditions in left-to-right order: every maximal
    /// sub-expression below the boolean connectives that is not a literal.
    pub fn atoms(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Expr::Not(a) => a.collect_atoms(out),
            Expr::Lit(_) => {}
            other => out.push(other),
        }
    }

    /// Mutable visitor over every node, pre-order.
    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match self {
            Expr::Lookup(l) => l.key.visit_mut(f),
            Expr::Arith(_, a, b) | Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.visit_mut(f);
                b.visit_mut(f);
            }
            Expr::Not(a) => a.visit_mut(f),
            Expr::Lit(_) | Expr::Var(_) | Expr::Param(_) => {}
        }
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Lookup(l) => l.key.visit(f),
            Expr::Arith(_, a, b) | Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Not(a) => a.visit(f),
            Expr::Lit(_) | Expr::Var(_) | Expr::Param(_) => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(_) => 3,
            Expr::Cmp(..) => 4,
            Expr::Arith(..) => 5,
            _ => 6,
        }
    }

    pub fn display<'a>(&'a self, names: &'a Names<'a>) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

fn int(v: Value) -> Result<i64, EvalError> {
    v.as_int().ok_or_else(|| EvalError::Type(format!("{v} is not an integer")))
}

fn boolean(v: Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::Type(format!("{v} is not a boolean")))
}

/// Static type of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
    Enum(Vec<String>),
    /// A bare symbol literal; compatible with any enumeration containing it.
    Sym(String),
}

impl Ty {
    pub fn of_domain(d: &Domain) -> Ty {
        match d {
            Domain::Int { .. } => Ty::Int,
            Domain::Bool => Ty::Bool,
            Domain::Enum(s) => Ty::Enum(s.clone()),
        }
    }

    pub fn compatible(&self, other: &Ty) -> bool {
        match (self, other) {
            (Ty::Int, Ty::Int) | (Ty::Bool, Ty::Bool) => true,
            (Ty::Enum(a), Ty::Enum(b)) => a == b,
            (Ty::Enum(a), Ty::Sym(s)) | (Ty::Sym(s), Ty::Enum(a)) => a.contains(s),
            (Ty::Sym(a), Ty::Sym(b)) => a == b,
            _ => false,
        }
    }

    /// Whether a value of this type may be stored in `domain`.
    pub fn assignable_to(&self, domain: &Domain) -> bool {
        Ty::of_domain(domain).compatible(self)
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("int"),
            Ty::Bool => f.write_str("bool"),
            Ty::Enum(s) => write!(f, "enum{{{}}}", s.join(",")),
            Ty::Sym(s) => write!(f, "symbol {s}"),
        }
    }
}

/// Domains visible to an expression: model variables and, inside a
/// transition, the trigger's parameters.
pub struct Scope<'a> {
    pub vars: &'a [Domain],
    pub params: &'a [Domain],
}

impl Expr {
    pub fn type_of(&self, scope: &Scope<'_>) -> Result<Ty, String> {
        match self {
            Expr::Lit(Value::Int(_)) => Ok(Ty::Int),
            Expr::Lit(Value::Bool(_)) => Ok(Ty::Bool),
            Expr::Lit(Value::Sym(s)) => Ok(Ty::Sym(s.clone())),
            Expr::Var(i) => scope
                .vars
                .get(*i)
                .map(Ty::of_domain)
                .ok_or_else(|| format!("variable index {i} out of range")),
            Expr::Param(i) => scope
                .params
                .get(*i)
                .map(Ty::of_domain)
                .ok_or_else(|| format!("parameter index {i} out of range")),
            Expr::Lookup(l) => {
                let key = l.key.type_of(scope)?;
                let Ty::Enum(syms) = key else {
                    return Err(format!("lookup key of {} must be an enumeration, found {key}", l.table));
                };
                if syms.len() != l.slots.len() || syms.iter().zip(&l.slots).any(|(a, (b, _))| a != b) {
                    return Err(format!("record {} does not cover key domain", l.table));
                }
                let mut ty: Option<&Domain> = None;
                for (_, idx) in &l.slots {
                    let d = scope.vars.get(*idx).ok_or("lookup slot out of range")?;
                    if let Some(prev) = ty {
                        if prev != d {
                            return Err(format!("fields of record {} differ in domain", l.table));
                        }
                    }
                    ty = Some(d);
                }
                ty.map(Ty::of_domain).ok_or_else(|| format!("record {} is empty", l.table))
            }
            Expr::Arith(_, a, b) => {
                let (x, y) = (a.type_of(scope)?, b.type_of(scope)?);
                if x == Ty::Int && y == Ty::Int {
                    Ok(Ty::Int)
                } else {
                    Err(format!("arithmetic on {x} and {y}"))
                }
            }
            Expr::Cmp(op, a, b) => {
                let (x, y) = (a.type_of(scope)?, b.type_of(scope)?);
                if !x.compatible(&y) {
                    return Err(format!("cannot compare {x} with {y}"));
                }
                if op.is_ordering() && x != Ty::Int {
                    return Err(format!("ordering comparison {} on {x}", op.symbol()));
                }
                Ok(Ty::Bool)
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                for e in [a, b] {
                    let t = e.type_of(scope)?;
                    if t != Ty::Bool {
                        return Err(format!("boolean connective applied to {t}"));
                    }
                }
                Ok(Ty::Bool)
            }
            Expr::Not(a) => match a.type_of(scope)? {
                Ty::Bool => Ok(Ty::Bool),
                t => Err(format!("not applied to {t}")),
            },
        }
    }
}

/// Names used when rendering resolved expressions back to source form.
pub struct Names<'a> {
    pub vars: Vec<&'a str>,
    pub params: Vec<&'a str>,
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a Names<'a>,
}

impl ExprDisplay<'_> {
    fn child(&self, e: &Expr, parens: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = ExprDisplay { expr: e, names: self.names };
        if parens {
            write!(f, "({inner})")
        } else {
            write!(f, "{inner}")
        }
    }

    fn binary(&self, op: &str, a: &Expr, b: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.expr.precedence();
        self.child(a, a.precedence() < p, f)?;
        write!(f, " {op} ")?;
        self.child(b, b.precedence() <= p, f)
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Var(i) => f.write_str(self.names.vars.get(*i).copied().unwrap_or("?")),
            Expr::Param(i) => f.write_str(self.names.params.get(*i).copied().unwrap_or("?")),
            Expr::Lookup(l) => {
                write!(f, "{}[", l.table)?;
                self.child(&l.key, false, f)?;
                f.write_str("]")
            }
            Expr::Arith(op, a, b) => self.binary(if *op == ArithOp::Add { "+" } else { "-" }, a, b, f),
            Expr::Cmp(op, a, b) => {
                // comparison is non-associative: parenthesize nested comparisons on both sides
                self.child(a, a.precedence() <= 4, f)?;
                write!(f, " {} ", op.symbol())?;
                self.child(b, b.precedence() <= 4, f)
            }
            Expr::And(a, b) => self.binary("and", a, b, f),
            Expr::Or(a, b) => self.binary("or", a, b, f),
            Expr::Not(a) => {
                f.write_str("not ")?;
                self.child(a, a.precedence() < 3, f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(i: i64) -> Box<Expr> {
        Box::new(Expr::Lit(Value::Int(i)))
    }

    #[test]
    fn eval_comparisons_and_connectives() {
        let vars = [Value::Int(1), Value::Bool(true)];
        let e = Expr::And(
            Box::new(Expr::Cmp(CmpOp::Lt, Box::new(Expr::Var(0)), lit(2))),
            Box::new(Expr::Not(Box::new(Expr::Var(1)))),
        );
        assert_eq!(e.eval_bool(&vars, &[]), Ok(false));
        assert_eq!(e.atoms().len(), 2);
        let sum = Expr::Arith(ArithOp::Sub, Box::new(Expr::Var(0)), lit(3));
        assert_eq!(sum.eval(&vars, &[]), Ok(Value::Int(-2)));
    }

    #[test]
    fn ordering_on_booleans_is_a_type_error() {
        let scope = Scope { vars: &[Domain::Bool], params: &[] };
        let e = Expr::Cmp(CmpOp::Lt, Box::new(Expr::Var(0)), Box::new(Expr::Lit(Value::Bool(true))));
        assert!(e.type_of(&scope).is_err());
        let ok = Expr::Cmp(CmpOp::Eq, Box::new(Expr::Var(0)), Box::new(Expr::Lit(Value::Bool(true))));
        assert_eq!(ok.type_of(&scope), Ok(Ty::Bool));
    }

    #[test]
    fn symbol_literal_must_belong_to_enum() {
        let scope = Scope { vars: &[Domain::Enum(vec!["a".into(), "b".into()])], params: &[] };
        let sym = |s: &str| Box::new(Expr::Lit(Value::Sym(s.into())));
        assert!(Expr::Cmp(CmpOp::Eq, Box::new(Expr::Var(0)), sym("b")).type_of(&scope).is_ok());
        assert!(Expr::Cmp(CmpOp::Eq, Box::new(Expr::Var(0)), sym("c")).type_of(&scope).is_err());
    }

    #[test]
    fn display_parenthesizes_by_precedence() {
        let names = Names { vars: vec!["x", "y"], params: vec![] };
        let e = Expr::And(
            Box::new(Expr::Or(
                Box::new(Expr::Cmp(CmpOp::Eq, Box::new(Expr::Var(0)), lit(1))),
                Box::new(Expr::Var(1)),
            )),
            Box::new(Expr::Not(Box::new(Expr::Cmp(CmpOp::Ge, Box::new(Expr::Var(0)), lit(0))))),
        );
        assert_eq!(e.display(&names).to_string(), "(x = 1 or y) and not x >= 0");
        let d = Expr::Arith(ArithOp::Sub, Box::new(Expr::Var(0)), Box::new(Expr::Arith(ArithOp::Sub, lit(1), lit(2))));
        assert_eq!(d.display(&names).to_string(), "x - (1 - 2)");
    }
}
