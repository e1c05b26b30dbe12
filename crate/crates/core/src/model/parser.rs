//! Parser for the line-oriented model DSL.
//!
//! A declaration occupies one logical line; physical lines that start with
//! whitespace continue the previous declaration. `#` starts a comment
//! outside string literals.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::expr::{ArithOp, CmpOp, Expr, Lookup, Scope, Ty};
use super::value::{Domain, Value};
use super::{Assignment, Direction, Event, IcsOption, Model, Output, Param, Requirement, Target, Transition, Variable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("{line}:{col}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("line {line}: duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String, line: usize },
    #[error("line {line}: unresolved {kind} `{name}`")]
    Unresolved { kind: &'static str, name: String, line: usize },
    #[error("line {line}: type mismatch: {detail}")]
    Type { line: usize, detail: String },
    #[error("model declares no states")]
    NoStates,
}

/// Parses and resolves a model.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut decls = Vec::new();
    for line in logical_lines(text) {
        let mut cur = Cursor { chars: line, pos: 0 };
        decls.push(cur.declaration()?);
    }
    resolve(decls)
}

type Pos = (usize, usize);

fn logical_lines(text: &str) -> Vec<Vec<(char, usize, usize)>> {
    let mut out: Vec<Vec<(char, usize, usize)>> = Vec::new();
    for (lno, raw) in text.lines().enumerate() {
        let mut chars = Vec::new();
        let mut in_str = false;
        let mut escaped = false;
        for (cno, c) in raw.chars().enumerate() {
            if in_str {
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == '"' {
                    in_str = false;
                }
            } else if c == '"' {
                in_str = true;
            } else if c == '#' {
                break;
            }
            chars.push((c, lno + 1, cno + 1));
        }
        if chars.iter().all(|(c, ..)| c.is_whitespace()) {
            continue;
        }
        let continues = chars[0].0.is_whitespace();
        match out.last_mut() {
            Some(prev) if continues => {
                let (l, c) = (chars[0].1, chars[0].2);
                prev.push((' ', l, c));
                prev.extend(chars);
            }
            _ => out.push(chars),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Raw syntax
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct RawExpr {
    kind: RawKind,
    pos: Pos,
}

#[derive(Debug, Clone)]
enum RawKind {
    Int(i64),
    Bool(bool),
    Name(String),
    Index(String, Box<RawExpr>),
    Arith(ArithOp, Box<RawExpr>, Box<RawExpr>),
    Cmp(CmpOp, Box<RawExpr>, Box<RawExpr>),
    And(Box<RawExpr>, Box<RawExpr>),
    Or(Box<RawExpr>, Box<RawExpr>),
    Not(Box<RawExpr>),
}

#[derive(Debug, Clone)]
enum RawDomain {
    Scalar(Domain),
    Record(Vec<(String, Domain)>),
}

#[derive(Debug, Clone)]
enum RawLiteral {
    Int(i64),
    Bool(bool),
    Name(String),
}

#[derive(Debug, Clone)]
enum RawInit {
    Scalar(RawLiteral),
    Record(Vec<(String, RawLiteral)>),
}

#[derive(Debug, Clone)]
struct RawTrans {
    id: String,
    source: (String, Pos),
    target: (String, Pos),
    event: (String, Pos),
    binders: Option<Vec<String>>,
    guard: Option<RawExpr>,
    actions: Vec<(RawExpr, RawExpr)>,
    outputs: Vec<(String, Pos, Vec<RawExpr>)>,
    priority: u32,
    reqs: Vec<(String, Pos)>,
    opts: Vec<(String, Pos)>,
}

#[derive(Debug, Clone)]
enum Decl {
    Model(String),
    State { name: String, initial: bool },
    Var { name: String, domain: RawDomain, init: RawInit },
    Event { name: String, dir: Direction, params: Vec<(String, Domain)> },
    Req { id: String, text: String, clause: String },
    Option { id: String, text: String, default: bool },
    Trans(Box<RawTrans>),
}

struct Line {
    no: usize,
    decl: Decl,
}

// ---------------------------------------------------------------------------
// Lexing cursor
// ---------------------------------------------------------------------------

struct Cursor {
    chars: Vec<(char, usize, usize)>,
    pos: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl Cursor {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].0.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.0)
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).map(|c| c.0)
    }

    fn here(&mut self) -> Pos {
        self.skip_ws();
        match self.chars.get(self.pos) {
            Some(&(_, l, c)) => (l, c),
            None => self.chars.last().map(|&(_, l, c)| (l, c + 1)).unwrap_or((0, 0)),
        }
    }

    fn line_no(&self) -> usize {
        self.chars.first().map(|c| c.1).unwrap_or(0)
    }

    fn found(&mut self) -> String {
        self.skip_ws();
        if self.pos >= self.chars.len() {
            return "end of line".into();
        }
        let word: String = self.chars[self.pos..]
            .iter()
            .map(|c| c.0)
            .take_while(|c| !c.is_whitespace())
            .take(16)
            .collect();
        format!("`{word}`")
    }

    fn error<T>(&mut self, expected: &[&str]) -> Result<T, ModelError> {
        let (line, col) = self.here();
        let found = self.found();
        Err(ModelError::Syntax {
            line,
            col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        })
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn starts_with(&mut self, lit: &str) -> bool {
        self.skip_ws();
        lit.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    /// Consumes a punctuation token.
    fn eat(&mut self, lit: &str) -> bool {
        if self.starts_with(lit) {
            self.pos += lit.chars().count();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ModelError> {
        if self.eat(lit) {
            Ok(())
        } else {
            self.error(&[&format!("`{lit}`")])
        }
    }

    /// Consumes a keyword followed by a word boundary.
    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.starts_with(kw) {
            let n = kw.chars().count();
            if self.peek_at(n).is_none_or(|c| !is_ident_char(c) && c != '.') {
                self.pos += n;
                return true;
            }
        }
        false
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ModelError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ModelError> {
        self.skip_ws();
        match self.peek_at(0) {
            Some(c) if is_ident_start(c) => {}
            _ => return self.error(&[what]),
        }
        let mut s = String::new();
        while let Some(c) = self.peek_at(0) {
            if is_ident_char(c) || c == '.' && self.peek_at(1).is_some_and(is_ident_start) {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(s)
    }

    /// Requirement / option identifiers, which may contain `-` and `.`.
    fn tag_id(&mut self, what: &str) -> Result<String, ModelError> {
        self.skip_ws();
        let mut s = String::new();
        while let Some(c) = self.peek_at(0) {
            if is_ident_char(c) || c == '-' || c == '.' {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        if s.is_empty() {
            return self.error(&[what]);
        }
        Ok(s)
    }

    fn int(&mut self) -> Result<i64, ModelError> {
        self.skip_ws();
        let start = self.pos;
        let mut s = String::new();
        if self.peek_at(0) == Some('-') {
            s.push('-');
            self.pos += 1;
        }
        while let Some(c) = self.peek_at(0) {
            if c.is_ascii_digit() {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        match s.parse::<i64>() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.error(&["integer"])
            }
        }
    }

    fn string(&mut self) -> Result<String, ModelError> {
        if !self.eat("\"") {
            return self.error(&["string literal"]);
        }
        let mut s = String::new();
        loop {
            match self.peek_at(0) {
                None => return self.error(&["`\"`"]),
                Some('\\') => {
                    if let Some(c) = self.peek_at(1) {
                        s.push(c);
                    }
                    self.pos += 2;
                }
                Some('"') => {
                    self.pos += 1;
                    return Ok(s);
                }
                Some(c) => {
                    s.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn boolean(&mut self) -> Result<bool, ModelError> {
        if self.eat_kw("true") {
            Ok(true)
        } else if self.eat_kw("false") {
            Ok(false)
        } else {
            self.error(&["`true`", "`false`"])
        }
    }

    fn finish(&mut self, expected: &[&str]) -> Result<(), ModelError> {
        if self.at_end() {
            Ok(())
        } else {
            let mut all: Vec<&str> = expected.to_vec();
            all.push("end of line");
            self.error(&all)
        }
    }

    // -- declarations -------------------------------------------------------

    fn declaration(&mut self) -> Result<Line, ModelError> {
        let no = self.line_no();
        let decl = if self.eat_kw("model") {
            let name = self.tag_id("model name")?;
            self.finish(&[])?;
            Decl::Model(name)
        } else if self.eat_kw("state") {
            let name = self.ident("state name")?;
            let initial = self.eat_kw("initial");
            self.finish(if initial { &[] } else { &["`initial`"] })?;
            Decl::State { name, initial }
        } else if self.eat_kw("var") {
            let name = self.ident("variable name")?;
            self.expect(":")?;
            let domain = self.domain(true)?;
            self.expect("=")?;
            let init = match domain {
                RawDomain::Record(_) => {
                    self.expect("{")?;
                    let mut fields = Vec::new();
                    loop {
                        let f = self.ident("field name")?;
                        self.expect("=")?;
                        fields.push((f, self.literal()?));
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect("}")?;
                    RawInit::Record(fields)
                }
                RawDomain::Scalar(_) => RawInit::Scalar(self.literal()?),
            };
            self.finish(&[])?;
            Decl::Var { name, domain, init }
        } else if let Some(dir) = self.direction() {
            let name = self.ident("event name")?;
            let mut params = Vec::new();
            if self.eat("(") && !self.eat(")") {
                loop {
                    let p = self.ident("parameter name")?;
                    self.expect(":")?;
                    let d = match self.domain(false)? {
                        RawDomain::Scalar(d) => d,
                        RawDomain::Record(_) => unreachable!("records rejected by domain(false)"),
                    };
                    params.push((p, d));
                    if self.eat(")") {
                        break;
                    }
                    if !self.eat(",") {
                        return self.error(&["`,`", "`)`"]);
                    }
                }
            }
            self.finish(&["`(`"])?;
            Decl::Event { name, dir, params }
        } else if self.eat_kw("req") {
            let id = self.tag_id("requirement id")?;
            let text = self.string()?;
            self.expect_kw("clause")?;
            let clause = self.string()?;
            self.finish(&[])?;
            Decl::Req { id, text, clause }
        } else if self.eat_kw("option") {
            let id = self.tag_id("option id")?;
            let text = self.string()?;
            self.expect_kw("default")?;
            let default = self.boolean()?;
            self.finish(&[])?;
            Decl::Option { id, text, default }
        } else if self.eat_kw("trans") {
            Decl::Trans(Box::new(self.transition()?))
        } else {
            return self.error(&[
                "`model`",
                "`state`",
                "`var`",
                "`stimulus`",
                "`observation`",
                "`req`",
                "`option`",
                "`trans`",
            ]);
        };
        Ok(Line { no, decl })
    }

    fn direction(&mut self) -> Option<Direction> {
        if self.eat_kw("stimulus") {
            Some(Direction::Stimulus)
        } else if self.eat_kw("observation") {
            Some(Direction::Observation)
        } else {
            None
        }
    }

    fn domain(&mut self, allow_record: bool) -> Result<RawDomain, ModelError> {
        if self.eat_kw("int") {
            self.expect("[")?;
            let lo = self.int()?;
            self.expect("..")?;
            let hi = self.int()?;
            self.expect("]")?;
            if lo > hi {
                return Err(ModelError::Type {
                    line: self.line_no(),
                    detail: format!("empty integer range {lo}..{hi}"),
                });
            }
            Ok(RawDomain::Scalar(Domain::Int { lo, hi }))
        } else if self.eat_kw("bool") {
            Ok(RawDomain::Scalar(Domain::Bool))
        } else if self.eat_kw("enum") {
            self.expect("{")?;
            let mut syms = Vec::new();
            loop {
                syms.push(self.ident("enumeration symbol")?);
                if self.eat("}") {
                    break;
                }
                if !self.eat(",") {
                    return self.error(&["`,`", "`}`"]);
                }
            }
            Ok(RawDomain::Scalar(Domain::Enum(syms)))
        } else if allow_record && self.eat_kw("record") {
            self.expect("{")?;
            let mut fields = Vec::new();
            loop {
                let name = self.ident("field name")?;
                self.expect(":")?;
                match self.domain(false)? {
                    RawDomain::Scalar(d) => fields.push((name, d)),
                    RawDomain::Record(_) => unreachable!(),
                }
                if self.eat("}") {
                    break;
                }
                if !self.eat(",") {
                    return self.error(&["`,`", "`}`"]);
                }
            }
            Ok(RawDomain::Record(fields))
        } else if allow_record {
            self.error(&["`int`", "`enum`", "`bool`", "`record`"])
        } else {
            self.error(&["`int`", "`enum`", "`bool`"])
        }
    }

    fn literal(&mut self) -> Result<RawLiteral, ModelError> {
        match self.peek() {
            Some(c) if c == '-' || c.is_ascii_digit() => Ok(RawLiteral::Int(self.int()?)),
            Some(c) if is_ident_start(c) => {
                if self.eat_kw("true") {
                    Ok(RawLiteral::Bool(true))
                } else if self.eat_kw("false") {
                    Ok(RawLiteral::Bool(false))
                } else {
                    Ok(RawLiteral::Name(self.ident("value")?))
                }
            }
            _ => self.error(&["value"]),
        }
    }

    fn transition(&mut self) -> Result<RawTrans, ModelError> {
        let id = self.ident("transition id")?;
        self.expect(":")?;
        let sp = self.here();
        let source = (self.ident("source state")?, sp);
        self.expect("->")?;
        let tp = self.here();
        let target = (self.ident("target state")?, tp);
        self.expect_kw("on")?;
        let ep = self.here();
        let event = (self.ident("event name")?, ep);
        let mut binders = None;
        if self.eat("(") {
            let mut bs = Vec::new();
            if !self.eat(")") {
                loop {
                    bs.push(self.ident("parameter name")?);
                    if self.eat(")") {
                        break;
                    }
                    if !self.eat(",") {
                        return self.error(&["`,`", "`)`"]);
                    }
                }
            }
            binders = Some(bs);
        }
        let mut guard = None;
        if self.eat("[") {
            guard = Some(self.expr()?);
            self.expect("]")?;
        }
        let mut actions = Vec::new();
        if self.eat("/") {
            loop {
                let lhs = self.lvalue()?;
                self.expect(":=")?;
                let rhs = self.expr()?;
                actions.push((lhs, rhs));
                if !self.eat(";") {
                    break;
                }
            }
        }
        let mut outputs = Vec::new();
        if self.starts_with("!") && !self.starts_with("!=") {
            self.pos += 1;
            loop {
                let p = self.here();
                let name = self.ident("observation name")?;
                let mut args = Vec::new();
                if self.eat("(") && !self.eat(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.eat(")") {
                            break;
                        }
                        if !self.eat(",") {
                            return self.error(&["`,`", "`)`"]);
                        }
                    }
                }
                outputs.push((name, p, args));
                if !self.eat(",") {
                    break;
                }
            }
        }
        let mut priority = 0;
        if self.eat_kw("prio") {
            let v = self.int()?;
            if v < 0 || v > u32::MAX as i64 {
                return Err(ModelError::Type {
                    line: self.line_no(),
                    detail: format!("priority {v} is not a non-negative integer"),
                });
            }
            priority = v as u32;
        }
        let mut reqs = Vec::new();
        while self.eat("@") {
            let p = self.here();
            reqs.push((self.tag_id("requirement id")?, p));
        }
        let mut opts = Vec::new();
        while self.eat("%") {
            let p = self.here();
            opts.push((self.tag_id("option id")?, p));
        }
        let mut expected = Vec::new();
        if guard.is_none() && actions.is_empty() && outputs.is_empty() {
            expected.push("`[`");
        }
        if actions.is_empty() && outputs.is_empty() {
            expected.push("`/`");
        }
        if outputs.is_empty() {
            expected.push("`!`");
        }
        expected.extend(["`prio`", "`@`", "`%`"]);
        if !opts.is_empty() {
            expected = vec!["`%`"];
        } else if !reqs.is_empty() {
            expected = vec!["`@`", "`%`"];
        }
        self.finish(&expected)?;
        Ok(RawTrans {
            id,
            source,
            target,
            event,
            binders,
            guard,
            actions,
            outputs,
            priority,
            reqs,
            opts,
        })
    }

    fn lvalue(&mut self) -> Result<RawExpr, ModelError> {
        let pos = self.here();
        let name = self.ident("variable name")?;
        if self.eat("[") {
            let key = self.expr()?;
            self.expect("]")?;
            Ok(RawExpr { kind: RawKind::Index(name, Box::new(key)), pos })
        } else {
            Ok(RawExpr { kind: RawKind::Name(name), pos })
        }
    }

    // -- expressions --------------------------------------------------------

    fn expr(&mut self) -> Result<RawExpr, ModelError> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            let rhs = self.and_expr()?;
            let pos = lhs.pos;
            lhs = RawExpr { kind: RawKind::Or(Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<RawExpr, ModelError> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            let rhs = self.not_expr()?;
            let pos = lhs.pos;
            lhs = RawExpr { kind: RawKind::And(Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<RawExpr, ModelError> {
        let pos = self.here();
        if self.eat_kw("not") {
            let inner = self.not_expr()?;
            return Ok(RawExpr { kind: RawKind::Not(Box::new(inner)), pos });
        }
        self.cmp_expr()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        for (lit, op) in [
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("!=", CmpOp::Ne),
            ("==", CmpOp::Eq),
            ("=", CmpOp::Eq),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ] {
            if self.eat(lit) {
                return Some(op);
            }
        }
        None
    }

    fn cmp_expr(&mut self) -> Result<RawExpr, ModelError> {
        let lhs = self.arith_expr()?;
        if let Some(op) = self.cmp_op() {
            let rhs = self.arith_expr()?;
            let pos = lhs.pos;
            return Ok(RawExpr { kind: RawKind::Cmp(op, Box::new(lhs), Box::new(rhs)), pos });
        }
        Ok(lhs)
    }

    fn arith_expr(&mut self) -> Result<RawExpr, ModelError> {
        let mut lhs = self.primary()?;
        loop {
            let op = if self.eat("+") {
                ArithOp::Add
            } else if self.starts_with("-") && !self.starts_with("->") {
                self.pos += 1;
                ArithOp::Sub
            } else {
                break;
            };
            let rhs = self.primary()?;
            let pos = lhs.pos;
            lhs = RawExpr { kind: RawKind::Arith(op, Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<RawExpr, ModelError> {
        let pos = self.here();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || (c == '-' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                Ok(RawExpr { kind: RawKind::Int(self.int()?), pos })
            }
            Some(c) if is_ident_start(c) => {
                if self.eat_kw("true") {
                    return Ok(RawExpr { kind: RawKind::Bool(true), pos });
                }
                if self.eat_kw("false") {
                    return Ok(RawExpr { kind: RawKind::Bool(false), pos });
                }
                let name = self.ident("name")?;
                if self.eat("[") {
                    let key = self.expr()?;
                    self.expect("]")?;
                    return Ok(RawExpr { kind: RawKind::Index(name, Box::new(key)), pos });
                }
                Ok(RawExpr { kind: RawKind::Name(name), pos })
            }
            _ => self.error(&["integer", "name", "`true`", "`false`", "`(`"]),
        }
    }
}

// ---------------------------------------------------------------------------
// Resolution and type checking
// ---------------------------------------------------------------------------

struct Resolver<'a> {
    vars: &'a [Variable],
    var_index: HashMap<&'a str, usize>,
    symbols: HashSet<&'a str>,
}

impl Resolver<'_> {
    fn expr(&self, raw: &RawExpr, binders: &[String]) -> Result<Expr, ModelError> {
        let line = raw.pos.0;
        Ok(match &raw.kind {
            RawKind::Int(i) => Expr::Lit(Value::Int(*i)),
            RawKind::Bool(b) => Expr::Lit(Value::Bool(*b)),
            RawKind::Name(n) => {
                if let Some(i) = binders.iter().position(|b| b == n) {
                    Expr::Param(i)
                } else if let Some(&i) = self.var_index.get(n.as_str()) {
                    Expr::Var(i)
                } else if self.symbols.contains(n.as_str()) {
                    Expr::Lit(Value::Sym(n.clone()))
                } else {
                    return Err(ModelError::Unresolved { kind: "name", name: n.clone(), line });
                }
            }
            RawKind::Index(table, key) => Expr::Lookup(self.lookup(table, key, binders, line)?),
            RawKind::Arith(op, a, b) => Expr::Arith(*op, Box::new(self.expr(a, binders)?), Box::new(self.expr(b, binders)?)),
            RawKind::Cmp(op, a, b) => Expr::Cmp(*op, Box::new(self.expr(a, binders)?), Box::new(self.expr(b, binders)?)),
            RawKind::And(a, b) => Expr::And(Box::new(self.expr(a, binders)?), Box::new(self.expr(b, binders)?)),
            RawKind::Or(a, b) => Expr::Or(Box::new(self.expr(a, binders)?), Box::new(self.expr(b, binders)?)),
            RawKind::Not(a) => Expr::Not(Box::new(self.expr(a, binders)?)),
        })
    }

    fn lookup(&self, table: &str, key: &RawExpr, binders: &[String], line: usize) -> Result<Lookup, ModelError> {
        let prefix = format!("{table}.");
        if !self.vars.iter().any(|v| v.name.starts_with(&prefix)) {
            return Err(ModelError::Unresolved { kind: "record", name: table.to_string(), line });
        }
        let key = self.expr(key, binders)?;
        // the key's symbols are only known once the key is typed; slots are
        // filled by `fill_slots` after scoping.
        Ok(Lookup { table: table.to_string(), key: Box::new(key), slots: Vec::new() })
    }

    /// Completes lookup slots once parameter domains are known.
    fn fill_slots(&self, e: &mut Expr, scope: &Scope<'_>, line: usize) -> Result<(), ModelError> {
        let mut err = None;
        e.visit_mut(&mut |node| {
            if err.is_some() {
                return;
            }
            if let Expr::Lookup(l) = node {
                if !l.slots.is_empty() {
                    return;
                }
                // nested lookups in the key are filled first by recursion below
                if let Err(e) = self.fill_slots(&mut l.key, scope, line) {
                    err = Some(e);
                    return;
                }
                match l.key.type_of(scope) {
                    Ok(Ty::Enum(syms)) => {
                        for s in syms {
                            let field = format!("{}.{s}", l.table);
                            match self.var_index.get(field.as_str()) {
                                Some(&i) => l.slots.push((s, i)),
                                None => {
                                    err = Some(ModelError::Type {
                                        line,
                                        detail: format!("record {} has no field {s}", l.table),
                                    });
                                    return;
                                }
                            }
                        }
                    }
                    Ok(t) => {
                        err = Some(ModelError::Type {
                            line,
                            detail: format!("lookup key of {} must be an enumeration, found {t}", l.table),
                        })
                    }
                    Err(detail) => err = Some(ModelError::Type { line, detail }),
                }
            }
        });
        err.map_or(Ok(()), Err)
    }
}

fn literal_value(lit: &RawLiteral) -> Value {
    match lit {
        RawLiteral::Int(i) => Value::Int(*i),
        RawLiteral::Bool(b) => Value::Bool(*b),
        RawLiteral::Name(n) => Value::Sym(n.clone()),
    }
}

fn check_domain(d: &Domain, line: usize) -> Result<(), ModelError> {
    if let Domain::Enum(syms) = d {
        let mut seen = HashSet::new();
        for s in syms {
            if !seen.insert(s) {
                return Err(ModelError::Duplicate { kind: "enumeration symbol", name: s.clone(), line });
            }
        }
    }
    Ok(())
}

fn type_error(line: usize) -> impl Fn(String) -> ModelError {
    move |detail| ModelError::Type { line, detail }
}

fn resolve(lines: Vec<Line>) -> Result<Model, ModelError> {
    let mut name = None;
    let mut states: Vec<String> = Vec::new();
    let mut initial = None;
    let mut variables: Vec<Variable> = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    let mut requirements: Vec<Requirement> = Vec::new();
    let mut options: Vec<IcsOption> = Vec::new();
    let mut raw_trans = Vec::new();

    for Line { no, decl } in lines {
        match decl {
            Decl::Model(n) => {
                if name.replace(n.clone()).is_some() {
                    return Err(ModelError::Duplicate { kind: "model declaration", name: n, line: no });
                }
            }
            Decl::State { name: s, initial: init } => {
                if states.contains(&s) {
                    return Err(ModelError::Duplicate { kind: "state", name: s, line: no });
                }
                if init && initial.replace(states.len()).is_some() {
                    return Err(ModelError::Duplicate { kind: "initial state", name: s, line: no });
                }
                states.push(s);
            }
            Decl::Var { name: v, domain, init } => {
                let flat: Vec<Variable> = match (domain, init) {
                    (RawDomain::Scalar(d), RawInit::Scalar(lit)) => {
                        check_domain(&d, no)?;
                        vec![Variable { name: v, domain: d, initial: literal_value(&lit) }]
                    }
                    (RawDomain::Record(fields), RawInit::Record(inits)) => {
                        let mut out = Vec::new();
                        for (f, d) in fields {
                            check_domain(&d, no)?;
                            let full = format!("{v}.{f}");
                            if out.iter().any(|x: &Variable| x.name == full) {
                                return Err(ModelError::Duplicate { kind: "record field", name: f, line: no });
                            }
                            let lit = inits.iter().find(|(n, _)| *n == f).ok_or_else(|| ModelError::Type {
                                line: no,
                                detail: format!("record {v} has no initial value for field {f}"),
                            })?;
                            out.push(Variable { name: full, domain: d, initial: literal_value(&lit.1) });
                        }
                        if let Some((extra, _)) = inits.iter().find(|(n, _)| !out.iter().any(|x| x.name == format!("{v}.{n}"))) {
                            return Err(ModelError::Unresolved { kind: "record field", name: extra.clone(), line: no });
                        }
                        out
                    }
                    _ => unreachable!("initializer shape follows domain shape"),
                };
                for var in flat {
                    if variables.iter().any(|x| x.name == var.name) {
                        return Err(ModelError::Duplicate { kind: "variable", name: var.name, line: no });
                    }
                    if !var.domain.contains(&var.initial) {
                        return Err(ModelError::Type {
                            line: no,
                            detail: format!("initial value {} of {} is outside {}", var.initial, var.name, var.domain),
                        });
                    }
                    variables.push(var);
                }
            }
            Decl::Event { name: e, dir, params } => {
                if events.iter().any(|x| x.name == e) {
                    return Err(ModelError::Duplicate { kind: "event", name: e, line: no });
                }
                let mut ps: Vec<Param> = Vec::new();
                for (p, d) in params {
                    check_domain(&d, no)?;
                    if ps.iter().any(|x| x.name == p) {
                        return Err(ModelError::Duplicate { kind: "parameter", name: p, line: no });
                    }
                    ps.push(Param { name: p, domain: d });
                }
                events.push(Event { name: e, direction: dir, params: ps });
            }
            Decl::Req { id, text, clause } => {
                if requirements.iter().any(|r| r.id == id) {
                    return Err(ModelError::Duplicate { kind: "requirement", name: id, line: no });
                }
                requirements.push(Requirement { id, text, clause, excluded: false });
            }
            Decl::Option { id, text, default } => {
                if options.iter().any(|o| o.id == id) {
                    return Err(ModelError::Duplicate { kind: "option", name: id, line: no });
                }
                options.push(IcsOption { id, description: text, default });
            }
            Decl::Trans(t) => raw_trans.push((no, t)),
        }
    }
    if states.is_empty() {
        return Err(ModelError::NoStates);
    }

    let resolver = Resolver {
        vars: &variables,
        var_index: variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect(),
        symbols: variables
            .iter()
            .map(|v| &v.domain)
            .chain(events.iter().flat_map(|e| e.params.iter().map(|p| &p.domain)))
            .filter_map(|d| match d {
                Domain::Enum(s) => Some(s),
                _ => None,
            })
            .flatten()
            .map(String::as_str)
            .collect(),
    };
    let var_domains: Vec<Domain> = variables.iter().map(|v| v.domain.clone()).collect();

    let mut transitions: Vec<Transition> = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (no, raw) in raw_trans {
        if !seen_ids.insert(raw.id.clone()) {
            return Err(ModelError::Duplicate { kind: "transition", name: raw.id, line: no });
        }
        let state = |(n, p): &(String, Pos)| {
            states
                .iter()
                .position(|s| s == n)
                .ok_or(ModelError::Unresolved { kind: "state", name: n.clone(), line: p.0 })
        };
        let source = state(&raw.source)?;
        let target = state(&raw.target)?;
        let trigger = events
            .iter()
            .position(|e| e.name == raw.event.0)
            .ok_or(ModelError::Unresolved { kind: "event", name: raw.event.0.clone(), line: no })?;
        let ev = &events[trigger];
        if ev.direction != Direction::Stimulus {
            return Err(ModelError::Type { line: no, detail: format!("trigger {} is not a stimulus", ev.name) });
        }
        let binders = match raw.binders {
            Some(b) => {
                if b.len() != ev.params.len() {
                    return Err(ModelError::Type {
                        line: no,
                        detail: format!("{} takes {} parameters, {} bound", ev.name, ev.params.len(), b.len()),
                    });
                }
                let mut seen = HashSet::new();
                for x in &b {
                    if !seen.insert(x) {
                        return Err(ModelError::Duplicate { kind: "parameter", name: x.clone(), line: no });
                    }
                }
                b
            }
            None => ev.params.iter().map(|p| p.name.clone()).collect(),
        };
        let param_domains: Vec<Domain> = ev.params.iter().map(|p| p.domain.clone()).collect();
        let scope = Scope { vars: &var_domains, params: &param_domains };

        let guard = match &raw.guard {
            Some(g) => {
                let mut e = resolver.expr(g, &binders)?;
                resolver.fill_slots(&mut e, &scope, g.pos.0)?;
                let ty = e.type_of(&scope).map_err(type_error(g.pos.0))?;
                if ty != Ty::Bool {
                    return Err(ModelError::Type { line: g.pos.0, detail: format!("guard has type {ty}, expected bool") });
                }
                Some(e)
            }
            None => None,
        };

        let mut actions = Vec::new();
        for (lhs, rhs) in &raw.actions {
            let target = match &lhs.kind {
                RawKind::Name(n) => match resolver.var_index.get(n.as_str()) {
                    Some(&i) => Target::Var(i),
                    None => return Err(ModelError::Unresolved { kind: "variable", name: n.clone(), line: lhs.pos.0 }),
                },
                RawKind::Index(table, key) => {
                    let mut e = Expr::Lookup(resolver.lookup(table, key, &binders, lhs.pos.0)?);
                    resolver.fill_slots(&mut e, &scope, lhs.pos.0)?;
                    match e {
                        Expr::Lookup(l) => Target::Lookup(l),
                        _ => unreachable!(),
                    }
                }
                _ => unreachable!("lvalue parser yields names and lookups"),
            };
            let mut e = resolver.expr(rhs, &binders)?;
            resolver.fill_slots(&mut e, &scope, rhs.pos.0)?;
            let target_domain = target_domain(&target, &var_domains).map_err(type_error(lhs.pos.0))?;
            check_assignable(&e, &target_domain, &scope).map_err(type_error(rhs.pos.0))?;
            actions.push(Assignment { target, expr: e });
        }

        let mut outputs = Vec::new();
        for (name, pos, args) in &raw.outputs {
            let event = events
                .iter()
                .position(|e| e.name == *name)
                .ok_or(ModelError::Unresolved { kind: "event", name: name.clone(), line: pos.0 })?;
            let oe = &events[event];
            if oe.direction != Direction::Observation {
                return Err(ModelError::Type { line: pos.0, detail: format!("output {name} is not an observation") });
            }
            if oe.params.len() != args.len() {
                return Err(ModelError::Type {
                    line: pos.0,
                    detail: format!("{name} takes {} arguments, {} given", oe.params.len(), args.len()),
                });
            }
            let mut resolved = Vec::new();
            for (a, p) in args.iter().zip(&oe.params) {
                let mut e = resolver.expr(a, &binders)?;
                resolver.fill_slots(&mut e, &scope, a.pos.0)?;
                check_assignable(&e, &p.domain, &scope).map_err(type_error(a.pos.0))?;
                resolved.push(e);
            }
            outputs.push(Output { event, args: resolved });
        }

        let mut req_tags = Vec::new();
        for (r, p) in &raw.reqs {
            if !requirements.iter().any(|x| x.id == *r) {
                return Err(ModelError::Unresolved { kind: "requirement", name: r.clone(), line: p.0 });
            }
            if !req_tags.contains(r) {
                req_tags.push(r.clone());
            }
        }
        let mut option_tags = Vec::new();
        for (o, p) in &raw.opts {
            if !options.iter().any(|x| x.id == *o) {
                return Err(ModelError::Unresolved { kind: "option", name: o.clone(), line: p.0 });
            }
            if !option_tags.contains(o) {
                option_tags.push(o.clone());
            }
        }

        transitions.push(Transition {
            id: raw.id,
            source,
            target,
            trigger,
            binders,
            guard,
            actions,
            outputs,
            priority: raw.priority,
            req_tags,
            option_tags,
        });
    }

    Ok(Model {
        name: name.unwrap_or_else(|| "model".to_string()),
        states,
        initial: initial.unwrap_or(0),
        variables,
        events,
        transitions,
        requirements,
        options,
    })
}

pub(crate) fn target_domain(target: &Target, vars: &[Domain]) -> Result<Domain, String> {
    match target {
        Target::Var(i) => vars.get(*i).cloned().ok_or_else(|| "assignment target out of range".to_string()),
        Target::Lookup(l) => {
            let mut dom: Option<&Domain> = None;
            for (_, i) in &l.slots {
                let d = vars.get(*i).ok_or("lookup slot out of range")?;
                if dom.is_some_and(|p| p != d) {
                    return Err(format!("fields of record {} differ in domain", l.table));
                }
                dom = Some(d);
            }
            dom.cloned().ok_or_else(|| format!("record {} is empty", l.table))
        }
    }
}

/// Type-compatibility plus a static range check for literal integers.
pub(crate) fn check_assignable(e: &Expr, domain: &Domain, scope: &Scope<'_>) -> Result<(), String> {
    let ty = e.type_of(scope)?;
    if !ty.assignable_to(domain) {
        return Err(format!("{ty} is not assignable to {domain}"));
    }
    if let Expr::Lit(v @ Value::Int(_)) = e {
        if !domain.contains(v) {
            return Err(format!("literal {v} is outside {domain}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PING: &str = "\
model ping
state Idle initial
var n : int[0..2] = 0
stimulus PING
observation PONG
observation BUSY
trans t1: Idle -> Idle on PING [n < 2] / n := n + 1 ! PONG
trans t2: Idle -> Idle on PING [n = 2] ! BUSY
";

    #[test]
    fn minimal_model() {
        let m = parse_model("state Idle\n").unwrap();
        assert_eq!(m.states, vec!["Idle"]);
        assert!(m.transitions.is_empty());
        assert_eq!(m.initial, 0);
    }

    #[test]
    fn ping_fixture_shape() {
        let m = parse_model(PING).unwrap();
        assert_eq!(m.states.len(), 1);
        assert_eq!(m.variables.len(), 1);
        assert_eq!(m.variables[0].domain, Domain::Int { lo: 0, hi: 2 });
        assert_eq!(m.transitions.len(), 2);
        assert_eq!(m.transitions[0].actions.len(), 1);
        assert_eq!(m.transitions[1].outputs[0].event, m.event_index("BUSY").unwrap());
    }

    #[test]
    fn undeclared_state_is_named() {
        let src = PING.replace("t2: Idle -> Idle", "t2: Idle -> Wait");
        match parse_model(&src) {
            Err(ModelError::Unresolved { kind: "state", name, line: 8 }) => assert_eq!(name, "Wait"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position_and_expectations() {
        let err = parse_model("state Idle initial\ntrans t1 Idle -> Idle on PING\n").unwrap_err();
        match err {
            ModelError::Syntax { line, col, expected, .. } => {
                assert_eq!((line, col), (2, 10));
                assert_eq!(expected, vec!["`:`"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_model("bogus\n"), Err(ModelError::Syntax { line: 1, col: 1, .. })));
    }

    #[test]
    fn duplicates_are_rejected() {
        assert!(matches!(
            parse_model("state A\nstate A\n"),
            Err(ModelError::Duplicate { kind: "state", .. })
        ));
        assert!(matches!(
            parse_model("state A\nvar x : enum{a,a} = a\n"),
            Err(ModelError::Duplicate { kind: "enumeration symbol", .. })
        ));
        assert!(matches!(
            parse_model("state A\nstimulus E(p: bool, p: bool)\n"),
            Err(ModelError::Duplicate { kind: "parameter", .. })
        ));
    }

    #[test]
    fn type_mismatches_are_rejected() {
        let cases = [
            "state A\nvar b : bool = true\nstimulus E\ntrans t: A -> A on E [b < true]\n",
            "state A\nvar n : int[0..2] = 0\nstimulus E\ntrans t: A -> A on E / n := 5\n",
            "state A\nvar n : int[0..2] = 3\n",
            "state A\nvar n : int[0..2] = 0\nstimulus E\ntrans t: A -> A on E [n]\n",
            "state A\nvar e : enum{x,y} = x\nvar n : int[0..2] = 0\nstimulus E\ntrans t: A -> A on E [e = n]\n",
            "state A\nstimulus E\nobservation O\ntrans t: A -> A on O\n",
        ];
        for src in cases {
            assert!(matches!(parse_model(src), Err(ModelError::Type { .. })), "{src}");
        }
    }

    #[test]
    fn records_flatten_and_support_lookup() {
        let src = "\
state A initial
var loc : record{a: int[0..2], b: int[0..2]} = {a = 0, b = 1}
stimulus SET(k: enum{a,b}, v: int[0..2])
observation GOT(v: int[0..2])
trans t: A -> A on SET(k, v) [loc[k] != v] / loc[k] := v ! GOT(loc[k])
";
        let m = parse_model(src).unwrap();
        let names: Vec<_> = m.variables.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["loc.a", "loc.b"]);
        assert!(matches!(&m.transitions[0].actions[0].target, Target::Lookup(l) if l.slots.len() == 2));
        let reparsed = parse_model(&m.to_string()).unwrap();
        assert_eq!(reparsed, m);
    }

    #[test]
    fn continuation_lines_and_comments() {
        let src = "\
# leading comment
model m
state A initial   # trailing
stimulus E(x: int[0..3])
observation O(x: int[0..3])
req R-1 \"has # inside\" clause \"X/1\"
trans t: A -> A on E(y)
    [y >= 1]
    ! O(y - 1)
    prio 2 @R-1
";
        let m = parse_model(src).unwrap();
        assert_eq!(m.requirements[0].text, "has # inside");
        let t = &m.transitions[0];
        assert_eq!(t.priority, 2);
        assert_eq!(t.binders, vec!["y"]);
        assert_eq!(t.req_tags, vec!["R-1"]);
    }

    #[test]
    fn print_round_trip_of_ping() {
        let m = parse_model(PING).unwrap();
        assert_eq!(parse_model(&m.to_string()).unwrap(), m);
    }
}
