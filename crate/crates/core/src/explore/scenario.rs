//! Scenario patterns: regular expressions over stimulus atoms that restrict
//! which stimulus sequences the explorer expands.
//!
//! ```text
//! alt  := seq ('|' seq)*
//! seq  := post (';' post)*
//! post := prim '*'*
//! prim := '_' | '{}' | '(' alt ')' | EVENT [ '(' arg (',' arg)* ')' ]
//! arg  := '_' | integer | true | false | symbol
//! ```
//!
//! `_` matches any stimulus, `{}` is the empty language and the empty
//! pattern matches only the empty sequence.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::model::{Direction, Model, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario column {col}: expected {expected}")]
    Syntax { col: usize, expected: &'static str },
    #[error("scenario references undeclared event `{0}`")]
    UnknownEvent(String),
    #[error("scenario atom `{0}` is not a stimulus")]
    NotStimulus(String),
    #[error("scenario atom `{event}` takes {expected} arguments, {found} given")]
    Arity { event: String, expected: usize, found: usize },
    #[error("scenario constraint {value} is outside the domain of {event}.{param}")]
    Domain { event: String, param: String, value: Value },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Pattern {
    Epsilon,
    Nothing,
    Any,
    Atom { event: String, args: Option<Vec<Option<Value>>> },
    Seq(Box<Pattern>, Box<Pattern>),
    Alt(Box<Pattern>, Box<Pattern>),
    Star(Box<Pattern>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    text: String,
    pattern: Pattern,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
}

impl Lexer {
    fn peek(&mut self) -> Option<char> {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err<T>(&self, expected: &'static str) -> Result<T, ScenarioError> {
        Err(ScenarioError::Syntax { col: self.pos + 1, expected })
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.get(self.pos) {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' && s.is_empty() {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s
    }

    fn alt(&mut self) -> Result<Pattern, ScenarioError> {
        let mut p = self.seq()?;
        while self.eat('|') {
            p = Pattern::Alt(Box::new(p), Box::new(self.seq()?));
        }
        Ok(p)
    }

    fn seq(&mut self) -> Result<Pattern, ScenarioError> {
        let mut p = self.post()?;
        while self.eat(';') {
            p = Pattern::Seq(Box::new(p), Box::new(self.post()?));
        }
        Ok(p)
    }

    fn post(&mut self) -> Result<Pattern, ScenarioError> {
        let mut p = self.prim()?;
        while self.eat('*') {
            p = Pattern::Star(Box::new(p));
        }
        Ok(p)
    }

    fn prim(&mut self) -> Result<Pattern, ScenarioError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let p = self.alt()?;
                if !self.eat(')') {
                    return self.err("`)`");
                }
                Ok(p)
            }
            Some('{') => {
                self.pos += 1;
                if !self.eat('}') {
                    return self.err("`}`");
                }
                Ok(Pattern::Nothing)
            }
            Some('_') if !self.chars.get(self.pos + 1).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') => {
                self.pos += 1;
                Ok(Pattern::Any)
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let event = self.word();
                let mut args = None;
                if self.eat('(') {
                    let mut list = Vec::new();
                    if !self.eat(')') {
                        loop {
                            list.push(self.arg()?);
                            if self.eat(')') {
                                break;
                            }
                            if !self.eat(',') {
                                return self.err("`,` or `)`");
                            }
                        }
                    }
                    args = Some(list);
                }
                Ok(Pattern::Atom { event, args })
            }
            _ => self.err("event name, `_`, `{}` or `(`"),
        }
    }

    fn arg(&mut self) -> Result<Option<Value>, ScenarioError> {
        self.peek();
        let w = self.word();
        if w.is_empty() {
            return self.err("argument");
        }
        Ok(match w.as_str() {
            "_" => None,
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => match w.parse::<i64>() {
                Ok(i) => Some(Value::Int(i)),
                Err(_) if w.starts_with('-') || w.starts_with(|c: char| c.is_ascii_digit()) => return self.err("argument"),
                Err(_) => Some(Value::Sym(w)),
            },
        })
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut lx = Lexer { chars: text.chars().collect(), pos: 0 };
        let pattern = if lx.peek().is_none() { Pattern::Epsilon } else { lx.alt()? };
        if lx.peek().is_some() {
            return lx.err("`;`, `|`, `*` or end of scenario");
        }
        Ok(Scenario { text: text.trim().to_string(), pattern })
    }

    /// Resolves event names against `model` and builds the automaton.
    pub fn compile(&self, model: &Model) -> Result<ScenarioAutomaton, ScenarioError> {
        let mut nfa = Nfa { states: Vec::new() };
        let (start, accept) = nfa.build(&self.pattern, model)?;
        Ok(ScenarioAutomaton::new(nfa, start, accept))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Label {
    Any,
    Atom { event: usize, args: Vec<Option<Value>> },
}

impl Label {
    fn matches(&self, event: usize, args: &[Value]) -> bool {
        match self {
            Label::Any => true,
            Label::Atom { event: e, args: cs } => {
                *e == event && cs.iter().zip(args).all(|(c, a)| c.as_ref().is_none_or(|c| c == a))
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct NState {
    eps: Vec<usize>,
    edges: Vec<(Label, usize)>,
}

#[derive(Debug, Clone)]
struct Nfa {
    states: Vec<NState>,
}

impl Nfa {
    fn add(&mut self) -> usize {
        self.states.push(NState::default());
        self.states.len() - 1
    }

    fn build(&mut self, p: &Pattern, model: &Model) -> Result<(usize, usize), ScenarioError> {
        let (s, a) = (self.add(), self.add());
        match p {
            Pattern::Epsilon => self.states[s].eps.push(a),
            Pattern::Nothing => {}
            Pattern::Any => self.states[s].edges.push((Label::Any, a)),
            Pattern::Atom { event, args } => {
                let idx = model.event_index(event).ok_or_else(|| ScenarioError::UnknownEvent(event.clone()))?;
                let ev = &model.events[idx];
                if ev.direction != Direction::Stimulus {
                    return Err(ScenarioError::NotStimulus(event.clone()));
                }
                let constraints = match args {
                    None => vec![None; ev.params.len()],
                    Some(list) => {
                        if list.len() != ev.params.len() {
                            return Err(ScenarioError::Arity {
                                event: event.clone(),
                                expected: ev.params.len(),
                                found: list.len(),
                            });
                        }
                        for (c, p) in list.iter().zip(&ev.params) {
                            if let Some(v) = c {
                                if !p.domain.contains(v) {
                                    return Err(ScenarioError::Domain {
                                        event: event.clone(),
                                        param: p.name.clone(),
                                        value: v.clone(),
                                    });
                                }
                            }
                        }
                        list.clone()
                    }
                };
                self.states[s].edges.push((Label::Atom { event: idx, args: constraints }, a));
            }
            Pattern::Seq(x, y) => {
                let (xs, xa) = self.build(x, model)?;
                let (ys, ya) = self.build(y, model)?;
                self.states[s].eps.push(xs);
                self.states[xa].eps.push(ys);
                self.states[ya].eps.push(a);
            }
            Pattern::Alt(x, y) => {
                for q in [x, y] {
                    let (qs, qa) = self.build(q, model)?;
                    self.states[s].eps.push(qs);
                    self.states[qa].eps.push(a);
                }
            }
            Pattern::Star(x) => {
                let (xs, xa) = self.build(x, model)?;
                self.states[s].eps.extend([xs, a]);
                self.states[xa].eps.extend([xs, a]);
            }
        }
        Ok((s, a))
    }
}

/// Lazily determinized scenario automaton restricted to live states (those
/// from which an accepting state is still reachable), so every move it
/// allows extends a prefix of some accepted sequence.
#[derive(Debug, Clone)]
pub struct ScenarioAutomaton {
    nfa: Nfa,
    start: usize,
    live: Vec<bool>,
    sets: Vec<Vec<usize>>,
    ids: HashMap<Vec<usize>, usize>,
    moves: HashMap<(usize, usize, Vec<Value>), Option<usize>>,
}

impl ScenarioAutomaton {
    fn new(nfa: Nfa, start: usize, accept: usize) -> Self {
        let n = nfa.states.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in nfa.states.iter().enumerate() {
            for &t in s.eps.iter().chain(s.edges.iter().map(|(_, t)| t)) {
                rev[t].push(i);
            }
        }
        let mut live = vec![false; n];
        let mut stack = vec![accept];
        live[accept] = true;
        while let Some(q) = stack.pop() {
            for &p in &rev[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        ScenarioAutomaton { nfa, start, live, sets: Vec::new(), ids: HashMap::new(), moves: HashMap::new() }
    }

    fn closure(&self, seeds: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(q) = stack.pop() {
            if seen.insert(q) {
                stack.extend(self.nfa.states[q].eps.iter().copied());
            }
        }
        seen.into_iter().filter(|&q| self.live[q]).collect()
    }

    fn intern(&mut self, set: Vec<usize>) -> usize {
        if let Some(&id) = self.ids.get(&set) {
            return id;
        }
        let id = self.sets.len();
        self.sets.push(set.clone());
        self.ids.insert(set, id);
        id
    }

    pub fn start(&mut self) -> usize {
        let set = self.closure([self.start]);
        self.intern(set)
    }

    /// Successor after a stimulus, or `None` if no accepted sequence
    /// continues with it.
    pub fn step(&mut self, state: usize, event: usize, args: &[Value]) -> Option<usize> {
        let key = (state, event, args.to_vec());
        if let Some(r) = self.moves.get(&key) {
            return *r;
        }
        let targets: Vec<usize> = self.sets[state]
            .iter()
            .flat_map(|&q| self.nfa.states[q].edges.iter())
            .filter(|(l, _)| l.matches(event, args))
            .map(|(_, t)| *t)
            .collect();
        let set = self.closure(targets);
        let r = if set.is_empty() { None } else { Some(self.intern(set)) };
        self.moves.insert(key, r);
        r
    }
}
