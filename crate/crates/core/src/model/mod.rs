//! Extended finite state machine models of SUT behaviour.

mod expr;
mod parser;
mod print;
mod profile;
mod semantics;
mod validate;
mod value;

pub use expr::{ArithOp, CmpOp, EvalError, Expr, Lookup, Names, Scope, Ty};
pub use parser::{parse_model, ModelError};
pub use profile::{apply_profile, Profile, ProfileError};
pub use semantics::{Firing, Semantics};
pub use validate::{has_errors, validate, Diagnostic, DiagnosticKind, Severity};
pub use value::{Domain, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
    pub initial: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Stimulus,
    Observation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub direction: Direction,
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Var(usize),
    Lookup(Lookup),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub target: Target,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub event: usize,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub source: usize,
    pub target: usize,
    pub trigger: usize,
    /// Local names the transition binds the trigger's parameters to.
    pub binders: Vec<String>,
    /// `None` is the always-true guard.
    pub guard: Option<Expr>,
    pub actions: Vec<Assignment>,
    pub outputs: Vec<Output>,
    pub priority: u32,
    pub req_tags: Vec<String>,
    pub option_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Requirement {
    pub id: String,
    pub text: String,
    pub clause: String,
    /// Set by profile pruning when every transition tagged with the
    /// requirement was removed.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IcsOption {
    pub id: String,
    pub description: String,
    pub default: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    pub states: Vec<String>,
    pub initial: usize,
    pub variables: Vec<Variable>,
    pub events: Vec<Event>,
    pub transitions: Vec<Transition>,
    pub requirements: Vec<Requirement>,
    pub options: Vec<IcsOption>,
}

impl Model {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    pub fn requirement(&self, id: &str) -> Option<&Requirement> {
        self.requirements.iter().find(|r| r.id == id)
    }

    pub fn initial_values(&self) -> Vec<Value> {
        self.variables.iter().map(|v| v.initial.clone()).collect()
    }

    pub fn var_domains(&self) -> Vec<Domain> {
        self.variables.iter().map(|v| v.domain.clone()).collect()
    }

    pub fn param_domains(&self, event: usize) -> Vec<Domain> {
        self.events[event].params.iter().map(|p| p.domain.clone()).collect()
    }

    pub fn stimuli(&self) -> impl Iterator<Item = (usize, &Event)> {
        self.events.iter().enumerate().filter(|(_, e)| e.direction == Direction::Stimulus)
    }

    /// Names for rendering expressions inside `transition` (or at model
    /// level when `None`).
    pub fn names<'a>(&'a self, transition: Option<&'a Transition>) -> Names<'a> {
        Names {
            vars: self.variables.iter().map(|v| v.name.as_str()).collect(),
            params: transition.map(|t| t.binders.iter().map(String::as_str).collect()).unwrap_or_default(),
        }
    }

    /// Lowercase hex SHA-256 of the canonical printed form.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_string().as_bytes()))
    }
}
