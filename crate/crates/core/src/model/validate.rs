use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::expr::{Scope, Ty};
use super::parser::{check_assignable, target_domain};
use super::{Direction, Domain, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "subject", rename_all = "kebab-case")]
pub enum DiagnosticKind {
    /// A structural invariant is violated.
    Invalid(String),
    UnreachableState(String),
    UntaggedRequirement(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DiagnosticKind::Invalid(d) => write!(f, "error: {d}"),
            DiagnosticKind::UnreachableState(s) => write!(f, "warning: unreachable state `{s}`"),
            DiagnosticKind::UntaggedRequirement(r) => write!(f, "warning: requirement `{r}` is tagged on no transition"),
        }
    }
}

impl Diagnostic {
    fn error(detail: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, kind: DiagnosticKind::Invalid(detail.into()) }
    }

    fn warning(kind: DiagnosticKind) -> Self {
        Diagnostic { severity: Severity::Warning, kind }
    }
}

/// Re-checks every model invariant and reports reachability and
/// traceability warnings.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    structure(model, &mut out);
    if out.iter().any(|d| d.severity == Severity::Error) {
        return out;
    }

    let mut reached = vec![false; model.states.len()];
    let mut stack = vec![model.initial];
    reached[model.initial] = true;
    while let Some(s) = stack.pop() {
        for t in model.transitions.iter().filter(|t| t.source == s) {
            if !reached[t.target] {
                reached[t.target] = true;
                stack.push(t.target);
            }
        }
    }
    for (i, s) in model.states.iter().enumerate() {
        if !reached[i] {
            out.push(Diagnostic::warning(DiagnosticKind::UnreachableState(s.clone())));
        }
    }
    for r in &model.requirements {
        if !r.excluded && !model.transitions.iter().any(|t| t.req_tags.contains(&r.id)) {
            out.push(Diagnostic::warning(DiagnosticKind::UntaggedRequirement(r.id.clone())));
        }
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

fn domain_ok(d: &Domain) -> bool {
    match d {
        Domain::Int { lo, hi } => lo <= hi,
        Domain::Enum(s) => !s.is_empty() && s.iter().collect::<HashSet<_>>().len() == s.len(),
        Domain::Bool => true,
    }
}

fn structure(model: &Model, out: &mut Vec<Diagnostic>) {
    let mut err = |d: String| out.push(Diagnostic::error(d));
    if model.states.is_empty() {
        err("model declares no states".into());
        return;
    }
    if model.initial >= model.states.len() {
        err("initial state out of range".into());
    }
    if model.states.iter().collect::<HashSet<_>>().len() != model.states.len() {
        err("duplicate state name".into());
    }
    if model.variables.iter().map(|v| &v.name).collect::<HashSet<_>>().len() != model.variables.len() {
        err("duplicate variable name".into());
    }
    for v in &model.variables {
        if !domain_ok(&v.domain) {
            err(format!("variable {} has an empty or malformed domain", v.name));
        } else if !v.domain.contains(&v.initial) {
            err(format!("initial value {} of {} is outside {}", v.initial, v.name, v.domain));
        }
    }
    if model.events.iter().map(|e| &e.name).collect::<HashSet<_>>().len() != model.events.len() {
        err("duplicate event name".into());
    }
    for e in &model.events {
        if e.params.iter().map(|p| &p.name).collect::<HashSet<_>>().len() != e.params.len() {
            err(format!("duplicate parameter in {}", e.name));
        }
        for p in &e.params {
            if !domain_ok(&p.domain) {
                err(format!("parameter {}.{} has an empty or malformed domain", e.name, p.name));
            }
        }
    }
    if model.requirements.iter().map(|r| &r.id).collect::<HashSet<_>>().len() != model.requirements.len() {
        err("duplicate requirement id".into());
    }
    if model.options.iter().map(|o| &o.id).collect::<HashSet<_>>().len() != model.options.len() {
        err("duplicate option id".into());
    }
    if model.transitions.iter().map(|t| &t.id).collect::<HashSet<_>>().len() != model.transitions.len() {
        err("duplicate transition id".into());
    }

    let var_domains = model.var_domains();
    for t in &model.transitions {
        if t.source >= model.states.len() || t.target >= model.states.len() {
            err(format!("{}: state reference out of range", t.id));
            continue;
        }
        let Some(ev) = model.events.get(t.trigger) else {
            err(format!("{}: trigger out of range", t.id));
            continue;
        };
        if ev.direction != Direction::Stimulus {
            err(format!("{}: trigger {} is not a stimulus", t.id, ev.name));
        }
        if t.binders.len() != ev.params.len() {
            err(format!("{}: binds {} of {} parameters", t.id, t.binders.len(), ev.params.len()));
            continue;
        }
        let params = model.param_domains(t.trigger);
        let scope = Scope { vars: &var_domains, params: &params };
        if let Some(g) = &t.guard {
            match g.type_of(&scope) {
                Ok(Ty::Bool) => {}
                Ok(ty) => err(format!("{}: guard has type {ty}", t.id)),
                Err(e) => err(format!("{}: {e}", t.id)),
            }
        }
        for a in &t.actions {
            match target_domain(&a.target, &var_domains) {
                Ok(d) => {
                    if let Err(e) = check_assignable(&a.expr, &d, &scope) {
                        err(format!("{}: {e}", t.id));
                    }
                }
                Err(e) => err(format!("{}: {e}", t.id)),
            }
        }
        for o in &t.outputs {
            let Some(oe) = model.events.get(o.event) else {
                err(format!("{}: output event out of range", t.id));
                continue;
            };
            if oe.direction != Direction::Observation {
                err(format!("{}: output {} is not an observation", t.id, oe.name));
            }
            if oe.params.len() != o.args.len() {
                err(format!("{}: {} takes {} arguments", t.id, oe.name, oe.params.len()));
                continue;
            }
            for (a, p) in o.args.iter().zip(&oe.params) {
                if let Err(e) = check_assignable(a, &p.domain, &scope) {
                    err(format!("{}: {e}", t.id));
                }
            }
        }
        for r in &t.req_tags {
            if model.requirement(r).is_none() {
                err(format!("{}: unresolved requirement {r}", t.id));
            }
        }
        for o in &t.option_tags {
            if !model.options.iter().any(|x| &x.id == o) {
                err(format!("{}: unresolved option {o}", t.id));
            }
        }
    }
}
