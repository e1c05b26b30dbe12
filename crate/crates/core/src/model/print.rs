use std::fmt::{self, Write};

use super::{Direction, Model, Target, Transition};

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl Model {
    /// Renders a transition as a single DSL line.
    pub fn transition_line(&self, t: &Transition) -> String {
        let names = self.names(Some(t));
        let mut s = format!(
            "trans {}: {} -> {} on {}",
            t.id, self.states[t.source], self.states[t.target], self.events[t.trigger].name
        );
        if !t.binders.is_empty() {
            let _ = write!(s, "({})", t.binders.join(", "));
        }
        if let Some(g) = &t.guard {
            let _ = write!(s, " [{}]", g.display(&names));
        }
        if !t.actions.is_empty() {
            let acts: Vec<String> = t
                .actions
                .iter()
                .map(|a| {
                    let lhs = match &a.target {
                        Target::Var(i) => self.variables[*i].name.clone(),
                        Target::Lookup(l) => format!("{}[{}]", l.table, l.key.display(&names)),
                    };
                    format!("{lhs} := {}", a.expr.display(&names))
                })
                .collect();
            let _ = write!(s, " / {}", acts.join("; "));
        }
        if !t.outputs.is_empty() {
            let outs: Vec<String> = t
                .outputs
                .iter()
                .map(|o| {
                    let name = &self.events[o.event].name;
                    if o.args.is_empty() {
                        name.clone()
                    } else {
                        let args: Vec<String> = o.args.iter().map(|a| a.display(&names).to_string()).collect();
                        format!("{name}({})", args.join(", "))
                    }
                })
                .collect();
            let _ = write!(s, " ! {}", outs.join(", "));
        }
        if t.priority != 0 {
            let _ = write!(s, " prio {}", t.priority);
        }
        for r in &t.req_tags {
            let _ = write!(s, " @{r}");
        }
        for o in &t.option_tags {
            let _ = write!(s, " %{o}");
        }
        s
    }
}

/// Canonical DSL rendering; parsing it yields a structurally equal model.
impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {}", self.name)?;
        for (i, s) in self.states.iter().enumerate() {
            if i == self.initial {
                writeln!(f, "state {s} initial")?;
            } else {
                writeln!(f, "state {s}")?;
            }
        }
        for v in &self.variables {
            writeln!(f, "var {} : {} = {}", v.name, v.domain, v.initial)?;
        }
        for e in &self.events {
            let kw = match e.direction {
                Direction::Stimulus => "stimulus",
                Direction::Observation => "observation",
            };
            if e.params.is_empty() {
                writeln!(f, "{kw} {}", e.name)?;
            } else {
                let ps: Vec<String> = e.params.iter().map(|p| format!("{}: {}", p.name, p.domain)).collect();
                writeln!(f, "{kw} {}({})", e.name, ps.join(", "))?;
            }
        }
        for r in &self.requirements {
            writeln!(f, "req {} {} clause {}", r.id, quote(&r.text), quote(&r.clause))?;
        }
        for o in &self.options {
            writeln!(f, "option {} {} default {}", o.id, quote(&o.description), o.default)?;
        }
        for t in &self.transitions {
            writeln!(f, "{}", self.transition_line(t))?;
        }
        Ok(())
    }
}
