//! Step semantics shared by the explorer and the reference SUT.
//!
//! A transition fires when its guard holds on the source valuation and the
//! trigger arguments. Actions run in order, each seeing the effect of the
//! previous ones; outputs are evaluated on the resulting valuation. A firing
//! that would leave a variable or an output argument outside its domain is
//! not enabled.

use std::collections::HashMap;

use super::{Model, Target, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub transition: usize,
    pub values: Vec<Value>,
    /// `(observation event index, arguments)` in emission order.
    pub outputs: Vec<(usize, Vec<Value>)>,
}

pub struct Semantics<'m> {
    model: &'m Model,
    by_source_event: HashMap<(usize, usize), Vec<usize>>,
}

impl<'m> Semantics<'m> {
    pub fn new(model: &'m Model) -> Self {
        let mut by_source_event: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, t) in model.transitions.iter().enumerate() {
            by_source_event.entry((t.source, t.trigger)).or_default().push(i);
        }
        Semantics { model, by_source_event }
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    /// Transitions leaving `control` on `event`, in declaration order.
    pub fn candidates(&self, control: usize, event: usize) -> &[usize] {
        self.by_source_event.get(&(control, event)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Guard value; evaluation errors count as false.
    pub fn guard_holds(&self, transition: usize, vars: &[Value], args: &[Value]) -> bool {
        match &self.model.transitions[transition].guard {
            None => true,
            Some(g) => g.eval_bool(vars, args).unwrap_or(false),
        }
    }

    /// Fires `transition` if its guard holds and its effects stay in range.
    pub fn fire(&self, transition: usize, vars: &[Value], args: &[Value]) -> Option<Firing> {
        if !self.guard_holds(transition, vars, args) {
            return None;
        }
        let t = &self.model.transitions[transition];
        let mut values = vars.to_vec();
        for a in &t.actions {
            let v = a.expr.eval(&values, args).ok()?;
            let slot = match &a.target {
                Target::Var(i) => *i,
                Target::Lookup(l) => l.slot(&values, args).ok()?,
            };
            if !self.model.variables.get(slot)?.domain.contains(&v) {
                return None;
            }
            values[slot] = v;
        }
        let mut outputs = Vec::with_capacity(t.outputs.len());
        for o in &t.outputs {
            let params = &self.model.events[o.event].params;
            let mut out = Vec::with_capacity(o.args.len());
            for (e, p) in o.args.iter().zip(params) {
                let v = e.eval(&values, args).ok()?;
                if !p.domain.contains(&v) {
                    return None;
                }
                out.push(v);
            }
            outputs.push((o.event, out));
        }
        Some(Firing { transition, values, outputs })
    }

    /// All firings of maximal priority for a stimulus, declaration order.
    pub fn enabled(&self, control: usize, vars: &[Value], event: usize, args: &[Value]) -> Vec<Firing> {
        let fired: Vec<Firing> = self
            .candidates(control, event)
            .iter()
            .filter_map(|&t| self.fire(t, vars, args))
            .collect();
        let Some(top) = fired.iter().map(|f| self.model.transitions[f.transition].priority).max() else {
            return fired;
        };
        fired
            .into_iter()
            .filter(|f| self.model.transitions[f.transition].priority == top)
            .collect()
    }

    /// Deterministic reaction: highest priority, ties broken by declaration order.
    pub fn react(&self, control: usize, vars: &[Value], event: usize, args: &[Value]) -> Option<Firing> {
        self.enabled(control, vars, event, args).into_iter().next()
    }
}
