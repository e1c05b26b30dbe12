use std::collections::{BTreeSet, HashMap};

use crate::model::{Domain, Expr, Firing, Model, Semantics, Value};

use super::{ConcreteState, DataStrategy};

/// An enabled transition together with the arguments that enable it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Input {
    pub transition: usize,
    pub args: Vec<Value>,
    pub firing: Firing,
}

/// Boundary values of bounded-integer parameter `param` for a guard:
/// the domain edges, its midpoint, and `c-1, c, c+1` (clamped) for every
/// comparison of the parameter against a constant `c`.
pub fn boundary_values(domain: &Domain, guard: Option<&Expr>, param: usize) -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    let Domain::Int { lo, hi } = *domain else {
        return out;
    };
    out.extend([lo, hi, lo + (hi - lo) / 2]);
    if let Some(g) = guard {
        g.visit(&mut |e| {
            if let Expr::Cmp(_, a, b) = e {
                let c = match (a.as_ref(), b.as_ref()) {
                    (Expr::Param(p), Expr::Lit(Value::Int(c))) | (Expr::Lit(Value::Int(c)), Expr::Param(p)) if *p == param => *c,
                    _ => return,
                };
                for v in [c - 1, c, c + 1] {
                    out.insert(v.clamp(lo, hi));
                }
            }
        });
    }
    out
}

/// Precomputed argument bindings per `(control state, stimulus)`.
pub struct InputEnumerator<'s, 'm> {
    sem: &'s Semantics<'m>,
    strategy: DataStrategy,
    bindings: HashMap<(usize, usize), Vec<Vec<Value>>>,
}

fn cartesian(columns: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for col in columns {
        let mut next = Vec::with_capacity(out.len() * col.len());
        for prefix in &out {
            for v in col {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

impl<'s, 'm> InputEnumerator<'s, 'm> {
    pub fn new(sem: &'s Semantics<'m>, strategy: DataStrategy) -> Self {
        let model = sem.model();
        let mut bindings = HashMap::new();
        for t in &model.transitions {
            let key = (t.source, t.trigger);
            if bindings.contains_key(&key) {
                continue;
            }
            let params = &model.events[t.trigger].params;
            let columns: Vec<Vec<Value>> = params
                .iter()
                .enumerate()
                .map(|(i, p)| match (strategy, &p.domain) {
                    (DataStrategy::Boundary, d @ Domain::Int { .. }) => {
                        let mut vals = BTreeSet::new();
                        for &c in sem.candidates(t.source, t.trigger) {
                            vals.extend(boundary_values(d, model.transitions[c].guard.as_ref(), i));
                        }
                        vals.into_iter().map(Value::Int).collect()
                    }
                    (_, d) => d.values(),
                })
                .collect();
            bindings.insert(key, cartesian(&columns));
        }
        InputEnumerator { sem, strategy, bindings }
    }

    pub fn strategy(&self) -> DataStrategy {
        self.strategy
    }

    /// Enabled `(transition, arguments)` pairs at `state`, keeping only the
    /// maximal-priority transitions for each trigger and binding. Ordered by
    /// transition declaration, then by argument order within the domain.
    pub fn enumerate(&self, state: &ConcreteState) -> Vec<Input> {
        let model = self.sem.model();
        let mut events: Vec<usize> = Vec::new();
        for t in &model.transitions {
            if t.source == state.control && !events.contains(&t.trigger) {
                events.push(t.trigger);
            }
        }
        let mut found: Vec<(usize, usize, Input)> = Vec::new();
        for event in events {
            let Some(rows) = self.bindings.get(&(state.control, event)) else {
                continue;
            };
            for (row, args) in rows.iter().enumerate() {
                for firing in self.sem.enabled(state.control, &state.values, event, args) {
                    found.push((firing.transition, row, Input { transition: firing.transition, args: args.clone(), firing }));
                }
            }
        }
        found.sort_by_key(|(t, row, _)| (*t, *row));
        found.into_iter().map(|(_, _, i)| i).collect()
    }
}

/// Enabled inputs at `state` under `strategy`.
pub fn enumerate_inputs(model: &Model, state: &ConcreteState, strategy: DataStrategy) -> Vec<(usize, Vec<Value>)> {
    let sem = Semantics::new(model);
    InputEnumerator::new(&sem, strategy)
        .enumerate(state)
        .into_iter()
        .map(|i| (i.transition, i.args))
        .collect()
}
