use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::{has_errors, parse_model, validate, Domain, Expr, Model, Target, Value};

/// One mutation applied to one transition (by declaration index).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "operator", rename_all = "kebab-case")]
pub enum MutationOperator {
    /// Negates the `nth` comparison of the guard, pre-order.
    NegateGuardComparison { transition: String, nth: usize },
    RetargetTransition { transition: String, target: String },
    DropOutput { transition: String, nth: usize },
    /// Moves the `nth` integer literal of the transition (guard, then
    /// actions, then outputs) from `from` to `to`.
    PerturbConstant { transition: String, nth: usize, from: i64, to: i64 },
    SwapPriority { transition: String, other: String },
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MutationOperator::NegateGuardComparison { transition, nth } => write!(f, "negate-guard-comparison({transition}#{nth})"),
            MutationOperator::RetargetTransition { transition, target } => write!(f, "retarget-transition({transition}->{target})"),
            MutationOperator::DropOutput { transition, nth } => write!(f, "drop-output({transition}#{nth})"),
            MutationOperator::PerturbConstant { transition, nth, from, to } => {
                write!(f, "perturb-constant({transition}#{nth}:{from}->{to})")
            }
            MutationOperator::SwapPriority { transition, other } => write!(f, "swap-priority({transition},{other})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutant {
    pub operator: MutationOperator,
    pub model: Model,
}

/// Integer literals of one transition in mutation order, each with the
/// domain its value is compared to or stored in, when known.
fn literal_slots(model: &Model, t: usize) -> Vec<(i64, Option<Domain>)> {
    let tr = &model.transitions[t];
    let vars = model.var_domains();
    let params = model.param_domains(tr.trigger);
    let mut out = Vec::new();
    fn walk(e: &Expr, ctx: Option<&Domain>, vars: &[Domain], params: &[Domain], out: &mut Vec<(i64, Option<Domain>)>) {
        match e {
            Expr::Lit(Value::Int(v)) => out.push((*v, ctx.cloned())),
            Expr::Cmp(_, a, b) => {
                let side = |x: &Expr| match x {
                    Expr::Var(i) => vars.get(*i).cloned(),
                    Expr::Param(i) => params.get(*i).cloned(),
                    _ => None,
                };
                let (da, db) = (side(a), side(b));
                walk(a, db.as_ref(), vars, params, out);
                walk(b, da.as_ref(), vars, params, out);
            }
            Expr::Arith(_, a, b) => {
                walk(a, ctx, vars, params, out);
                walk(b, ctx, vars, params, out);
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                walk(a, None, vars, params, out);
                walk(b, None, vars, params, out);
            }
            Expr::Not(a) => walk(a, None, vars, params, out),
            Expr::Lookup(l) => walk(&l.key, None, vars, params, out),
            Expr::Lit(_) | Expr::Var(_) | Expr::Param(_) => {}
        }
    }
    if let Some(g) = &tr.guard {
        walk(g, None, &vars, &params, &mut out);
    }
    for a in &tr.actions {
        let d = match &a.target {
            Target::Var(i) => vars.get(*i).cloned(),
            Target::Lookup(l) => l.slots.first().and_then(|(_, i)| vars.get(*i).cloned()),
        };
        walk(&a.expr, d.as_ref(), &vars, &params, &mut out);
    }
    for o in &tr.outputs {
        for (e, p) in o.args.iter().zip(&model.events[o.event].params) {
            walk(e, Some(&p.domain), &vars, &params, &mut out);
        }
    }
    out
}

/// Visits the transition's expressions in the order `literal_slots` uses.
fn for_each_expr(tr: &mut crate::model::Transition, f: &mut dyn FnMut(&mut Expr)) {
    if let Some(g) = &mut tr.guard {
        g.visit_mut(f);
    }
    for a in &mut tr.actions {
        a.expr.visit_mut(f);
    }
    for o in &mut tr.outputs {
        for e in &mut o.args {
            e.visit_mut(f);
        }
    }
}

fn candidates(model: &Model) -> Vec<MutationOperator> {
    let mut out = Vec::new();
    for (t, tr) in model.transitions.iter().enumerate() {
        let id = || tr.id.clone();
        if let Some(g) = &tr.guard {
            let mut n = 0;
            g.visit(&mut |e| n += matches!(e, Expr::Cmp(..)) as usize);
            out.extend((0..n).map(|nth| MutationOperator::NegateGuardComparison { transition: id(), nth }));
        }
        for (s, name) in model.states.iter().enumerate() {
            if s != tr.target {
                out.push(MutationOperator::RetargetTransition { transition: id(), target: name.clone() });
            }
        }
        out.extend((0..tr.outputs.len()).map(|nth| MutationOperator::DropOutput { transition: id(), nth }));
        for (nth, (v, d)) in literal_slots(model, t).into_iter().enumerate() {
            let ok = |x: i64| d.as_ref().is_none_or(|d| d.contains(&Value::Int(x)));
            let to = if ok(v + 1) { v + 1 } else { v - 1 };
            if ok(to) {
                out.push(MutationOperator::PerturbConstant { transition: id(), nth, from: v, to });
            }
        }
        for other in &model.transitions[t + 1..] {
            if other.source == tr.source && other.trigger == tr.trigger && other.priority != tr.priority {
                out.push(MutationOperator::SwapPriority { transition: id(), other: other.id.clone() });
            }
        }
    }
    out
}

fn apply(model: &Model, op: &MutationOperator) -> Option<Model> {
    let mut m = model.clone();
    match op {
        MutationOperator::NegateGuardComparison { transition, nth } => {
            let t = m.transition_index(transition)?;
            let mut k = 0;
            let mut done = false;
            m.transitions[t].guard.as_mut()?.visit_mut(&mut |e| {
                if let Expr::Cmp(op, _, _) = e {
                    if k == *nth {
                        *op = op.negate();
                        done = true;
                    }
                    k += 1;
                }
            });
            done.then_some(())?;
        }
        MutationOperator::RetargetTransition { transition, target } => {
            let t = m.transition_index(transition)?;
            m.transitions[t].target = m.state_index(target)?;
        }
        MutationOperator::DropOutput { transition, nth } => {
            let t = m.transition_index(transition)?;
            if *nth >= m.transitions[t].outputs.len() {
                return None;
            }
            m.transitions[t].outputs.remove(*nth);
        }
        MutationOperator::PerturbConstant { transition, nth, from, to } => {
            let t = m.transition_index(transition)?;
            let mut k = 0;
            let mut done = false;
            for_each_expr(&mut m.transitions[t], &mut |e| {
                if let Expr::Lit(Value::Int(v)) = e {
                    if k == *nth && *v == *from {
                        *v = *to;
                        done = true;
                    }
                    k += 1;
                }
            });
            done.then_some(())?;
        }
        MutationOperator::SwapPriority { transition, other } => {
            let a = m.transition_index(transition)?;
            let b = m.transition_index(other)?;
            let (pa, pb) = (m.transitions[a].priority, m.transitions[b].priority);
            m.transitions[a].priority = pb;
            m.transitions[b].priority = pa;
        }
    }
    Some(m)
}

/// Up to `count` distinct, valid single-operator mutants, sampled by
/// shuffling every applicable operator instance with `seed`.
pub fn mutate(model: &Model, seed: u64, count: usize) -> Vec<Mutant> {
    let mut ops = candidates(model);
    ops.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let original = model.to_string();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for op in ops {
        if out.len() >= count {
            break;
        }
        let Some(m) = apply(model, &op) else { continue };
        let text = m.to_string();
        if text == original || has_errors(&validate(&m)) || parse_model(&text).is_err() || !seen.insert(text) {
            continue;
        }
        out.push(Mutant { operator: op, model: m });
    }
    out
}
