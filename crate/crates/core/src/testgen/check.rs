//! State-verification sequences appended to test bodies.
//!
//! A trace that ends with a transition leaves its target state unobserved.
//! The check is a short input sequence, taken from the model's own
//! deterministic behaviour, whose observations from the final state differ
//! from those of every other control state holding the same valuation.

use std::collections::{HashSet, VecDeque};

use crate::explore::{ConcreteState, InputEnumerator, Message};
use crate::model::Semantics;

fn react(sem: &Semantics<'_>, s: &ConcreteState, m: &Message) -> (Vec<Message>, ConcreteState) {
    match sem.react(s.control, &s.values, m.event, &m.args) {
        Some(f) => (
            f.outputs.into_iter().map(|(event, args)| Message { event, args }).collect(),
            ConcreteState { control: sem.model().transitions[f.transition].target, values: f.values },
        ),
        None => (Vec::new(), s.clone()),
    }
}

/// Model stimuli at `s` that enable exactly one transition.
fn deterministic_inputs(sem: &Semantics<'_>, inputs: &InputEnumerator<'_, '_>, s: &ConcreteState) -> Vec<Message> {
    let model = sem.model();
    let mut out: Vec<Message> = Vec::new();
    for i in inputs.enumerate(s) {
        let m = Message { event: model.transitions[i.transition].trigger, args: i.args };
        if out.last() != Some(&m) && sem.enabled(s.control, &s.values, m.event, &m.args).len() == 1 {
            out.push(m);
        }
    }
    out
}

/// Shortest input sequence of at most `max_len` steps that separates
/// `state` from the most rival control states; empty when no input helps.
pub fn state_check(sem: &Semantics<'_>, inputs: &InputEnumerator<'_, '_>, state: &ConcreteState, max_len: usize) -> Vec<Message> {
    let n = sem.model().states.len();
    let rivals: Vec<ConcreteState> = (0..n)
        .filter(|&c| c != state.control)
        .map(|control| ConcreteState { control, values: state.values.clone() })
        .collect();
    // (model state, rivals still unseparated, distinguished so far, path)
    let mut queue = VecDeque::from([(state.clone(), rivals.clone(), 0usize, Vec::<Message>::new())]);
    let mut seen: HashSet<(ConcreteState, Vec<ConcreteState>, usize)> = HashSet::new();
    seen.insert((state.clone(), rivals.clone(), 0));
    let mut best: (usize, Vec<Message>) = (0, Vec::new());
    while let Some((s, live, done, path)) = queue.pop_front() {
        if live.is_empty() || path.len() >= max_len {
            continue;
        }
        for m in deterministic_inputs(sem, inputs, &s) {
            let (out, s1) = react(sem, &s, &m);
            let mut next = Vec::new();
            let mut split = done;
            for r in &live {
                let (ro, r1) = react(sem, r, &m);
                if ro != out {
                    split += 1;
                } else if r1 != s1 && !next.contains(&r1) {
                    next.push(r1);
                }
            }
            let mut p = path.clone();
            p.push(m);
            if split > best.0 {
                best = (split, p.clone());
                if split == rivals.len() {
                    return best.1;
                }
            }
            next.sort();
            if seen.insert((s1.clone(), next.clone(), split)) {
                queue.push_back((s1, next, split, p));
            }
        }
    }
    best.1
}
