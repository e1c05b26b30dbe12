//! Seeded random models and a brute-force reference explorer shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mbtkit_core::explore::{ConcreteState, Message};
use mbtkit_core::model::{Direction, Domain, Model, Semantics, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small random model in DSL text: at most 6 states, variable domain
/// product at most 64, every stimulus with at most 3 argument tuples.
pub fn random_model(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("model rand{seed}\n");
    let n_states = rng.gen_range(1..=6);
    for s in 0..n_states {
        out += &format!("state S{s}{}\n", if s == 0 { " initial" } else { "" });
    }
    // (name, is_int, max)
    let mut vars: Vec<(String, bool, i64)> = Vec::new();
    let mut product = 1;
    for v in 0..rng.gen_range(0..=3) {
        let (is_int, max) = if rng.gen_bool(0.7) { (true, rng.gen_range(1..=3)) } else { (false, 1) };
        if product * (max + 1) > 64 {
            break;
        }
        product *= max + 1;
        let name = format!("v{v}");
        if is_int {
            out += &format!("var {name} : int[0..{max}] = 0\n");
        } else {
            out += &format!("var {name} : bool = false\n");
        }
        vars.push((name, is_int, max));
    }
    let n_stimuli = rng.gen_range(1..=3);
    // Some(kind): 0 int[0..2], 1 bool
    let mut params: Vec<Option<u8>> = Vec::new();
    for e in 0..n_stimuli {
        let p = match rng.gen_range(0..3) {
            0 => None,
            1 => Some(0u8),
            _ => Some(1u8),
        };
        match p {
            None => out += &format!("stimulus E{e}\n"),
            Some(0) => out += &format!("stimulus E{e}(p: int[0..2])\n"),
            Some(_) => out += &format!("stimulus E{e}(p: bool)\n"),
        }
        params.push(p);
    }
    out += "observation O0\nobservation O1(x: int[0..3])\n";
    out += "req R1 \"first\" clause \"G/A/1\"\nreq R2 \"second\" clause \"G/B/1\"\n";
    let n_trans = rng.gen_range(1..=10);
    for t in 0..n_trans {
        let e = rng.gen_range(0..n_stimuli);
        let mut line = format!("trans t{t}: S{} -> S{} on E{e}", rng.gen_range(0..n_states), rng.gen_range(0..n_states));
        let mut atoms = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let int_vars: Vec<&(String, bool, i64)> = vars.iter().filter(|v| v.1).collect();
            let choice = rng.gen_range(0..3);
            if choice == 0 && params[e] == Some(0) {
                let op = ["<", "<=", "=", "!=", ">", ">="].choose(&mut rng).unwrap();
                atoms.push(format!("p {op} {}", rng.gen_range(0..=2)));
            } else if choice == 1 && params[e] == Some(1) {
                atoms.push(format!("p = {}", rng.gen_bool(0.5)));
            } else if let Some(v) = int_vars.choose(&mut rng) {
                let op = ["<", "<=", "=", "!=", ">", ">="].choose(&mut rng).unwrap();
                atoms.push(format!("{} {op} {}", v.0, rng.gen_range(0..=v.2)));
            } else if let Some(v) = vars.iter().find(|v| !v.1) {
                atoms.push(format!("{} = {}", v.0, rng.gen_bool(0.5)));
            }
        }
        if !atoms.is_empty() {
            let joiner = if rng.gen_bool(0.7) { " and " } else { " or " };
            line += &format!(" [{}]", atoms.join(joiner));
        }
        let mut acts = Vec::new();
        for v in &vars {
            if !rng.gen_bool(0.4) {
                continue;
            }
            if v.1 {
                match rng.gen_range(0..3) {
                    0 => acts.push(format!("{} := {} + 1", v.0, v.0)),
                    1 => acts.push(format!("{} := 0", v.0)),
                    _ if params[e] == Some(0) => acts.push(format!("{} := p", v.0)),
                    _ => acts.push(format!("{} := {} - 1", v.0, v.0)),
                }
            } else {
                acts.push(format!("{} := {}", v.0, rng.gen_bool(0.5)));
            }
        }
        if !acts.is_empty() {
            line += &format!(" / {}", acts.join("; "));
        }
        match rng.gen_range(0..3) {
            0 => line += " ! O0",
            1 => {
                let arg = match vars.iter().find(|v| v.1) {
                    Some(v) if rng.gen_bool(0.6) => v.0.clone(),
                    _ => rng.gen_range(0..=3).to_string(),
                };
                line += &format!(" ! O1({arg})");
            }
            _ => {}
        }
        if rng.gen_bool(0.2) {
            line += " prio 1";
        }
        if rng.gen_bool(0.4) {
            line += if rng.gen_bool(0.5) { " @R1" } else { " @R2" };
        }
        out += &line;
        out.push('\n');
    }
    out
}

fn all_tuples(domains: &[Domain]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let vals = d.values();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Every stimulus with every argument tuple its domains allow.
pub fn all_stimuli(model: &Model) -> Vec<Message> {
    let mut out = Vec::new();
    for (i, e) in model.events.iter().enumerate() {
        if e.direction != Direction::Stimulus {
            continue;
        }
        let domains: Vec<Domain> = e.params.iter().map(|p| p.domain.clone()).collect();
        for args in all_tuples(&domains) {
            out.push(Message { event: i, args });
        }
    }
    out
}

pub type RefEdge = (ConcreteState, Message, usize, Vec<Message>, ConcreteState);

/// Reference exploration by enumerating every stimulus sequence up to
/// `depth`: the minimal depth of each reachable state and every step taken
/// from a state first reached before `depth`.
pub fn brute_force(model: &Model, depth: usize) -> (BTreeMap<ConcreteState, usize>, BTreeSet<RefEdge>) {
    let sem = Semantics::new(model);
    let stimuli = all_stimuli(model);
    let start = ConcreteState { control: model.initial, values: model.initial_values() };
    let mut first: BTreeMap<ConcreteState, usize> = BTreeMap::new();
    first.insert(start.clone(), 0);
    let mut steps: BTreeSet<(RefEdge, usize)> = BTreeSet::new();
    // every sequence, not a closure: states are revisited along every path
    fn walk(
        sem: &Semantics<'_>,
        stimuli: &[Message],
        s: &ConcreteState,
        d: usize,
        depth: usize,
        first: &mut BTreeMap<ConcreteState, usize>,
        steps: &mut BTreeSet<(RefEdge, usize)>,
    ) {
        if d == depth {
            return;
        }
        for m in stimuli {
            for f in sem.enabled(s.control, &s.values, m.event, &m.args) {
                let to = ConcreteState { control: sem.model().transitions[f.transition].target, values: f.values.clone() };
                let outs: Vec<Message> = f.outputs.iter().map(|(e, a)| Message { event: *e, args: a.clone() }).collect();
                let e = first.entry(to.clone()).or_insert(d + 1);
                *e = (*e).min(d + 1);
                steps.insert(((s.clone(), m.clone(), f.transition, outs, to.clone()), d));
                walk(sem, stimuli, &to, d + 1, depth, first, steps);
            }
        }
    }
    walk(&sem, &stimuli, &start, 0, depth, &mut first, &mut steps);
    let edges = steps
        .into_iter()
        .filter(|(e, _)| first[&e.0] < depth)
        .map(|(e, _)| e)
        .collect();
    (first, edges)
}

/// Outputs and successor of the deterministic reaction, or silence.
pub fn react(model: &Model, s: &ConcreteState, m: &Message) -> (Vec<Message>, ConcreteState) {
    let sem = Semantics::new(model);
    match sem.react(s.control, &s.values, m.event, &m.args) {
        Some(f) => (
            f.outputs.into_iter().map(|(event, args)| Message { event, args }).collect(),
            ConcreteState { control: model.transitions[f.transition].target, values: f.values },
        ),
        None => (Vec::new(), s.clone()),
    }
}

/// A random stimulus pattern over `model`'s events, some atoms with
/// argument constraints.
pub fn random_scenario(model: &Model, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms: Vec<(String, Option<Domain>)> =
        model.stimuli().map(|(_, e)| (e.name.clone(), e.params.first().map(|p| p.domain.clone()))).collect();
    fn part(rng: &mut ChaCha8Rng, atoms: &[(String, Option<Domain>)], depth: u32) -> String {
        // weights favour atoms and stars so slices stay non-trivial
        let pick = if depth == 0 { rng.gen_range(0..4) } else { rng.gen_range(0..13) };
        match pick {
            0..=2 => {
                let (name, dom) = &atoms[rng.gen_range(0..atoms.len())];
                match dom {
                    Some(d) if rng.gen_bool(0.4) => format!("{name}({})", d.values().choose(rng).unwrap()),
                    _ => name.clone(),
                }
            }
            3 => "_".into(),
            4..=6 => format!("{} ; {}", part(rng, atoms, depth - 1), part(rng, atoms, depth - 1)),
            7 | 8 => format!("({} | {})", part(rng, atoms, depth - 1), part(rng, atoms, depth - 1)),
            9..=11 => format!("({})*", part(rng, atoms, depth - 1)),
            _ => "{}".into(),
        }
    }
    part(&mut rng, &atoms, 3)
}
