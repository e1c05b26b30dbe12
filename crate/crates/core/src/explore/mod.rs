//! Bounded explicit-state exploration of a model's concrete state space.

mod inputs;
mod scenario;
mod traces;
mod walk;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{has_errors, validate, Diagnostic, Model, Semantics, Value};

pub use inputs::{boundary_values, enumerate_inputs, Input, InputEnumerator};
pub use scenario::{Scenario, ScenarioAutomaton, ScenarioError};
pub use traces::{trace_paths, traces_of, TracePath};
pub use walk::random_walk;

pub const DEFAULT_MAX_DEPTH: usize = 12;
pub const DEFAULT_MAX_NODES: usize = 10_000;

/// Control state plus a value for every declared variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConcreteState {
    pub control: usize,
    pub values: Vec<Value>,
}

impl ConcreteState {
    pub fn initial(model: &Model) -> Self {
        ConcreteState { control: model.initial, values: model.initial_values() }
    }

    /// `Idle{n=0}` style rendering.
    pub fn describe(&self, model: &Model) -> String {
        let vals: Vec<String> = model
            .variables
            .iter()
            .zip(&self.values)
            .map(|(v, x)| format!("{}={x}", v.name))
            .collect();
        format!("{}{{{}}}", model.states[self.control], vals.join(","))
    }
}

/// An event occurrence with concrete arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Message {
    pub event: usize,
    pub args: Vec<Value>,
}

impl Message {
    pub fn describe(&self, model: &Model) -> String {
        let name = &model.events[self.event].name;
        let args: Vec<String> = self.args.iter().map(Value::to_string).collect();
        format!("{name}({})", args.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataStrategy {
    #[default]
    Exhaustive,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bounds {
    pub max_depth: usize,
    pub max_nodes: usize,
    pub data: DataStrategy,
    pub seed: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_depth: DEFAULT_MAX_DEPTH, max_nodes: DEFAULT_MAX_NODES, data: DataStrategy::Exhaustive, seed: 0 }
    }
}

impl Bounds {
    pub fn depth(max_depth: usize) -> Self {
        Bounds { max_depth, ..Bounds::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub state: ConcreteState,
    /// Scenario automaton state when exploring a slice.
    pub scenario: Option<usize>,
    pub depth: usize,
    /// The edge that discovered this node (breadth-first tree).
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub transition: usize,
    pub stimulus: Message,
    pub outputs: Vec<Message>,
}

/// One recorded execution step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub from: ConcreteState,
    pub stimulus: Message,
    pub fired: usize,
    pub outputs: Vec<Message>,
    pub to: ConcreteState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub start: ConcreteState,
    pub steps: Vec<Step>,
    /// False when the trace was cut by exploration bounds.
    pub complete: bool,
}

impl Trace {
    pub fn empty(start: ConcreteState) -> Self {
        Trace { start, steps: Vec::new(), complete: true }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub initial: usize,
    /// Nodes with enabled inputs left unexpanded by the bounds.
    pub frontier: Vec<usize>,
    out: Vec<Vec<usize>>,
}

impl ExplorationGraph {
    /// Outgoing edge indices of `node`, in expansion order.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    pub fn is_frontier(&self, node: usize) -> bool {
        self.frontier.binary_search(&node).is_ok()
    }

    pub fn step(&self, edge: usize) -> Step {
        let e = &self.edges[edge];
        Step {
            from: self.nodes[e.from].state.clone(),
            stimulus: e.stimulus.clone(),
            fired: e.transition,
            outputs: e.outputs.clone(),
            to: self.nodes[e.to].state.clone(),
        }
    }

    /// Stable JSON rendering: nodes and edges in exploration order.
    pub fn to_json(&self, model: &Model) -> serde_json::Value {
        use serde_json::json;
        let msg = |m: &Message| json!({ "event": model.events[m.event].name, "args": m.args });
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let vals: serde_json::Map<String, serde_json::Value> = model
                    .variables
                    .iter()
                    .zip(&n.state.values)
                    .map(|(v, x)| (v.name.clone(), json!(x)))
                    .collect();
                let mut o = json!({
                    "id": i,
                    "control": model.states[n.state.control],
                    "valuation": vals,
                    "depth": n.depth,
                });
                if let Some(s) = n.scenario {
                    o["scenario"] = json!(s);
                }
                o
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                json!({
                    "from": e.from,
                    "to": e.to,
                    "transition": model.transitions[e.transition].id,
                    "stimulus": msg(&e.stimulus),
                    "outputs": e.outputs.iter().map(msg).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "model": model.name,
            "initial": self.initial,
            "nodes": nodes,
            "edges": edges,
            "frontier": self.frontier,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("model is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Diagnostic>),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("bounds must be positive")]
    Bounds,
}

/// Breadth-first closure from the initial state, optionally restricted to
/// stimulus sequences that are prefixes of words of `scenario`.
pub fn explore(model: &Model, bounds: &Bounds, scenario: Option<&Scenario>) -> Result<ExplorationGraph, ExploreError> {
    let diags = validate(model);
    if has_errors(&diags) {
        return Err(ExploreError::InvalidModel(diags));
    }
    if bounds.max_depth == 0 || bounds.max_nodes == 0 {
        return Err(ExploreError::Bounds);
    }
    let mut automaton = scenario.map(|s| s.compile(model)).transpose()?;
    let sem = Semantics::new(model);
    let inputs = InputEnumerator::new(&sem, bounds.data);

    let root = Node {
        state: ConcreteState::initial(model),
        scenario: automaton.as_mut().map(|a| a.start()),
        depth: 0,
        parent: None,
    };
    let mut index: HashMap<(ConcreteState, Option<usize>), usize> = HashMap::new();
    index.insert((root.state.clone(), root.scenario), 0);
    let mut nodes = vec![root];
    let mut edges: Vec<Edge> = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut capped = false;

    while let Some(u) = queue.pop_front() {
        let state = nodes[u].state.clone();
        let dfa = nodes[u].scenario;
        let mut moves = Vec::new();
        for input in inputs.enumerate(&state) {
            let next = match (&mut automaton, dfa) {
                (Some(a), Some(q)) => match a.step(q, model.transitions[input.transition].trigger, &input.args) {
                    Some(q2) => Some(q2),
                    None => continue,
                },
                _ => None,
            };
            moves.push((input, next));
        }
        if moves.is_empty() {
            continue;
        }
        if capped || nodes[u].depth >= bounds.max_depth {
            frontier.push(u);
            continue;
        }
        let mut cut = false;
        for (input, next) in moves {
            let target = ConcreteState {
                control: model.transitions[input.transition].target,
                values: input.firing.values,
            };
            let key = (target, next);
            let v = match index.get(&key) {
                Some(&v) => v,
                None => {
                    if nodes.len() >= bounds.max_nodes {
                        capped = true;
                        cut = true;
                        continue;
                    }
                    let v = nodes.len();
                    index.insert(key.clone(), v);
                    nodes.push(Node {
                        state: key.0,
                        scenario: key.1,
                        depth: nodes[u].depth + 1,
                        parent: Some(edges.len()),
                    });
                    out.push(Vec::new());
                    queue.push_back(v);
                    v
                }
            };
            out[u].push(edges.len());
            edges.push(Edge {
                from: u,
                to: v,
                transition: input.transition,
                stimulus: Message { event: model.transitions[input.transition].trigger, args: input.args },
                outputs: input
                    .firing
                    .outputs
                    .into_iter()
                    .map(|(event, args)| Message { event, args })
                    .collect(),
            });
        }
        if cut {
            frontier.push(u);
        }
    }
    frontier.sort_unstable();
    Ok(ExplorationGraph { nodes, edges, initial: 0, frontier, out })
}

/// True iff every step of `sliced` appears in `full` with the same outputs
/// and successor state.
pub fn slice_soundness_check(full: &ExplorationGraph, sliced: &ExplorationGraph) -> bool {
    type Successors<'g> = Vec<(&'g [Message], &'g ConcreteState)>;
    let mut known: HashMap<(&ConcreteState, &Message, usize), Successors<'_>> = HashMap::new();
    for e in &full.edges {
        known
            .entry((&full.nodes[e.from].state, &e.stimulus, e.transition))
            .or_default()
            .push((&e.outputs, &full.nodes[e.to].state));
    }
    sliced.edges.iter().all(|e| {
        known
            .get(&(&sliced.nodes[e.from].state, &e.stimulus, e.transition))
            .is_some_and(|outs| outs.iter().any(|(o, to)| *o == e.outputs.as_slice() && **to == sliced.nodes[e.to].state))
    })
}

/// `(from, stimulus, transition, outputs, to)`.
pub type ConcreteEdge = (ConcreteState, Message, usize, Vec<Message>, ConcreteState);

/// Nodes and edges with scenario annotations dropped, for comparing a
/// slice against an unrestricted exploration.
pub fn concrete_projection(graph: &ExplorationGraph) -> (Vec<ConcreteState>, Vec<ConcreteEdge>) {
    let mut nodes: Vec<ConcreteState> = graph.nodes.iter().map(|n| n.state.clone()).collect();
    nodes.sort();
    nodes.dedup();
    let mut edges: Vec<_> = graph
        .edges
        .iter()
        .map(|e| {
            (
                graph.nodes[e.from].state.clone(),
                e.stimulus.clone(),
                e.transition,
                e.outputs.clone(),
                graph.nodes[e.to].state.clone(),
            )
        })
        .collect();
    edges.sort();
    edges.dedup();
    (nodes, edges)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::parse_model;

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

    pub(crate) fn ping() -> Model {
        parse_model(PING).unwrap()
    }

    fn n_of(g: &ExplorationGraph, i: usize) -> i64 {
        g.nodes[i].state.values[0].as_int().unwrap()
    }

    #[test]
    fn ping_depth_three() {
        let m = ping();
        let g = explore(&m, &Bounds::depth(3), None).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!((0..3).map(|i| n_of(&g, i)).collect::<Vec<_>>(), vec![0, 1, 2]);
        let fired: Vec<&str> = g.edges.iter().map(|e| m.transitions[e.transition].id.as_str()).collect();
        assert_eq!(fired, ["t1", "t1", "t2"]);
        assert_eq!((g.edges[2].from, g.edges[2].to), (2, 2));
        assert!(g.frontier.is_empty());
    }

    #[test]
    fn depth_one_is_initial_plus_successors() {
        let m = ping();
        let g = explore(&m, &Bounds::depth(1), None).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.frontier, vec![1]);
    }

    #[test]
    fn node_cap_marks_frontier() {
        let m = ping();
        let g = explore(&m, &Bounds { max_nodes: 2, ..Bounds::depth(5) }, None).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.frontier, vec![1]);
        assert!(g.edges.iter().all(|e| e.from < 2 && e.to < 2));
    }

    #[test]
    fn scenario_ping_ping_keeps_two_step_prefix() {
        let m = ping();
        let s = Scenario::parse("PING ; PING").unwrap();
        let g = explore(&m, &Bounds::depth(3), Some(&s)).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 2);
        assert!(g.frontier.is_empty());
        let full = explore(&m, &Bounds::depth(3), None).unwrap();
        assert!(slice_soundness_check(&full, &g));
    }

    #[test]
    fn universal_and_empty_scenarios() {
        let m = ping();
        let full = explore(&m, &Bounds::depth(3), None).unwrap();
        let all = explore(&m, &Bounds::depth(3), Some(&Scenario::parse("_*").unwrap())).unwrap();
        assert!(slice_soundness_check(&full, &all));
        assert_eq!(concrete_projection(&full), concrete_projection(&all));
        let none = explore(&m, &Bounds::depth(3), Some(&Scenario::parse("{}").unwrap())).unwrap();
        assert_eq!(none.nodes.len(), 1);
        assert!(none.edges.is_empty());
        assert!(slice_soundness_check(&full, &none));
        let one = explore(&m, &Bounds::depth(3), Some(&Scenario::parse("PING").unwrap())).unwrap();
        assert!(slice_soundness_check(&full, &one));
    }

    #[test]
    fn tampered_slice_is_unsound() {
        let m = ping();
        let full = explore(&m, &Bounds::depth(3), None).unwrap();
        let mut bad = explore(&m, &Bounds::depth(3), Some(&Scenario::parse("PING").unwrap())).unwrap();
        bad.edges[0].outputs.clear();
        assert!(!slice_soundness_check(&full, &bad));
    }

    #[test]
    fn invalid_model_is_rejected() {
        let mut m = ping();
        m.transitions[0].target = 9;
        assert!(matches!(explore(&m, &Bounds::default(), None), Err(ExploreError::InvalidModel(_))));
    }

    #[test]
    fn priority_suppresses_lower_transition() {
        let m = parse_model(
            "state A initial\nstimulus E\nobservation X\nobservation Y\n\
             trans lo: A -> A on E ! X\ntrans hi: A -> A on E ! Y prio 1\n",
        )
        .unwrap();
        let g = explore(&m, &Bounds::depth(2), None).unwrap();
        assert!(g.edges.iter().all(|e| m.transitions[e.transition].id == "hi"));
    }

    #[test]
    fn equal_priority_nondeterminism_is_kept() {
        let m = parse_model(
            "state A initial\nstate B\nstimulus E\n\
             trans x: A -> A on E\ntrans y: A -> B on E\n",
        )
        .unwrap();
        let g = explore(&m, &Bounds::depth(1), None).unwrap();
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn graph_json_is_stable() {
        let m = ping();
        let g = explore(&m, &Bounds::depth(3), None).unwrap();
        let a = serde_json::to_string(&g.to_json(&m)).unwrap();
        let b = serde_json::to_string(&explore(&m, &Bounds::depth(3), None).unwrap().to_json(&m)).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(r#""transition":"t2""#));
    }
}
