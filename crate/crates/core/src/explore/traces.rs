//! Trace extraction from an exploration graph.
//!
//! Every node contributes the breadth-first tree path that discovered it;
//! every other edge contributes that path to its source followed by the
//! edge, after which the trace stops because its target has already been
//! visited. Traces come out in depth-first pre-order of the tree.

use super::{ExplorationGraph, Trace};

/// A trace as a sequence of edge indices into its graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracePath {
    pub edges: Vec<usize>,
    pub complete: bool,
}

impl TracePath {
    pub fn materialize(&self, graph: &ExplorationGraph) -> Trace {
        Trace {
            start: graph.nodes[graph.initial].state.clone(),
            steps: self.edges.iter().map(|&e| graph.step(e)).collect(),
            complete: self.complete,
        }
    }

    pub fn end(&self, graph: &ExplorationGraph) -> usize {
        self.edges.last().map_or(graph.initial, |&e| graph.edges[e].to)
    }
}

pub fn trace_paths(graph: &ExplorationGraph) -> Vec<TracePath> {
    let mut out = Vec::new();
    // (node, path to node); explicit stack keeps pre-order without recursion
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(graph.initial, Vec::new())];
    while let Some((u, path)) = stack.pop() {
        out.push(TracePath { edges: path.clone(), complete: !graph.is_frontier(u) });
        let mut children = Vec::new();
        for &e in graph.out_edges(u) {
            let v = graph.edges[e].to;
            let mut p = path.clone();
            p.push(e);
            if graph.nodes[v].parent == Some(e) {
                children.push((v, p));
            } else {
                out.push(TracePath { edges: p, complete: !graph.is_frontier(v) });
            }
        }
        stack.extend(children.into_iter().rev());
    }
    out
}

pub fn traces_of(graph: &ExplorationGraph) -> Vec<Trace> {
    trace_paths(graph).iter().map(|p| p.materialize(graph)).collect()
}
