//! Greedy set-cover selection over the traces of an exploration graph.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::explore::{trace_paths, ExplorationGraph, Trace, TracePath};
use crate::model::Model;

use super::{Coverage, CoverageCriterion};

/// Abstract test costs. `max_total_cost = None` is unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionBudget {
    pub cost_per_test: Rational64,
    pub cost_per_step: Rational64,
    pub max_total_cost: Option<Rational64>,
}

impl SelectionBudget {
    pub fn cost(&self, steps: usize) -> Rational64 {
        self.cost_per_test + self.cost_per_step * Rational64::from_integer(steps as i64)
    }

    pub fn is_valid(&self) -> bool {
        let zero = Rational64::from_integer(0);
        self.cost_per_test >= zero && self.cost_per_step >= zero && self.max_total_cost.is_none_or(|m| m > zero)
    }
}

/// Parses `3`, `3/4` or `0.75` as an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational64> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        let den = 10i64.checked_pow(frac.len() as u32)?;
        let num: i64 = frac.parse().ok()?;
        let r = Rational64::from_integer(whole.abs()) + Rational64::new(num, den);
        return Some(if neg { -r } else { r });
    }
    s.parse().ok()
}

struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn or(&mut self, o: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a |= b;
        }
    }

    fn gain(&self, covered: &Bits) -> u32 {
        self.0.iter().zip(&covered.0).map(|(a, c)| (a & !c).count_ones()).sum()
    }
}

/// Selection as trace paths; see [`select`].
pub fn select_paths(
    graph: &ExplorationGraph,
    model: &Model,
    criterion: CoverageCriterion,
    budget: Option<&SelectionBudget>,
) -> Vec<TracePath> {
    let cov = Coverage::new(model, criterion);
    let n = cov.items().len();
    let edge_bits: Vec<Bits> = graph
        .edges
        .iter()
        .map(|e| {
            let mut b = Bits::new(n);
            let from = &graph.nodes[e.from].state;
            let to = &graph.nodes[e.to].state;
            for i in cov.step_items(from, e.stimulus.event, &e.stimulus.args, e.transition, to) {
                b.set(i);
            }
            b
        })
        .collect();
    let mut start = Bits::new(n);
    for i in cov.start_items(&graph.nodes[graph.initial].state) {
        start.set(i);
    }
    let paths = trace_paths(graph);
    let cand: Vec<Bits> = paths
        .iter()
        .map(|p| {
            let mut b = Bits(start.0.clone());
            for &e in &p.edges {
                b.or(&edge_bits[e]);
            }
            b
        })
        .collect();

    let mut covered = Bits::new(n);
    let mut chosen = Vec::new();
    let mut spent = Rational64::from_integer(0);
    loop {
        // (index, gain, cost)
        let mut best: Option<(usize, u32, Rational64)> = None;
        for (i, bits) in cand.iter().enumerate() {
            let gain = bits.gain(&covered);
            if gain == 0 {
                continue;
            }
            let len = paths[i].edges.len();
            let cost = budget.map_or(Rational64::from_integer(0), |b| b.cost(len));
            if let Some(max) = budget.and_then(|b| b.max_total_cost) {
                if spent + cost > max {
                    continue;
                }
            }
            let better = match &best {
                None => true,
                Some((j, g, c)) => {
                    // gain/cost compared by cross-multiplication; zero cost is infinite
                    let lhs = Rational64::from_integer(gain as i64) * c;
                    let rhs = Rational64::from_integer(*g as i64) * cost;
                    let ord = if budget.is_some() { lhs.cmp(&rhs) } else { gain.cmp(g) };
                    ord.then_with(|| paths[*j].edges.len().cmp(&len)).is_gt()
                }
            };
            if better {
                best = Some((i, gain, cost));
            }
        }
        let Some((i, _, cost)) = best else { break };
        covered.or(&cand[i]);
        spent += cost;
        chosen.push(paths[i].clone());
    }
    chosen
}

/// Greedy weighted set cover over the graph's traces. Without a budget each
/// round takes the trace with most new goals; with one, most new goals per
/// unit cost among traces that still fit. Ties go to the shorter trace, then
/// the earlier one in trace order. Stops when nothing left adds coverage.
pub fn select(
    graph: &ExplorationGraph,
    model: &Model,
    criterion: CoverageCriterion,
    budget: Option<&SelectionBudget>,
) -> Vec<Trace> {
    select_paths(graph, model, criterion, budget)
        .iter()
        .map(|p| p.materialize(graph))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::report;
    use crate::explore::tests::ping;
    use crate::explore::{explore, Bounds};
    use crate::model::parse_model;

    fn r(s: &str) -> Rational64 {
        parse_rational(s).unwrap()
    }

    #[test]
    fn ping_transition_selection_is_one_trace() {
        let m = ping();
        let g = explore(&m, &Bounds::depth(3), None).unwrap();
        let sel = select(&g, &m, CoverageCriterion::Transition, None);
        assert_eq!(sel.len(), 1);
        let fired: Vec<&str> = sel[0].steps.iter().map(|s| m.transitions[s.fired].id.as_str()).collect();
        assert_eq!(fired, ["t1", "t1", "t2"]);
    }

    #[test]
    fn budget_below_cheapest_trace_selects_nothing() {
        let m = ping();
        let g = explore(&m, &Bounds::depth(3), None).unwrap();
        let b = SelectionBudget { cost_per_test: r("1"), cost_per_step: r("1"), max_total_cost: Some(r("1/2")) };
        let sel = select(&g, &m, CoverageCriterion::Transition, Some(&b));
        assert!(sel.is_empty());
        let rep = report(&sel, &m, CoverageCriterion::Transition, Some(&g));
        assert_eq!(rep.uncovered.len(), 2);
    }

    #[test]
    fn budget_prefers_cheap_coverage() {
        // a: one step covers 1 goal; b: two steps cover 2 goals
        let m = parse_model(
            "state A initial\nstate B\nstate C\nstimulus E\nstimulus F\n\
             trans a: A -> A on F\ntrans x: A -> B on E\ntrans y: B -> C on E\n",
        )
        .unwrap();
        let g = explore(&m, &Bounds::default(), None).unwrap();
        let b = SelectionBudget { cost_per_test: r("10"), cost_per_step: r("1"), max_total_cost: Some(r("12")) };
        let sel = select(&g, &m, CoverageCriterion::Transition, Some(&b));
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].len(), 2);
        let unlimited = SelectionBudget { max_total_cost: None, ..b };
        assert_eq!(select(&g, &m, CoverageCriterion::Transition, Some(&unlimited)).len(), 2);
    }

    #[test]
    fn saturated_graph_selects_singleton() {
        let m = parse_model("state A initial\nstimulus E\ntrans t: A -> A on E\n").unwrap();
        let g = explore(&m, &Bounds::default(), None).unwrap();
        assert_eq!(select(&g, &m, CoverageCriterion::Transition, None).len(), 1);
    }

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(r("0.75"), Rational64::new(3, 4));
        assert_eq!(r("3/4"), Rational64::new(3, 4));
        assert_eq!(r("2"), Rational64::from_integer(2));
        assert_eq!(r("-1.5"), Rational64::new(-3, 2));
        assert!(parse_rational("x").is_none());
        assert!(parse_rational("1.").is_none());
    }
}
