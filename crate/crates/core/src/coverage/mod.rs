//! Coverage goals, trace coverage and test selection.

mod select;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::explore::{boundary_values, ConcreteState, ExplorationGraph, Step, Trace};
use crate::model::{Domain, Model, Semantics};

pub use select::{parse_rational, select, select_paths, SelectionBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageCriterion {
    State,
    Transition,
    Branch,
    AtomicCondition,
    BoundaryValue,
    Requirement,
}

impl CoverageCriterion {
    pub const ALL: [CoverageCriterion; 6] = [
        CoverageCriterion::State,
        CoverageCriterion::Transition,
        CoverageCriterion::Branch,
        CoverageCriterion::AtomicCondition,
        CoverageCriterion::BoundaryValue,
        CoverageCriterion::Requirement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoverageCriterion::State => "state",
            CoverageCriterion::Transition => "transition",
            CoverageCriterion::Branch => "branch",
            CoverageCriterion::AtomicCondition => "atomic_condition",
            CoverageCriterion::BoundaryValue => "boundary_value",
            CoverageCriterion::Requirement => "requirement",
        }
    }
}

impl fmt::Display for CoverageCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoverageCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        CoverageCriterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown criterion `{s}`"))
    }
}

/// Identity of a coverage goal. Names, not indices, so items stay
/// meaningful across models that differ only by pruning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverageItem {
    State { state: String },
    Transition { transition: String },
    Branch { transition: String, taken: bool },
    AtomicCondition { transition: String, atom: usize, outcome: bool },
    BoundaryValue { transition: String, param: String, value: i64 },
    Requirement { requirement: String },
}

impl CoverageItem {
    pub fn criterion(&self) -> CoverageCriterion {
        match self {
            CoverageItem::State { .. } => CoverageCriterion::State,
            CoverageItem::Transition { .. } => CoverageCriterion::Transition,
            CoverageItem::Branch { .. } => CoverageCriterion::Branch,
            CoverageItem::AtomicCondition { .. } => CoverageCriterion::AtomicCondition,
            CoverageItem::BoundaryValue { .. } => CoverageCriterion::BoundaryValue,
            CoverageItem::Requirement { .. } => CoverageCriterion::Requirement,
        }
    }
}

impl fmt::Display for CoverageItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageItem::State { state } => write!(f, "{state}"),
            CoverageItem::Transition { transition } => write!(f, "{transition}"),
            CoverageItem::Branch { transition, taken } => {
                write!(f, "{transition}:{}", if *taken { "taken" } else { "blocked" })
            }
            CoverageItem::AtomicCondition { transition, atom, outcome } => write!(f, "{transition}#{atom}:{outcome}"),
            CoverageItem::BoundaryValue { transition, param, value } => write!(f, "{transition}.{param}={value}"),
            CoverageItem::Requirement { requirement } => write!(f, "{requirement}"),
        }
    }
}

/// Goal set of one criterion with the per-step witness rules, indexed so
/// traces can be measured as bitsets.
pub struct Coverage<'m> {
    model: &'m Model,
    sem: Semantics<'m>,
    criterion: CoverageCriterion,
    items: Vec<CoverageItem>,
    index: HashMap<CoverageItem, usize>,
    /// Boundary goal values per (transition, param).
    boundaries: HashMap<(usize, usize), BTreeSet<i64>>,
}

impl<'m> Coverage<'m> {
    pub fn new(model: &'m Model, criterion: CoverageCriterion) -> Self {
        let mut items = Vec::new();
        let mut boundaries = HashMap::new();
        let tid = |t: usize| model.transitions[t].id.clone();
        match criterion {
            CoverageCriterion::State => {
                items.extend(model.states.iter().map(|s| CoverageItem::State { state: s.clone() }));
            }
            CoverageCriterion::Transition => {
                items.extend((0..model.transitions.len()).map(|t| CoverageItem::Transition { transition: tid(t) }));
            }
            CoverageCriterion::Branch => {
                for (t, tr) in model.transitions.iter().enumerate() {
                    if tr.guard.is_some() {
                        for taken in [true, false] {
                            items.push(CoverageItem::Branch { transition: tid(t), taken });
                        }
                    }
                }
            }
            CoverageCriterion::AtomicCondition => {
                for (t, tr) in model.transitions.iter().enumerate() {
                    let Some(g) = &tr.guard else { continue };
                    for atom in 0..g.atoms().len() {
                        for outcome in [true, false] {
                            items.push(CoverageItem::AtomicCondition { transition: tid(t), atom, outcome });
                        }
                    }
                }
            }
            CoverageCriterion::BoundaryValue => {
                for (t, tr) in model.transitions.iter().enumerate() {
                    for (p, param) in model.events[tr.trigger].params.iter().enumerate() {
                        if !matches!(param.domain, Domain::Int { .. }) {
                            continue;
                        }
                        let set = boundary_values(&param.domain, tr.guard.as_ref(), p);
                        for &value in &set {
                            items.push(CoverageItem::BoundaryValue {
                                transition: tid(t),
                                param: tr.binders[p].clone(),
                                value,
                            });
                        }
                        boundaries.insert((t, p), set);
                    }
                }
            }
            CoverageCriterion::Requirement => {
                items.extend(
                    model
                        .requirements
                        .iter()
                        .filter(|r| !r.excluded)
                        .map(|r| CoverageItem::Requirement { requirement: r.id.clone() }),
                );
            }
        }
        let index = items.iter().cloned().enumerate().map(|(i, it)| (it, i)).collect();
        Coverage { model, sem: Semantics::new(model), criterion, items, index, boundaries }
    }

    pub fn criterion(&self) -> CoverageCriterion {
        self.criterion
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    /// Goals in a fixed order: declaration order of the underlying elements.
    pub fn items(&self) -> &[CoverageItem] {
        &self.items
    }

    pub fn position(&self, item: &CoverageItem) -> Option<usize> {
        self.index.get(item).copied()
    }

    /// Goals witnessed merely by being in `state` at the start of a trace.
    pub fn start_items(&self, state: &ConcreteState) -> Vec<usize> {
        match self.criterion {
            CoverageCriterion::State => self.state_item(state.control).into_iter().collect(),
            _ => Vec::new(),
        }
    }

    fn state_item(&self, control: usize) -> Option<usize> {
        self.position(&CoverageItem::State { state: self.model.states[control].clone() })
    }

    fn transition_item(&self, t: usize) -> Option<usize> {
        self.position(&CoverageItem::Transition { transition: self.model.transitions[t].id.clone() })
    }

    /// Goals witnessed by one step, arrival evaluations included.
    pub fn step_items(&self, from: &ConcreteState, event: usize, args: &[crate::Value], fired: usize, to: &ConcreteState) -> Vec<usize> {
        let model = self.model;
        let mut out = Vec::new();
        match self.criterion {
            CoverageCriterion::State => out.extend(self.state_item(to.control)),
            CoverageCriterion::Transition => out.extend(self.transition_item(fired)),
            CoverageCriterion::Branch => {
                for &c in self.sem.candidates(from.control, event) {
                    let tr = &model.transitions[c];
                    if tr.guard.is_none() {
                        continue;
                    }
                    let taken = c == fired;
                    if taken || !self.sem.guard_holds(c, &from.values, args) {
                        out.extend(self.position(&CoverageItem::Branch { transition: tr.id.clone(), taken }));
                    }
                }
            }
            CoverageCriterion::AtomicCondition => {
                for &c in self.sem.candidates(from.control, event) {
                    let tr = &model.transitions[c];
                    let Some(g) = &tr.guard else { continue };
                    for (atom, e) in g.atoms().into_iter().enumerate() {
                        if let Ok(outcome) = e.eval_bool(&from.values, args) {
                            out.extend(self.position(&CoverageItem::AtomicCondition {
                                transition: tr.id.clone(),
                                atom,
                                outcome,
                            }));
                        }
                    }
                }
            }
            CoverageCriterion::BoundaryValue => {
                let tr = &model.transitions[fired];
                for (p, arg) in args.iter().enumerate() {
                    let (Some(set), Some(value)) = (self.boundaries.get(&(fired, p)), arg.as_int()) else {
                        continue;
                    };
                    if set.contains(&value) {
                        out.extend(self.position(&CoverageItem::BoundaryValue {
                            transition: tr.id.clone(),
                            param: tr.binders[p].clone(),
                            value,
                        }));
                    }
                }
            }
            CoverageCriterion::Requirement => {
                for r in &model.transitions[fired].req_tags {
                    out.extend(self.position(&CoverageItem::Requirement { requirement: r.clone() }));
                }
            }
        }
        out
    }

    pub fn items_of_step(&self, step: &Step) -> Vec<usize> {
        self.step_items(&step.from, step.stimulus.event, &step.stimulus.args, step.fired, &step.to)
    }

    /// Indices of goals witnessed by `trace`, ascending.
    pub fn covered_indices(&self, trace: &Trace) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = self.start_items(&trace.start).into_iter().collect();
        for s in &trace.steps {
            out.extend(self.items_of_step(s));
        }
        out
    }

    /// Goals witnessed anywhere in `graph`.
    pub fn feasible_indices(&self, graph: &ExplorationGraph) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = self.start_items(&graph.nodes[graph.initial].state).into_iter().collect();
        for e in &graph.edges {
            let from = &graph.nodes[e.from].state;
            let to = &graph.nodes[e.to].state;
            out.extend(self.step_items(from, e.stimulus.event, &e.stimulus.args, e.transition, to));
        }
        out
    }
}

/// The full goal set of `criterion`, independent of exploration.
pub fn goals(model: &Model, criterion: CoverageCriterion) -> BTreeSet<CoverageItem> {
    Coverage::new(model, criterion).items.into_iter().collect()
}

/// Goals witnessed by `trace`.
pub fn covered(trace: &Trace, model: &Model, criterion: CoverageCriterion) -> BTreeSet<CoverageItem> {
    let cov = Coverage::new(model, criterion);
    cov.covered_indices(trace).into_iter().map(|i| cov.items[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub criterion: CoverageCriterion,
    pub total: usize,
    pub covered: usize,
    pub ratio: f64,
    /// Every goal the selection misses, infeasible ones included.
    pub uncovered: Vec<CoverageItem>,
    /// Goals witnessed nowhere in the exploration graph.
    pub infeasible: Vec<CoverageItem>,
}

impl CoverageReport {
    /// Coverage over the goals the graph can witness; 1.0 when there are none.
    pub fn feasible_ratio(&self) -> f64 {
        let feasible = self.total - self.infeasible.len();
        if feasible == 0 {
            1.0
        } else {
            self.covered as f64 / feasible as f64
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let keys = |v: &[CoverageItem]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        json!({
            "criterion": self.criterion,
            "total": self.total,
            "covered": self.covered,
            "ratio": self.ratio,
            "feasible_ratio": self.feasible_ratio(),
            "uncovered": keys(&self.uncovered),
            "infeasible": keys(&self.infeasible),
        })
    }

    /// Plain-text table, one header row and one data row.
    pub fn table(&self) -> String {
        let keys = |v: &[CoverageItem]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
            }
        };
        let row = [
            self.criterion.to_string(),
            self.total.to_string(),
            self.covered.to_string(),
            format!("{:.3}", self.ratio),
            keys(&self.uncovered),
            keys(&self.infeasible),
        ];
        let head = ["criterion", "total", "covered", "ratio", "uncovered", "infeasible"];
        let widths: Vec<usize> = head.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
        let line = |cells: &[&str]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join(" | ").trim_end().to_string()
        };
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let row_refs: Vec<&str> = row.iter().map(String::as_str).collect();
        format!("{}\n{}\n{}\n", line(&head), rule.join("-|-"), line(&row_refs))
    }
}

/// Accounting for `selected`. Without a graph nothing is classed infeasible.
pub fn report(selected: &[Trace], model: &Model, criterion: CoverageCriterion, graph: Option<&ExplorationGraph>) -> CoverageReport {
    let cov = Coverage::new(model, criterion);
    let mut hit = BTreeSet::new();
    for t in selected {
        hit.extend(cov.covered_indices(t));
    }
    let feasible = graph.map(|g| cov.feasible_indices(g));
    let total = cov.items.len();
    let uncovered: Vec<CoverageItem> =
        (0..total).filter(|i| !hit.contains(i)).map(|i| cov.items[i].clone()).collect();
    let infeasible: Vec<CoverageItem> = match &feasible {
        Some(f) => (0..total).filter(|i| !f.contains(i)).map(|i| cov.items[i].clone()).collect(),
        None => Vec::new(),
    };
    CoverageReport {
        criterion,
        total,
        covered: hit.len(),
        ratio: if total == 0 { 1.0 } else { hit.len() as f64 / total as f64 },
        uncovered,
        infeasible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::tests::ping;
    use crate::explore::{explore, traces_of, Bounds};
    use crate::model::parse_model;

    fn ping_full_trace() -> Trace {
        let m = ping();
        let g = explore(&m, &Bounds::depth(3), None).unwrap();
        traces_of(&g).into_iter().max_by_key(Trace::len).unwrap()
    }

    fn keys(set: &BTreeSet<CoverageItem>) -> Vec<String> {
        set.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn ping_goal_sets() {
        let m = ping();
        assert_eq!(keys(&goals(&m, CoverageCriterion::Transition)), ["t1", "t2"]);
        assert_eq!(
            keys(&goals(&m, CoverageCriterion::Branch)),
            ["t1:blocked", "t1:taken", "t2:blocked", "t2:taken"]
        );
        assert!(goals(&m, CoverageCriterion::BoundaryValue).is_empty());
        assert_eq!(goals(&m, CoverageCriterion::AtomicCondition).len(), 4);
    }

    #[test]
    fn ping_trace_covers_both_branches_of_both_guards() {
        let m = ping();
        let t = ping_full_trace();
        assert_eq!(t.len(), 3);
        assert_eq!(keys(&covered(&t, &m, CoverageCriterion::Transition)), ["t1", "t2"]);
        assert_eq!(covered(&t, &m, CoverageCriterion::Branch), goals(&m, CoverageCriterion::Branch));
        assert_eq!(covered(&t, &m, CoverageCriterion::AtomicCondition).len(), 4);
    }

    #[test]
    fn empty_trace_covers_nothing_but_its_start() {
        let m = ping();
        let t = Trace::empty(ConcreteState::initial(&m));
        assert!(covered(&t, &m, CoverageCriterion::Transition).is_empty());
        assert!(covered(&t, &m, CoverageCriterion::Branch).is_empty());
        assert_eq!(keys(&covered(&t, &m, CoverageCriterion::State)), ["Idle"]);
    }

    #[test]
    fn report_accounting() {
        let m = ping();
        let r = report(&[], &m, CoverageCriterion::Transition, None);
        assert_eq!((r.total, r.covered, r.ratio), (2, 0, 0.0));
        let r = report(&[ping_full_trace()], &m, CoverageCriterion::Transition, None);
        assert_eq!((r.total, r.covered, r.ratio), (2, 2, 1.0));
        let empty = parse_model("state A\n").unwrap();
        let r = report(&[], &empty, CoverageCriterion::Transition, None);
        assert_eq!((r.total, r.covered, r.ratio), (0, 0, 1.0));
    }

    #[test]
    fn infeasible_goals_are_reported_separately() {
        let m = parse_model(
            "state A initial\nstate B\nvar b : bool = false\nstimulus E\n\
             trans t: A -> B on E [b]\ntrans u: A -> A on E [not b]\n",
        )
        .unwrap();
        let g = explore(&m, &Bounds::default(), None).unwrap();
        let sel = select(&g, &m, CoverageCriterion::Transition, None);
        let r = report(&sel, &m, CoverageCriterion::Transition, Some(&g));
        assert_eq!(r.covered, 1);
        assert_eq!(keys(&r.infeasible.iter().cloned().collect()), ["t"]);
        assert_eq!(r.covered + r.uncovered.len(), r.total);
        assert_eq!(r.feasible_ratio(), 1.0);
    }

    #[test]
    fn boundary_items_follow_fired_arguments() {
        let m = parse_model("state A initial\nstimulus E(x: int[0..10])\ntrans t: A -> A on E [x > 4]\n").unwrap();
        let g = goals(&m, CoverageCriterion::BoundaryValue);
        assert_eq!(keys(&g), ["t.x=0", "t.x=3", "t.x=4", "t.x=5", "t.x=10"]);
        let graph = explore(&m, &Bounds::depth(1), None).unwrap();
        let r = report(&traces_of(&graph), &m, CoverageCriterion::BoundaryValue, Some(&graph));
        assert_eq!(keys(&r.infeasible.iter().cloned().collect()), ["t.x=0", "t.x=3", "t.x=4"]);
        assert_eq!(r.covered, 2);
    }

    #[test]
    fn table_has_fixed_columns() {
        let m = ping();
        let t = report(&[], &m, CoverageCriterion::Transition, None).table();
        let head: Vec<&str> = t.lines().next().unwrap().split('|').map(str::trim).collect();
        assert_eq!(head, ["criterion", "total", "covered", "ratio", "uncovered", "infeasible"]);
        assert!(t.contains("t1 t2"));
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in CoverageCriterion::ALL {
            assert_eq!(c.name().parse::<CoverageCriterion>().unwrap(), c);
            assert_eq!(serde_json::to_value(c).unwrap(), json!(c.name()));
        }
        assert!("mcdc".parse::<CoverageCriterion>().is_err());
    }
}
