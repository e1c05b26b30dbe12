use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::explore::{Bounds, ConcreteState, DataStrategy, InputEnumerator, Message};
use crate::model::{Model, Semantics};
use crate::testgen::TestSuite;

use super::{run, Mutant, MutationOperator, Sut, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MutantStatus {
    Killed,
    Survived,
    EquivalentWithinBounds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MutantOutcome {
    #[serde(flatten)]
    pub operator: MutationOperator,
    pub status: MutantStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub killed_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdequacyReport {
    pub total: usize,
    pub killed: usize,
    pub survived: usize,
    pub equivalent: usize,
    pub score: f64,
    pub mutants: Vec<MutantOutcome>,
}

impl AdequacyReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Shortest stimulus sequence (within `bounds`) after which the mutant's
/// observations differ from the model's. Stimuli range over the inputs the
/// model itself accepts, which is what generated tests can send; both
/// sides react as the deterministic SUT does.
pub fn bounded_distinguishing_sequence(model: &Model, mutant: &Model, bounds: &Bounds) -> Option<Vec<Message>> {
    let sa = Semantics::new(model);
    let sb = Semantics::new(mutant);
    let inputs = InputEnumerator::new(&sa, DataStrategy::Exhaustive);
    let start = (ConcreteState::initial(model), ConcreteState::initial(mutant));
    let mut parent: HashMap<(ConcreteState, ConcreteState), Option<(usize, Message)>> = HashMap::new();
    let mut order = vec![start.clone()];
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    let path = |order: &[(ConcreteState, ConcreteState)], parent: &HashMap<_, Option<(usize, Message)>>, mut at: usize, last: Message| {
        let mut seq = vec![last];
        while let Some(Some((p, m))) = parent.get(&order[at]) {
            seq.push(m.clone());
            at = *p;
        }
        seq.reverse();
        seq
    };
    while let Some((u, depth)) = queue.pop_front() {
        if depth >= bounds.max_depth {
            continue;
        }
        let (a, b) = order[u].clone();
        let mut stimuli: Vec<Message> = inputs
            .enumerate(&a)
            .into_iter()
            .map(|i| Message { event: model.transitions[i.transition].trigger, args: i.args })
            .collect();
        stimuli.dedup();
        for m in stimuli {
            let fa = sa.react(a.control, &a.values, m.event, &m.args);
            let fb = sb.react(b.control, &b.values, m.event, &m.args);
            let outs = |f: &Option<crate::model::Firing>| f.as_ref().map(|f| f.outputs.clone()).unwrap_or_default();
            if outs(&fa) != outs(&fb) {
                return Some(path(&order, &parent, u, m));
            }
            let next = |f: Option<crate::model::Firing>, s: &ConcreteState, md: &Model| match f {
                Some(f) => ConcreteState { control: md.transitions[f.transition].target, values: f.values },
                None => s.clone(),
            };
            let key = (next(fa, &a, model), next(fb, &b, mutant));
            if parent.contains_key(&key) || order.len() >= bounds.max_nodes {
                continue;
            }
            parent.insert(key.clone(), Some((u, m)));
            order.push(key);
            queue.push_back((order.len() - 1, depth + 1));
        }
    }
    None
}

/// Classifies each mutant: killed if some case fails on it, otherwise
/// equivalent within `bounds` or survived.
pub fn adequacy(suite: &TestSuite, model: &Model, mutants: &[Mutant], bounds: &Bounds) -> AdequacyReport {
    let mut outcomes = Vec::with_capacity(mutants.len());
    for m in mutants {
        let mut sut = Sut::new(&m.model);
        let killer = suite.cases.iter().find(|tc| run(tc, &mut sut).verdict == Verdict::Fail);
        let status = match killer {
            Some(_) => MutantStatus::Killed,
            None if bounded_distinguishing_sequence(model, &m.model, bounds).is_none() => MutantStatus::EquivalentWithinBounds,
            None => MutantStatus::Survived,
        };
        outcomes.push(MutantOutcome { operator: m.operator.clone(), status, killed_by: killer.map(|t| t.id.clone()) });
    }
    let count = |s| outcomes.iter().filter(|o| o.status == s).count();
    let (killed, survived, equivalent) =
        (count(MutantStatus::Killed), count(MutantStatus::Survived), count(MutantStatus::EquivalentWithinBounds));
    let total = outcomes.len();
    let denom = total - equivalent;
    AdequacyReport {
        total,
        killed,
        survived,
        equivalent,
        score: if denom == 0 { 1.0 } else { killed as f64 / denom as f64 },
        mutants: outcomes,
    }
}
