//! Reference SUT interpreted from a model, test execution and mutation
//! adequacy.

mod adequacy;
mod mutate;

use std::collections::VecDeque;

use serde::Serialize;

use crate::explore::{ConcreteState, Message};
use crate::model::{Direction, Model, Semantics, Value};
use crate::testgen::{Matcher, TestCase, TestStep};

pub use crate::testgen::Verdict;
pub use adequacy::{adequacy, bounded_distinguishing_sequence, AdequacyReport, MutantOutcome, MutantStatus};
pub use mutate::{mutate, Mutant, MutationOperator};

/// A deterministic executor of a model: the highest-priority enabled
/// transition fires, equal priorities resolved by declaration order, and
/// stimuli that enable nothing are ignored.
pub struct Sut<'m> {
    sem: Semantics<'m>,
    state: ConcreteState,
    pending: VecDeque<Message>,
}

impl<'m> Sut<'m> {
    pub fn new(model: &'m Model) -> Self {
        Sut { sem: Semantics::new(model), state: ConcreteState::initial(model), pending: VecDeque::new() }
    }

    pub fn model(&self) -> &'m Model {
        self.sem.model()
    }

    pub fn reset(&mut self) {
        self.state = ConcreteState::initial(self.model());
        self.pending.clear();
    }

    pub fn state(&self) -> &ConcreteState {
        &self.state
    }

    /// Applies a stimulus; returns the transition fired, if any.
    pub fn send(&mut self, event: usize, args: &[Value]) -> Option<usize> {
        let f = self.sem.react(self.state.control, &self.state.values, event, args)?;
        self.state = ConcreteState { control: self.model().transitions[f.transition].target, values: f.values };
        self.pending.extend(f.outputs.into_iter().map(|(event, args)| Message { event, args }));
        Some(f.transition)
    }

    pub fn next_output(&mut self) -> Option<Message> {
        self.pending.pop_front()
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionResult {
    pub case: String,
    pub verdict: Verdict,
    /// Index into preamble ++ body ++ postamble; `steps` when an
    /// observation is left over at the end.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Resolves a test step's event and concrete arguments against `model`.
fn resolve(model: &Model, event: &str, args: &[Matcher], dir: Direction) -> Result<Message, String> {
    let e = model.event_index(event).ok_or_else(|| format!("undeclared event {event}"))?;
    let decl = &model.events[e];
    if decl.direction != dir {
        return Err(format!("{event} has the wrong direction"));
    }
    if decl.params.len() != args.len() {
        return Err(format!("{event} takes {} arguments, {} given", decl.params.len(), args.len()));
    }
    let mut vals = Vec::with_capacity(args.len());
    for (m, p) in args.iter().zip(&decl.params) {
        match m {
            Matcher::Value(v) if p.domain.contains(v) => vals.push(v.clone()),
            Matcher::Value(v) => return Err(format!("{v} is outside {} of {event}", p.domain)),
            Matcher::Param { param } => return Err(format!("unbound parameter {param}")),
        }
    }
    Ok(Message { event: e, args: vals })
}

/// Executes `tc` on `sut` from its initial state.
pub fn run(tc: &TestCase, sut: &mut Sut<'_>) -> ExecutionResult {
    sut.reset();
    let model = sut.model();
    let result = |verdict, at: Option<usize>, reason: Option<String>| ExecutionResult {
        case: tc.id.clone(),
        verdict,
        failing_step: at,
        reason,
    };
    let steps: Vec<&TestStep> = tc.steps().collect();
    for (i, step) in steps.iter().enumerate() {
        match step {
            TestStep::Send { event, args } => {
                let msg = match resolve(model, event, args, Direction::Stimulus) {
                    Ok(m) => m,
                    Err(e) => return result(Verdict::Inconclusive, None, Some(e)),
                };
                if let Some(o) = sut.next_output() {
                    return result(tc.default_behavior.unexpected_observation, Some(i), Some(format!("unexpected {}", o.describe(model))));
                }
                sut.send(msg.event, &msg.args);
            }
            TestStep::Expect { event, args } => {
                let want = match resolve(model, event, args, Direction::Observation) {
                    Ok(m) => m,
                    Err(e) => return result(Verdict::Inconclusive, None, Some(e)),
                };
                match sut.next_output() {
                    Some(got) if got == want => {}
                    Some(got) => {
                        return result(
                            Verdict::Fail,
                            Some(i),
                            Some(format!("expected {}, observed {}", want.describe(model), got.describe(model))),
                        )
                    }
                    None => return result(Verdict::Fail, Some(i), Some(format!("expected {}, observed nothing", want.describe(model)))),
                }
            }
            TestStep::Settle => {
                if let Some(o) = sut.next_output() {
                    return result(tc.default_behavior.unexpected_observation, Some(i), Some(format!("unexpected {}", o.describe(model))));
                }
            }
        }
    }
    if let Some(o) = sut.next_output() {
        return result(tc.default_behavior.unexpected_observation, Some(steps.len()), Some(format!("unexpected {}", o.describe(model))));
    }
    result(Verdict::Pass, None, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::tests::ping;
    use crate::explore::{explore, traces_of, Bounds, Trace};
    use crate::testgen::{trace_to_testcase, DefaultBehavior};

    fn ping_case() -> TestCase {
        let m = ping();
        let g = explore(&m, &Bounds::depth(3), None).unwrap();
        let t = traces_of(&g).into_iter().max_by_key(Trace::len).unwrap();
        trace_to_testcase(&t, &m, "TC_PING_TRANSITION_001").unwrap()
    }

    #[test]
    fn generated_case_passes_on_its_model() {
        let m = ping();
        let r = run(&ping_case(), &mut Sut::new(&m));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn dropped_busy_fails_at_its_expect() {
        let mut m = ping();
        let t2 = m.transition_index("t2").unwrap();
        m.transitions[t2].outputs.clear();
        let r = run(&ping_case(), &mut Sut::new(&m));
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.failing_step, Some(5));
    }

    #[test]
    fn extra_output_fails_at_end() {
        let m = ping();
        let mut tc = ping_case();
        tc.body.pop();
        let r = run(&tc, &mut Sut::new(&m));
        assert_eq!((r.verdict, r.failing_step), (Verdict::Fail, Some(5)));
    }

    #[test]
    fn undeclared_event_is_inconclusive() {
        let m = ping();
        let tc = TestCase {
            id: "x".into(),
            purpose_ref: "y".into(),
            preamble: vec![],
            body: vec![TestStep::Send { event: "PONGG".into(), args: vec![] }],
            postamble: vec![],
            req_refs: vec![],
            default_behavior: DefaultBehavior::default(),
            source_trace: vec![],
            state_check: 0,
        };
        assert_eq!(run(&tc, &mut Sut::new(&m)).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn sut_reset_restores_initial_state() {
        let m = ping();
        let mut sut = Sut::new(&m);
        let ping = m.event_index("PING").unwrap();
        assert!(sut.send(ping, &[]).is_some());
        assert_eq!(sut.pending(), 1);
        sut.reset();
        assert_eq!(sut.state(), &ConcreteState::initial(&m));
        assert_eq!(sut.pending(), 0);
    }
}
