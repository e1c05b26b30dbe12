//! Abstract test cases, test purposes and suites from selected traces.

mod check;
mod params;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::coverage::{Coverage, CoverageCriterion, SelectionBudget};
use crate::explore::{Bounds, ConcreteState, DataStrategy, InputEnumerator, Message, Step, Trace};
use crate::model::{Model, Semantics, Value};

pub use check::state_check;
pub use params::{parameterize, ParameterizedTestCase, TestParam};

pub const DEFAULT_STATE_CHECK: usize = 4;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A concrete value or a reference to a test parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum Matcher {
    Value(Value),
    Param { param: String },
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Matcher::Value(v) => write!(f, "{v}"),
            Matcher::Param { param } => write!(f, "{param}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestStep {
    Send { event: String, args: Vec<Matcher> },
    Expect { event: String, args: Vec<Matcher> },
    /// No observation may be pending.
    Settle,
}

impl TestStep {
    fn message(kind: fn(String, Vec<Matcher>) -> TestStep, m: &Message, model: &Model) -> TestStep {
        kind(model.events[m.event].name.clone(), m.args.iter().cloned().map(Matcher::Value).collect())
    }

    pub fn event(&self) -> Option<&str> {
        match self {
            TestStep::Send { event, .. } | TestStep::Expect { event, .. } => Some(event),
            TestStep::Settle => None,
        }
    }

    /// `!PING()`, `?PONG(3)`, `settle`.
    pub fn describe(&self) -> String {
        let call = |e: &str, a: &[Matcher]| {
            format!("{e}({})", a.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
        };
        match self {
            TestStep::Send { event, args } => format!("!{}", call(event, args)),
            TestStep::Expect { event, args } => format!("?{}", call(event, args)),
            TestStep::Settle => "settle".into(),
        }
    }
}

/// Verdict assigned to an observation no step expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DefaultBehavior {
    pub unexpected_observation: Verdict,
}

impl Default for DefaultBehavior {
    fn default() -> Self {
        DefaultBehavior { unexpected_observation: Verdict::Fail }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestCase {
    pub id: String,
    pub purpose_ref: String,
    pub preamble: Vec<TestStep>,
    pub body: Vec<TestStep>,
    pub postamble: Vec<TestStep>,
    pub req_refs: Vec<String>,
    pub default_behavior: DefaultBehavior,
    /// Ids of the transitions the source trace fires, in order.
    pub source_trace: Vec<String>,
    /// Trailing body steps that verify the final state rather than replay the trace.
    #[serde(skip_serializing_if = "is_zero")]
    pub state_check: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl TestCase {
    pub fn steps(&self) -> impl Iterator<Item = &TestStep> {
        self.preamble.iter().chain(&self.body).chain(&self.postamble)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestPurpose {
    pub id: String,
    pub summary: String,
    pub initial_condition: String,
    pub stimulus: Vec<String>,
    pub reaction: Vec<String>,
    pub req_refs: Vec<String>,
    pub untraced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TestgenError {
    #[error("trace has no steps, so the test body would be empty")]
    EmptyTrace,
    #[error("step {step}: {event} in {state} enables {} with equal priority", .transitions.join(", "))]
    Nondeterministic { step: usize, state: String, event: String, transitions: Vec<String> },
}

/// `PING-1.x` → `PING_1_X`.
pub fn id_segment(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect()
}

pub fn test_case_id(model: &Model, criterion: CoverageCriterion, n: usize) -> String {
    format!("TC_{}_{}_{n:03}", id_segment(&model.name), id_segment(criterion.name()))
}

pub fn test_purpose_id(model: &Model, n: usize) -> String {
    format!("TP_{}_{n:03}", id_segment(&model.name))
}

/// `TC_<MODEL>_<CRITERION>_<NNN>` → `TP_<MODEL>_<NNN>`.
pub fn purpose_id_for(case_id: &str) -> String {
    let rest = case_id.strip_prefix("TC_").unwrap_or(case_id);
    if let Some((head, num)) = rest.rsplit_once('_') {
        for c in CoverageCriterion::ALL {
            if let Some(model) = head.strip_suffix(&format!("_{}", id_segment(c.name()))) {
                return format!("TP_{model}_{num}");
            }
        }
    }
    format!("TP_{rest}")
}

/// Rejects the first step where the stimulus enables several transitions
/// of equal top priority.
pub fn check_deterministic(trace: &Trace, model: &Model) -> Result<(), TestgenError> {
    let sem = Semantics::new(model);
    for (i, s) in trace.steps.iter().enumerate() {
        let enabled = sem.enabled(s.from.control, &s.from.values, s.stimulus.event, &s.stimulus.args);
        if enabled.len() > 1 {
            return Err(TestgenError::Nondeterministic {
                step: i,
                state: s.from.describe(model),
                event: s.stimulus.describe(model),
                transitions: enabled.iter().map(|f| model.transitions[f.transition].id.clone()).collect(),
            });
        }
    }
    Ok(())
}

fn step_rows(step: &Step, model: &Model) -> Vec<TestStep> {
    let mut rows = vec![TestStep::message(|event, args| TestStep::Send { event, args }, &step.stimulus, model)];
    rows.extend(
        step.outputs
            .iter()
            .map(|o| TestStep::message(|event, args| TestStep::Expect { event, args }, o, model)),
    );
    if step.outputs.is_empty() {
        rows.push(TestStep::Settle);
    }
    rows
}

/// Requirement ids (declaration order) of the transitions `trace` fires.
pub fn trace_requirements(trace: &Trace, model: &Model) -> Vec<String> {
    let fired: BTreeSet<&str> = trace
        .steps
        .iter()
        .flat_map(|s| model.transitions[s.fired].req_tags.iter().map(String::as_str))
        .collect();
    model
        .requirements
        .iter()
        .filter(|r| !r.excluded && fired.contains(r.id.as_str()))
        .map(|r| r.id.clone())
        .collect()
}

fn build_case(trace: &Trace, model: &Model, id: &str, purpose_ref: &str, split: usize) -> Result<TestCase, TestgenError> {
    if trace.is_empty() {
        return Err(TestgenError::EmptyTrace);
    }
    check_deterministic(trace, model)?;
    let rows = |steps: &[Step]| steps.iter().flat_map(|s| step_rows(s, model)).collect::<Vec<_>>();
    Ok(TestCase {
        id: id.to_string(),
        purpose_ref: purpose_ref.to_string(),
        preamble: rows(&trace.steps[..split]),
        body: rows(&trace.steps[split..]),
        postamble: Vec::new(),
        req_refs: trace_requirements(trace, model),
        default_behavior: DefaultBehavior::default(),
        source_trace: trace.steps.iter().map(|s| model.transitions[s.fired].id.clone()).collect(),
        state_check: 0,
    })
}

/// Steps that verify the state `trace` ends in.
fn check_rows(trace: &Trace, model: &Model, data: DataStrategy, max_len: usize) -> Vec<TestStep> {
    let sem = Semantics::new(model);
    let inputs = InputEnumerator::new(&sem, data);
    let end = trace.steps.last().map_or(&trace.start, |s| &s.to);
    let mut state = end.clone();
    let mut rows = Vec::new();
    for m in state_check(&sem, &inputs, end, max_len) {
        let Some(f) = sem.react(state.control, &state.values, m.event, &m.args) else { break };
        let to = ConcreteState { control: model.transitions[f.transition].target, values: f.values.clone() };
        let step = Step {
            from: state,
            stimulus: m,
            fired: f.transition,
            outputs: f.outputs.into_iter().map(|(event, args)| Message { event, args }).collect(),
            to: to.clone(),
        };
        rows.extend(step_rows(&step, model));
        state = to;
    }
    rows
}

/// Index of the first step that witnesses a goal outside `seen`; 0 if none.
fn preamble_len(trace: &Trace, cov: &Coverage<'_>, seen: &BTreeSet<usize>) -> usize {
    trace
        .steps
        .iter()
        .position(|s| cov.items_of_step(s).iter().any(|i| !seen.contains(i)))
        .unwrap_or(0)
}

/// A standalone test case: with no prior coverage the first step is new,
/// so the whole trace is body.
pub fn trace_to_testcase(trace: &Trace, model: &Model, id: &str) -> Result<TestCase, TestgenError> {
    build_case(trace, model, id, &purpose_id_for(id), 0)
}

fn reactions(body: &[TestStep]) -> (Vec<String>, Vec<String>) {
    let mut stimulus = Vec::new();
    let mut reaction: Vec<Vec<String>> = Vec::new();
    for s in body {
        match s {
            TestStep::Send { .. } => {
                stimulus.push(s.describe()[1..].to_string());
                reaction.push(Vec::new());
            }
            TestStep::Expect { .. } => {
                if let Some(r) = reaction.last_mut() {
                    r.push(s.describe()[1..].to_string());
                }
            }
            TestStep::Settle => {}
        }
    }
    let reaction = reaction
        .into_iter()
        .map(|r| if r.is_empty() { "no observation".to_string() } else { r.join(" and ") })
        .collect();
    (stimulus, reaction)
}

/// Replays the preamble's stimuli to find the state the body starts in.
fn body_start(tc: &TestCase, model: &Model) -> Option<ConcreteState> {
    let sem = Semantics::new(model);
    let mut state = ConcreteState::initial(model);
    for s in &tc.preamble {
        if let TestStep::Send { event, args } = s {
            let e = model.event_index(event)?;
            let args: Vec<Value> = args
                .iter()
                .map(|m| match m {
                    Matcher::Value(v) => Some(v.clone()),
                    Matcher::Param { .. } => None,
                })
                .collect::<Option<_>>()?;
            let f = sem.react(state.control, &state.values, e, &args)?;
            state = ConcreteState { control: model.transitions[f.transition].target, values: f.values };
        }
    }
    Some(state)
}

pub fn derive_test_purpose(tc: &TestCase, model: &Model) -> TestPurpose {
    let (stimulus, reaction) = reactions(&tc.body[..tc.body.len() - tc.state_check]);
    let initial_condition = match body_start(tc, model) {
        Some(s) => {
            let vals: Vec<String> = model
                .variables
                .iter()
                .zip(&s.values)
                .map(|(v, x)| format!("{} = {x}", v.name))
                .collect();
            let mut text = format!("the IUT is in state {}", model.states[s.control]);
            if !vals.is_empty() {
                text.push_str(&format!(" with {}", vals.join(", ")));
            }
            text
        }
        None => "the IUT state after the preamble is unknown".into(),
    };
    let pairs: Vec<String> = stimulus.iter().zip(&reaction).map(|(s, r)| format!("{s} with {r}")).collect();
    let summary = format!("Ensure that the IUT answers {}.", pairs.join(", then "));
    TestPurpose {
        id: tc.purpose_ref.clone(),
        summary,
        initial_condition,
        stimulus,
        reaction,
        untraced: tc.req_refs.is_empty(),
        req_refs: tc.req_refs.clone(),
    }
}

/// A selected trace that could not become a test case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedTrace {
    pub source_trace: Vec<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteMetadata {
    pub model: String,
    pub model_sha256: String,
    pub criterion: CoverageCriterion,
    pub bounds: Bounds,
    pub seed: u64,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<SelectionBudget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    /// Longest state-verification sequence appended to each body; 0 disables it.
    pub state_check: usize,
}

impl SuiteMetadata {
    pub fn new(model: &Model, criterion: CoverageCriterion, bounds: Bounds) -> Self {
        SuiteMetadata {
            model: model.name.clone(),
            model_sha256: model.fingerprint(),
            criterion,
            bounds,
            seed: bounds.seed,
            tool_version: TOOL_VERSION.to_string(),
            budget: None,
            profile: None,
            scenario: None,
            state_check: DEFAULT_STATE_CHECK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestSuite {
    pub name: String,
    pub criterion: CoverageCriterion,
    pub metadata: SuiteMetadata,
    pub cases: Vec<TestCase>,
    pub purposes: Vec<TestPurpose>,
    pub parameterized: Vec<ParameterizedTestCase>,
    pub rejected: Vec<RejectedTrace>,
}

impl TestSuite {
    pub fn case(&self, id: &str) -> Option<&TestCase> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn purpose(&self, id: &str) -> Option<&TestPurpose> {
        self.purposes.iter().find(|p| p.id == id)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("suite serializes")
    }
}

/// One test case per selected trace, in selection order. Each case's
/// preamble reaches the first step covering a goal no earlier case covers.
pub fn generate_suite(model: &Model, selected: &[Trace], metadata: SuiteMetadata) -> TestSuite {
    let criterion = metadata.criterion;
    let cov = Coverage::new(model, criterion);
    let mut seen = BTreeSet::new();
    let mut suite = TestSuite {
        name: id_segment(&model.name),
        criterion,
        metadata,
        cases: Vec::new(),
        purposes: Vec::new(),
        parameterized: Vec::new(),
        rejected: Vec::new(),
    };
    for trace in selected {
        let n = suite.cases.len() + 1;
        let split = preamble_len(trace, &cov, &seen);
        match build_case(trace, model, &test_case_id(model, criterion, n), &test_purpose_id(model, n), split) {
            Ok(mut tc) => {
                if suite.metadata.state_check > 0 {
                    let rows = check_rows(trace, model, suite.metadata.bounds.data, suite.metadata.state_check);
                    tc.state_check = rows.len();
                    tc.body.extend(rows);
                }
                seen.extend(cov.covered_indices(trace));
                suite.purposes.push(derive_test_purpose(&tc, model));
                suite.parameterized.push(parameterize(&tc, model));
                suite.cases.push(tc);
            }
            Err(e) => suite.rejected.push(RejectedTrace {
                source_trace: trace.steps.iter().map(|s| model.transitions[s.fired].id.clone()).collect(),
                reason: e.to_string(),
            }),
        }
    }
    suite
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::select;
    use crate::explore::tests::ping;
    use crate::explore::{explore, traces_of};
    use crate::model::parse_model;

    fn ping_trace() -> Trace {
        let g = explore(&ping(), &Bounds::depth(3), None).unwrap();
        traces_of(&g).into_iter().max_by_key(Trace::len).unwrap()
    }

    #[test]
    fn ping_case_has_six_step_body() {
        let m = ping();
        let tc = trace_to_testcase(&ping_trace(), &m, "TC_PING_TRANSITION_001").unwrap();
        let body: Vec<String> = tc.body.iter().map(TestStep::describe).collect();
        assert_eq!(body, ["!PING()", "?PONG()", "!PING()", "?PONG()", "!PING()", "?BUSY()"]);
        assert!(tc.preamble.is_empty() && tc.postamble.is_empty());
        assert_eq!(tc.purpose_ref, "TP_PING_001");
        assert_eq!(purpose_id_for("TC_A_B_ATOMIC_CONDITION_012"), "TP_A_B_012");
        assert_eq!(tc.source_trace, ["t1", "t1", "t2"]);
    }

    #[test]
    fn empty_trace_is_rejected() {
        let m = ping();
        let t = Trace::empty(ConcreteState::initial(&m));
        assert_eq!(trace_to_testcase(&t, &m, "x"), Err(TestgenError::EmptyTrace));
    }

    #[test]
    fn silent_transition_gets_settle() {
        let m = parse_model("state A initial\nstimulus E\ntrans t: A -> A on E\n").unwrap();
        let g = explore(&m, &Bounds::depth(1), None).unwrap();
        let t = traces_of(&g).pop().unwrap();
        let tc = trace_to_testcase(&t, &m, "TC_X_001").unwrap();
        assert_eq!(tc.body, vec![TestStep::Send { event: "E".into(), args: vec![] }, TestStep::Settle]);
    }

    #[test]
    fn nondeterministic_trace_is_rejected_at_the_choice_point() {
        let m = parse_model(
            "state A initial\nstate B\nstate C\nstimulus E\nstimulus F\n\
             trans f: A -> A on F\ntrans x: A -> B on E\ntrans y: A -> C on E\n",
        )
        .unwrap();
        let g = explore(&m, &Bounds::depth(2), None).unwrap();
        let t = traces_of(&g).into_iter().find(|t| t.len() == 1 && t.steps[0].fired == 1).unwrap();
        assert!(trace_to_testcase(&traces_of(&g)[1], &m, "x").is_ok());
        match trace_to_testcase(&t, &m, "x") {
            Err(TestgenError::Nondeterministic { step, transitions, .. }) => {
                assert_eq!(step, 0);
                assert_eq!(transitions, ["x", "y"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn purpose_renders_stimuli_and_reactions() {
        let src = crate::explore::tests::PING.replace(
            "trans t1",
            "req RQ-PING-1 \"a\" clause \"PING/REQ/01\"\nreq RQ-PING-2 \"b\" clause \"PING/REQ/02\"\ntrans t1",
        );
        let src = src.replacen("! PONG", "! PONG @RQ-PING-1", 1).replacen("! BUSY", "! BUSY @RQ-PING-2", 1);
        let m = parse_model(&src).unwrap();
        let g = explore(&m, &Bounds::depth(3), None).unwrap();
        let t = traces_of(&g).into_iter().max_by_key(Trace::len).unwrap();
        let tc = trace_to_testcase(&t, &m, "TC_PING_TRANSITION_001").unwrap();
        let tp = derive_test_purpose(&tc, &m);
        assert_eq!(tp.stimulus, ["PING()", "PING()", "PING()"]);
        assert_eq!(tp.reaction, ["PONG()", "PONG()", "BUSY()"]);
        assert_eq!(tp.req_refs, ["RQ-PING-1", "RQ-PING-2"]);
        assert_eq!(tp.initial_condition, "the IUT is in state Idle with n = 0");
        assert!(!tp.untraced);
        assert_eq!(tp, derive_test_purpose(&tc.clone(), &m));
    }

    #[test]
    fn untraced_case_is_flagged() {
        let m = ping();
        let tc = trace_to_testcase(&ping_trace(), &m, "TC_PING_TRANSITION_001").unwrap();
        assert!(derive_test_purpose(&tc, &m).untraced);
    }

    #[test]
    fn suite_splits_preamble_at_first_new_goal() {
        let m = parse_model(
            "model two-way\nstate A initial\nstate B\nstimulus E\nstimulus F\nobservation O\n\
             trans go: A -> B on E ! O\ntrans l: B -> B on E\ntrans r: B -> A on F\n",
        )
        .unwrap();
        let g = explore(&m, &Bounds::default(), None).unwrap();
        let sel = select(&g, &m, CoverageCriterion::Transition, None);
        let suite = generate_suite(&m, &sel, SuiteMetadata::new(&m, CoverageCriterion::Transition, Bounds::default()));
        assert_eq!(suite.cases.len(), 2);
        assert_eq!(suite.cases[0].id, "TC_TWO_WAY_TRANSITION_001");
        assert!(suite.cases[0].preamble.is_empty());
        let second = &suite.cases[1];
        assert_eq!(second.preamble.iter().map(TestStep::describe).collect::<Vec<_>>(), ["!E()", "?O()"]);
        assert_eq!(second.purpose_ref, "TP_TWO_WAY_002");
        assert!(suite.purpose("TP_TWO_WAY_002").is_some());
        assert_eq!(suite.metadata.model_sha256, m.fingerprint());
    }
}
