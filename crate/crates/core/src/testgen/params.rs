//! Lifting concrete stimulus data into named test parameters.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{Domain, Model, Value};

use super::{Matcher, TestCase, TestStep};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestParam {
    pub name: String,
    pub domain: Domain,
    pub default: Value,
}

/// A test case whose stimulus data are parameters. Expectations whose value
/// equals a lifted stimulus argument refer to the same parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParameterizedTestCase {
    pub base: String,
    pub params: Vec<TestParam>,
    pub preamble: Vec<TestStep>,
    pub body: Vec<TestStep>,
    pub postamble: Vec<TestStep>,
}

fn substitute(steps: &[TestStep], bind: &dyn Fn(&Matcher) -> Option<Matcher>) -> Option<Vec<TestStep>> {
    steps
        .iter()
        .map(|s| {
            Some(match s {
                TestStep::Send { event, args } => TestStep::Send {
                    event: event.clone(),
                    args: args.iter().map(bind).collect::<Option<_>>()?,
                },
                TestStep::Expect { event, args } => TestStep::Expect {
                    event: event.clone(),
                    args: args.iter().map(bind).collect::<Option<_>>()?,
                },
                TestStep::Settle => TestStep::Settle,
            })
        })
        .collect()
}

impl ParameterizedTestCase {
    /// Replaces parameter references by `values`, falling back to defaults.
    /// `None` if a value lies outside its parameter's domain.
    pub fn instantiate(&self, base: &TestCase, values: &BTreeMap<String, Value>) -> Option<TestCase> {
        let mut env = BTreeMap::new();
        for p in &self.params {
            let v = values.get(&p.name).unwrap_or(&p.default);
            if !p.domain.contains(v) {
                return None;
            }
            env.insert(p.name.as_str(), v.clone());
        }
        let bind = |m: &Matcher| match m {
            Matcher::Param { param } => env.get(param.as_str()).cloned().map(Matcher::Value),
            v => Some(v.clone()),
        };
        Some(TestCase {
            preamble: substitute(&self.preamble, &bind)?,
            body: substitute(&self.body, &bind)?,
            postamble: substitute(&self.postamble, &bind)?,
            ..base.clone()
        })
    }

    pub fn with_defaults(&self, base: &TestCase) -> TestCase {
        self.instantiate(base, &BTreeMap::new()).expect("defaults lie in their domains")
    }
}

/// One parameter `P1, P2, ...` per distinct (domain, value) among the
/// stimulus arguments, numbered by first occurrence.
pub fn parameterize(tc: &TestCase, model: &Model) -> ParameterizedTestCase {
    let mut params: Vec<TestParam> = Vec::new();
    let domain_of = |event: &str, i: usize| {
        model
            .event_index(event)
            .and_then(|e| model.events[e].params.get(i))
            .map(|p| p.domain.clone())
    };
    for s in tc.steps() {
        if let TestStep::Send { event, args } = s {
            for (i, a) in args.iter().enumerate() {
                let (Matcher::Value(v), Some(domain)) = (a, domain_of(event, i)) else { continue };
                if !params.iter().any(|p| p.domain == domain && p.default == *v) {
                    let name = format!("P{}", params.len() + 1);
                    params.push(TestParam { name, domain, default: v.clone() });
                }
            }
        }
    }
    let lift = |steps: &[TestStep]| -> Vec<TestStep> {
        steps
            .iter()
            .map(|s| match s {
                TestStep::Send { event, args } => TestStep::Send {
                    event: event.clone(),
                    args: args
                        .iter()
                        .enumerate()
                        .map(|(i, a)| match (a, domain_of(event, i)) {
                            (Matcher::Value(v), Some(d)) => params
                                .iter()
                                .find(|p| p.domain == d && p.default == *v)
                                .map_or_else(|| a.clone(), |p| Matcher::Param { param: p.name.clone() }),
                            _ => a.clone(),
                        })
                        .collect(),
                },
                TestStep::Expect { event, args } => TestStep::Expect {
                    event: event.clone(),
                    args: args
                        .iter()
                        .enumerate()
                        .map(|(i, a)| {
                            let Matcher::Value(v) = a else { return a.clone() };
                            let d = domain_of(event, i);
                            let same = params.iter().find(|p| Some(&p.domain) == d.as_ref() && p.default == *v);
                            same.or_else(|| params.iter().find(|p| p.default == *v))
                                .map_or_else(|| a.clone(), |p| Matcher::Param { param: p.name.clone() })
                        })
                        .collect(),
                },
                TestStep::Settle => TestStep::Settle,
            })
            .collect()
    };
    ParameterizedTestCase {
        base: tc.id.clone(),
        preamble: lift(&tc.preamble),
        body: lift(&tc.body),
        postamble: lift(&tc.postamble),
        params,
    }
}
