use std::fmt::Write;

use serde_json::json;

use crate::model::Model;
use crate::testgen::{TestCase, TestStep, TestSuite};

use super::{Document, TestSuiteStructure, TraceabilityMatrix, TssGroup};

fn header(out: &mut String, title: &str, suite: &TestSuite, model: &Model) {
    let _ = writeln!(out, "# {title}: {}\n", model.name);
    let _ = writeln!(out, "- Criterion: {}", suite.criterion);
    let _ = writeln!(out, "- Model sha256: {}", suite.metadata.model_sha256);
    let _ = writeln!(out, "- Tool version: {}\n", suite.metadata.tool_version);
}

fn list(ids: &[String]) -> String {
    if ids.is_empty() {
        "-".to_string()
    } else {
        ids.join(", ")
    }
}

pub(super) fn tss(suite: &TestSuite, model: &Model, tss: &TestSuiteStructure) -> Document {
    fn group(out: &mut String, g: &TssGroup, number: &str, depth: usize) {
        let _ = writeln!(out, "{} {number} {}\n", "#".repeat(depth.min(6)), g.name);
        let _ = writeln!(out, "{}\n", g.description);
        for c in &g.cases {
            let _ = writeln!(out, "- {c}");
        }
        if !g.cases.is_empty() {
            out.push('\n');
        }
        for (i, child) in g.groups.iter().enumerate() {
            group(out, child, &format!("{number}.{}", i + 1), depth + 1);
        }
    }
    let mut md = String::new();
    header(&mut md, "Test Suite Structure", suite, model);
    if tss.root.groups.is_empty() {
        md.push_str("The suite is empty.\n");
    }
    for (i, g) in tss.root.groups.iter().enumerate() {
        group(&mut md, g, &(i + 1).to_string(), 2);
    }
    Document { name: "TSS", markdown: md, json: serde_json::to_value(tss).expect("tss serializes") }
}

pub(super) fn tp(suite: &TestSuite, model: &Model) -> Document {
    let mut md = String::new();
    header(&mut md, "Test Purposes", suite, model);
    for (i, p) in suite.purposes.iter().enumerate() {
        let _ = writeln!(md, "## {} {}\n", i + 1, p.id);
        let _ = writeln!(md, "{}\n", p.summary);
        let reqs = if p.untraced { "(untraced)".to_string() } else { list(&p.req_refs) };
        let _ = writeln!(md, "- Requirements: {reqs}");
        let cases: Vec<String> = suite.cases.iter().filter(|c| c.purpose_ref == p.id).map(|c| c.id.clone()).collect();
        let _ = writeln!(md, "- Test cases: {}\n", list(&cases));
        md.push_str("```\n");
        let _ = writeln!(md, "with {{ {} }}", p.initial_condition);
        md.push_str("ensure that {\n");
        for (s, r) in p.stimulus.iter().zip(&p.reaction) {
            let _ = writeln!(md, "    when {{ the IUT receives {s} }}");
            let _ = writeln!(md, "    then {{ the IUT sends {r} }}");
        }
        md.push_str("}\n```\n\n");
    }
    Document { name: "TP", markdown: md, json: json!({ "model": model.name, "purposes": suite.purposes }) }
}

fn action(step: &TestStep) -> (String, &'static str) {
    match step {
        TestStep::Send { .. } => (format!("send {}", &step.describe()[1..]), "-"),
        TestStep::Expect { .. } => (format!("receive {}", &step.describe()[1..]), "pass if matched, else fail"),
        TestStep::Settle => ("no observation".to_string(), "fail on any observation"),
    }
}

fn step_rows(tc: &TestCase) -> Vec<serde_json::Value> {
    let parts = [("preamble", &tc.preamble), ("body", &tc.body), ("postamble", &tc.postamble)];
    let mut n = 0;
    let mut rows = Vec::new();
    let check_from = tc.body.len() - tc.state_check;
    for (part, steps) in parts {
        for (i, s) in steps.iter().enumerate() {
            n += 1;
            let part = if part == "body" && i >= check_from { "state check" } else { part };
            let (act, verdict) = action(s);
            rows.push(json!({ "step": n, "part": part, "action": act, "verdict": verdict }));
        }
    }
    rows
}

pub(super) fn td(suite: &TestSuite, model: &Model) -> Document {
    let mut md = String::new();
    header(&mut md, "Test Descriptions", suite, model);
    let mut docs = Vec::new();
    for (i, tc) in suite.cases.iter().enumerate() {
        let _ = writeln!(md, "## {} {}\n", i + 1, tc.id);
        let _ = writeln!(md, "- Test purpose: {}", tc.purpose_ref);
        let _ = writeln!(md, "- Requirements: {}\n", list(&tc.req_refs));
        let rows = step_rows(tc);
        md.push_str("| Step | Action | Verdict |\n|---|---|---|\n");
        for r in &rows {
            let label = match r["part"].as_str() {
                Some("body") => String::new(),
                Some(p) => format!(" ({p})"),
                None => String::new(),
            };
            let _ = writeln!(md, "| {} | {}{label} | {} |", r["step"], r["action"].as_str().unwrap_or(""), r["verdict"].as_str().unwrap_or(""));
        }
        md.push('\n');
        docs.push(json!({ "id": tc.id, "purpose": tc.purpose_ref, "req_refs": tc.req_refs, "steps": rows }));
    }
    Document { name: "TD", markdown: md, json: json!({ "model": model.name, "descriptions": docs }) }
}

pub(super) fn tc(suite: &TestSuite, model: &Model) -> Document {
    let mut md = String::new();
    header(&mut md, "Test Cases", suite, model);
    for (i, tc) in suite.cases.iter().enumerate() {
        let _ = writeln!(md, "## {} {}\n", i + 1, tc.id);
        let _ = writeln!(md, "- Test purpose: {}", tc.purpose_ref);
        let _ = writeln!(md, "- Requirements: {}", list(&tc.req_refs));
        let _ = writeln!(md, "- Default: unexpected observation gives {}", tc.default_behavior.unexpected_observation);
        let _ = writeln!(md, "- Source transitions: {}\n", tc.source_trace.join(" "));
        let (body, check) = tc.body.split_at(tc.body.len() - tc.state_check);
        for (part, steps) in [("Preamble", tc.preamble.as_slice()), ("Body", body), ("State check", check), ("Postamble", tc.postamble.as_slice())] {
            if part == "State check" && steps.is_empty() {
                continue;
            }
            let text: Vec<String> = steps.iter().map(TestStep::describe).collect();
            let _ = writeln!(md, "{part}: {}", if text.is_empty() { "-".to_string() } else { text.join(" ") });
            md.push('\n');
        }
        if let Some(p) = suite.parameterized.iter().find(|p| p.base == tc.id).filter(|p| !p.params.is_empty()) {
            md.push_str("| Parameter | Domain | Default |\n|---|---|---|\n");
            for q in &p.params {
                let _ = writeln!(md, "| {} | {} | {} |", q.name, q.domain, q.default);
            }
            md.push('\n');
            let body: Vec<String> = p.body.iter().map(TestStep::describe).collect();
            let _ = writeln!(md, "Parameterized body: {}\n", body.join(" "));
        }
    }
    let json = json!({
        "model": model.name,
        "metadata": suite.metadata,
        "cases": suite.cases,
        "parameterized": suite.parameterized,
    });
    Document { name: "TC", markdown: md, json }
}

pub(super) fn matrix(suite: &TestSuite, model: &Model, m: &TraceabilityMatrix) -> Document {
    let mut md = String::new();
    header(&mut md, "Requirements Traceability", suite, model);
    md.push_str("| Requirement | Clause | Status | Test cases |\n|---|---|---|---|\n");
    for r in &m.rows {
        let status = serde_json::to_value(r.status).expect("status serializes");
        let _ = writeln!(md, "| {} | {} | {} | {} |", r.requirement, r.clause, status.as_str().unwrap_or(""), list(&r.cases));
    }
    Document { name: "traceability", markdown: md, json: serde_json::to_value(m).expect("matrix serializes") }
}
