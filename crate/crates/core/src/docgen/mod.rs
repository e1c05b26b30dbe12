//! ETSI-style test documentation: test suite structure, test purposes,
//! test descriptions, test cases and a requirements traceability matrix,
//! each as Markdown with a JSON sibling.

mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::model::Model;
use crate::testgen::{TestCase, TestStep, TestSuite};

pub const UNTRACED_GROUP: &str = "UNTRACED";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TssGroup {
    pub name: String,
    pub description: String,
    pub cases: Vec<String>,
    pub groups: Vec<TssGroup>,
}

impl TssGroup {
    fn new(name: &str, description: String) -> Self {
        TssGroup { name: name.to_string(), description, cases: Vec::new(), groups: Vec::new() }
    }

    /// Every case id in this subtree, pre-order.
    pub fn all_cases(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.cases.iter().map(String::as_str).collect();
        for g in &self.groups {
            out.extend(g.all_cases());
        }
        out
    }

    pub fn leaves(&self) -> Vec<&TssGroup> {
        if self.groups.is_empty() {
            return vec![self];
        }
        self.groups.iter().flat_map(TssGroup::leaves).collect()
    }
}

/// Groups are the top-level children of `root`; an empty suite has none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestSuiteStructure {
    pub root: TssGroup,
}

/// Group path of a requirement clause: its `/`-separated segments, less the
/// trailing item number when the clause has three or more.
pub fn clause_path(clause: &str) -> Vec<String> {
    let segs: Vec<String> = clause.split('/').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    match segs.len() {
        0 => vec![UNTRACED_GROUP.to_string()],
        1 | 2 => segs,
        n => segs[..n - 1].to_vec(),
    }
}

/// Number of trace steps the preamble spans.
fn preamble_steps(tc: &TestCase) -> usize {
    tc.preamble.iter().filter(|s| matches!(s, TestStep::Send { .. })).count()
}

/// The requirement a case is filed under: the first one tagged on a body
/// transition, else the first one the case covers at all.
fn grouping_requirement<'m>(tc: &TestCase, model: &'m Model) -> Option<&'m crate::model::Requirement> {
    let live = |id: &str| model.requirement(id).filter(|r| !r.excluded && tc.req_refs.iter().any(|x| x == id));
    let body = tc.source_trace.iter().skip(preamble_steps(tc));
    for t in body {
        if let Some(r) = model.transition(t).and_then(|t| t.req_tags.iter().find_map(|r| live(r))) {
            return Some(r);
        }
    }
    tc.req_refs.iter().find_map(|r| live(r))
}

pub fn build_tss(suite: &TestSuite, model: &Model) -> TestSuiteStructure {
    let mut by_path: BTreeMap<Vec<String>, Vec<String>> = BTreeMap::new();
    for tc in &suite.cases {
        let path = grouping_requirement(tc, model)
            .map_or_else(|| vec![UNTRACED_GROUP.to_string()], |r| clause_path(&r.clause));
        by_path.entry(path).or_default().push(tc.id.clone());
    }
    let mut root = TssGroup::new(&suite.name, format!("Test suite for model {}", model.name));
    for (path, cases) in by_path {
        let mut node = &mut root;
        for (depth, seg) in path.iter().enumerate() {
            let pos = match node.groups.iter().position(|g| &g.name == seg) {
                Some(p) => p,
                None => {
                    let description = if seg == UNTRACED_GROUP {
                        "Cases covering no requirement".to_string()
                    } else {
                        format!("Requirements under clause {}", path[..=depth].join("/"))
                    };
                    node.groups.push(TssGroup::new(seg, description));
                    node.groups.len() - 1
                }
            };
            node = &mut node.groups[pos];
        }
        node.cases.extend(cases);
    }
    TestSuiteStructure { root }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequirementStatus {
    Covered,
    Uncovered,
    ExcludedByProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatrixRow {
    pub requirement: String,
    pub clause: String,
    pub status: RequirementStatus,
    pub cases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceabilityMatrix {
    pub rows: Vec<MatrixRow>,
}

/// One row per declared requirement, in declaration order.
pub fn matrix(suite: &TestSuite, model: &Model) -> TraceabilityMatrix {
    let rows = model
        .requirements
        .iter()
        .map(|r| {
            let cases: Vec<String> =
                suite.cases.iter().filter(|c| c.req_refs.contains(&r.id)).map(|c| c.id.clone()).collect();
            let status = if r.excluded {
                RequirementStatus::ExcludedByProfile
            } else if cases.is_empty() {
                RequirementStatus::Uncovered
            } else {
                RequirementStatus::Covered
            };
            MatrixRow { requirement: r.id.clone(), clause: r.clause.clone(), status, cases }
        })
        .collect();
    TraceabilityMatrix { rows }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocgenError {
    #[error("{document} cites undefined {kind} `{id}`")]
    DanglingReference { document: &'static str, kind: &'static str, id: String },
    #[error("test case `{0}` is not in exactly one leaf group")]
    Structure(String),
    #[error("traceability matrix rows do not match the declared requirements")]
    MatrixIncomplete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    /// File stem: `TSS`, `TP`, `TD`, `TC` or `traceability`.
    pub name: &'static str,
    pub markdown: String,
    pub json: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentBundle {
    pub tss: Document,
    pub tp: Document,
    pub td: Document,
    pub tc: Document,
    pub matrix: Document,
    /// Uncovered requirements and untraced purposes; never fatal.
    pub warnings: Vec<String>,
}

impl DocumentBundle {
    pub fn documents(&self) -> [&Document; 5] {
        [&self.tss, &self.tp, &self.td, &self.tc, &self.matrix]
    }

    /// `(file name, contents)` for every Markdown file and JSON sibling.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for d in self.documents() {
            out.push((format!("{}.md", d.name), d.markdown.clone()));
            let json = serde_json::to_string_pretty(&d.json).expect("document serializes");
            out.push((format!("{}.json", d.name), json + "\n"));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in self.files() {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

/// Checks that every identifier one document cites is defined by the suite
/// or the model, that cases sit in exactly one leaf group, and that the
/// matrix has exactly one row per requirement.
pub fn check_closure(suite: &TestSuite, model: &Model, tss: &TestSuiteStructure, m: &TraceabilityMatrix) -> Result<(), DocgenError> {
    let cases: BTreeSet<&str> = suite.cases.iter().map(|c| c.id.as_str()).collect();
    let purposes: BTreeSet<&str> = suite.purposes.iter().map(|p| p.id.as_str()).collect();
    let reqs: BTreeSet<&str> = model.requirements.iter().map(|r| r.id.as_str()).collect();
    let dangling = |document, kind, id: &str| DocgenError::DanglingReference { document, kind, id: id.to_string() };
    for tc in &suite.cases {
        if !purposes.contains(tc.purpose_ref.as_str()) {
            return Err(dangling("TC", "test purpose", &tc.purpose_ref));
        }
        if let Some(r) = tc.req_refs.iter().find(|r| !reqs.contains(r.as_str())) {
            return Err(dangling("TC", "requirement", r));
        }
    }
    for tp in &suite.purposes {
        if let Some(r) = tp.req_refs.iter().find(|r| !reqs.contains(r.as_str())) {
            return Err(dangling("TP", "requirement", r));
        }
        if !suite.cases.iter().any(|c| c.purpose_ref == tp.id) {
            return Err(dangling("TD", "test case for purpose", &tp.id));
        }
    }
    for p in &suite.parameterized {
        if !cases.contains(p.base.as_str()) {
            return Err(dangling("TC", "test case", &p.base));
        }
    }
    let mut placed: BTreeMap<&str, usize> = BTreeMap::new();
    for leaf in tss.root.leaves() {
        for c in &leaf.cases {
            *placed.entry(c.as_str()).or_default() += 1;
        }
    }
    for c in tss.root.all_cases() {
        if !cases.contains(c) {
            return Err(dangling("TSS", "test case", c));
        }
    }
    if let Some(c) = cases.iter().find(|c| placed.get(*c) != Some(&1)) {
        return Err(DocgenError::Structure(c.to_string()));
    }
    if m.rows.len() != model.requirements.len() || m.rows.iter().zip(&model.requirements).any(|(r, q)| r.requirement != q.id) {
        return Err(DocgenError::MatrixIncomplete);
    }
    for row in &m.rows {
        if let Some(c) = row.cases.iter().find(|c| !cases.contains(c.as_str())) {
            return Err(dangling("traceability", "test case", c));
        }
    }
    Ok(())
}

/// Renders the five documents after checking cross-reference closure.
pub fn emit_bundle(suite: &TestSuite, model: &Model, tss: &TestSuiteStructure) -> Result<DocumentBundle, DocgenError> {
    let m = matrix(suite, model);
    check_closure(suite, model, tss, &m)?;
    let mut warnings = Vec::new();
    for row in &m.rows {
        if row.status == RequirementStatus::Uncovered {
            warnings.push(format!("requirement {} is not covered by any test case", row.requirement));
        }
    }
    for tp in suite.purposes.iter().filter(|p| p.untraced) {
        warnings.push(format!("test purpose {} traces no requirement", tp.id));
    }
    Ok(DocumentBundle {
        tss: render::tss(suite, model, tss),
        tp: render::tp(suite, model),
        td: render::td(suite, model),
        tc: render::tc(suite, model),
        matrix: render::matrix(suite, model, &m),
        warnings,
    })
}
