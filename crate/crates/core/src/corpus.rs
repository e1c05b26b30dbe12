//! Bundled example models with their test purposes and ICS profiles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::explore::{explore, trace_paths, Bounds, ExploreError, Scenario, ScenarioError, Trace};
use crate::model::{parse_model, Model, ModelError, Profile, ProfileError};
use crate::testgen::trace_requirements;

/// The `ping` fixture: one state, a counter and two guarded transitions.
pub const PING: &str = include_str!("../../../corpus/ping.mbt");

#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub model: &'static str,
    pub purposes: &'static str,
    /// `(file stem, text)` pairs.
    pub profiles: &'static [(&'static str, &'static str)],
    pub readme: &'static str,
}

/// An expected test purpose: the requirements one test should exercise and
/// a scenario sketch of how it gets there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurposeSketch {
    pub id: String,
    pub summary: String,
    pub requirements: Vec<String>,
    pub scenario: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("purposes: {0}")]
    Purposes(#[from] serde_json::Error),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("purpose {id}: {source}")]
    Scenario { id: String, source: ScenarioError },
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("no profile named `{0}`")]
    UnknownProfile(String),
}

impl CorpusEntry {
    pub fn parse(&self) -> Result<Model, CorpusError> {
        Ok(parse_model(self.model)?)
    }

    pub fn purposes(&self) -> Result<Vec<PurposeSketch>, CorpusError> {
        Ok(serde_json::from_str(self.purposes)?)
    }

    pub fn profile(&self, name: &str) -> Result<Profile, CorpusError> {
        let (_, text) = self
            .profiles
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| CorpusError::UnknownProfile(name.to_string()))?;
        Ok(Profile::parse(text)?)
    }
}

impl PurposeSketch {
    pub fn scenario(&self) -> Result<Scenario, CorpusError> {
        Scenario::parse(&self.scenario).map_err(|source| CorpusError::Scenario { id: self.id.clone(), source })
    }

    /// True when one trace fires transitions tagged with every listed requirement.
    pub fn covered_by(&self, traces: &[Trace], model: &Model) -> bool {
        traces.iter().any(|t| {
            let reqs: BTreeSet<String> = trace_requirements(t, model).into_iter().collect();
            self.requirements.iter().all(|r| reqs.contains(r))
        })
    }

    /// True when some path of the scenario slice covers every listed requirement.
    pub fn coverable(&self, model: &Model, bounds: &Bounds) -> Result<bool, CorpusError> {
        let scenario = self.scenario()?;
        scenario
            .compile(model)
            .map_err(|source| CorpusError::Scenario { id: self.id.clone(), source })?;
        let graph = explore(model, bounds, Some(&scenario))?;
        let want: BTreeSet<&str> = self.requirements.iter().map(String::as_str).collect();
        Ok(trace_paths(&graph).iter().any(|p| {
            let got: BTreeSet<&str> = p
                .edges
                .iter()
                .flat_map(|&e| model.transitions[graph.edges[e].transition].req_tags.iter().map(String::as_str))
                .collect();
            want.is_subset(&got)
        }))
    }
}

pub fn corpus_geonet_ls() -> CorpusEntry {
    CorpusEntry {
        name: "geonet-ls",
        model: include_str!("../../../corpus/geonet-ls/model.mbt"),
        purposes: include_str!("../../../corpus/geonet-ls/purposes.json"),
        profiles: &[
            ("minimal", include_str!("../../../corpus/geonet-ls/profiles/minimal.profile")),
            ("no-queue", include_str!("../../../corpus/geonet-ls/profiles/no-queue.profile")),
            ("no-refresh", include_str!("../../../corpus/geonet-ls/profiles/no-refresh.profile")),
        ],
        readme: include_str!("../../../corpus/geonet-ls/README.md"),
    }
}

pub fn corpus_rx() -> CorpusEntry {
    CorpusEntry {
        name: "rx",
        model: include_str!("../../../corpus/rx/model.mbt"),
        purposes: include_str!("../../../corpus/rx/purposes.json"),
        profiles: &[
            ("no-downgrade", include_str!("../../../corpus/rx/profiles/no-downgrade.profile")),
            ("no-gating", include_str!("../../../corpus/rx/profiles/no-gating.profile")),
        ],
        readme: include_str!("../../../corpus/rx/README.md"),
    }
}

pub fn corpus_atm() -> CorpusEntry {
    CorpusEntry {
        name: "atm",
        model: include_str!("../../../corpus/atm/model.mbt"),
        purposes: include_str!("../../../corpus/atm/purposes.json"),
        profiles: &[("no-eject-at-pin", include_str!("../../../corpus/atm/profiles/no-eject-at-pin.profile"))],
        readme: include_str!("../../../corpus/atm/README.md"),
    }
}

pub fn entries() -> [CorpusEntry; 3] {
    [corpus_geonet_ls(), corpus_rx(), corpus_atm()]
}

pub fn ping() -> Model {
    parse_model(PING).expect("ping fixture parses")
}
