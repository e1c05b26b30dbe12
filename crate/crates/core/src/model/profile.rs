//! ICS/IFS profiles: option selections that prune a model before test
//! selection.

use std::collections::BTreeMap;

use super::Model;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("line {line}: expected `OPTION-ID = true|false`")]
    Syntax { line: usize },
    #[error("line {line}: option `{id}` selected twice")]
    Duplicate { id: String, line: usize },
    #[error("unknown option `{0}`")]
    UnknownOption(String),
}

/// Explicit option selections; options not listed take their default.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Profile {
    pub selections: BTreeMap<String, bool>,
}

impl Profile {
    pub fn parse(text: &str) -> Result<Profile, ProfileError> {
        let mut selections = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (id, value) = line.split_once('=').ok_or(ProfileError::Syntax { line: i + 1 })?;
            let id = id.trim();
            let value = match value.trim() {
                "true" => true,
                "false" => false,
                _ => return Err(ProfileError::Syntax { line: i + 1 }),
            };
            if id.is_empty() || id.contains(char::is_whitespace) {
                return Err(ProfileError::Syntax { line: i + 1 });
            }
            if selections.insert(id.to_string(), value).is_some() {
                return Err(ProfileError::Duplicate { id: id.to_string(), line: i + 1 });
            }
        }
        Ok(Profile { selections })
    }

    pub fn with(mut self, id: &str, selected: bool) -> Self {
        self.selections.insert(id.to_string(), selected);
        self
    }
}

/// Removes every transition tagged with a deselected option and marks the
/// requirements that only those transitions carried as excluded.
pub fn apply_profile(model: &Model, profile: &Profile) -> Result<Model, ProfileError> {
    if let Some(unknown) = profile.selections.keys().find(|k| !model.options.iter().any(|o| &o.id == *k)) {
        return Err(ProfileError::UnknownOption(unknown.clone()));
    }
    let selected = |id: &String| {
        profile
            .selections
            .get(id)
            .copied()
            .unwrap_or_else(|| model.options.iter().find(|o| &o.id == id).is_some_and(|o| o.default))
    };
    let (kept, removed): (Vec<_>, Vec<_>) = model
        .transitions
        .iter()
        .cloned()
        .partition(|t| t.option_tags.iter().all(selected));
    let mut out = model.clone();
    for r in &mut out.requirements {
        let on_removed = removed.iter().any(|t| t.req_tags.contains(&r.id));
        let on_kept = kept.iter().any(|t| t.req_tags.contains(&r.id));
        if on_removed && !on_kept {
            r.excluded = true;
        }
    }
    out.transitions = kept;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    const PING_OPT: &str = "\
model ping
state Idle initial
var n : int[0..2] = 0
stimulus PING
observation PONG
observation BUSY
req RQ-1 \"pong\" clause \"P/1\"
req RQ-2 \"busy\" clause \"P/2\"
option OPT-A \"busy signalling\" default true
trans t1: Idle -> Idle on PING [n < 2] / n := n + 1 ! PONG @RQ-1
trans t2: Idle -> Idle on PING [n = 2] ! BUSY @RQ-2 %OPT-A
";

    #[test]
    fn defaults_without_tags_are_identity() {
        let m = parse_model("state A initial\nstimulus E\ntrans t: A -> A on E\n").unwrap();
        assert_eq!(apply_profile(&m, &Profile::default()).unwrap(), m);
    }

    #[test]
    fn deselected_option_prunes_transition_and_excludes_requirement() {
        let m = parse_model(PING_OPT).unwrap();
        let p = Profile::parse("OPT-A = false\n").unwrap();
        let pruned = apply_profile(&m, &p).unwrap();
        let ids: Vec<_> = pruned.transitions.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["t1"]);
        assert!(pruned.requirement("RQ-2").unwrap().excluded);
        assert!(!pruned.requirement("RQ-1").unwrap().excluded);
        // the original is untouched
        assert_eq!(m.transitions.len(), 2);
        assert_eq!(apply_profile(&pruned, &p).unwrap(), pruned);
    }

    #[test]
    fn unknown_option_is_rejected() {
        let m = parse_model(PING_OPT).unwrap();
        let p = Profile::default().with("OPT-Z", true);
        assert_eq!(apply_profile(&m, &p), Err(ProfileError::UnknownOption("OPT-Z".into())));
    }

    #[test]
    fn profile_syntax() {
        assert!(Profile::parse("# c\nA = true\n\nB=false # x\n").is_ok());
        assert_eq!(Profile::parse("A = yes"), Err(ProfileError::Syntax { line: 1 }));
        assert!(matches!(Profile::parse("A = true\nA = false"), Err(ProfileError::Duplicate { .. })));
    }
}
