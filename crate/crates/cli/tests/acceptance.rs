//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero when any of them fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use mbtkit_core::corpus::{self, CorpusEntry};
use mbtkit_core::coverage::{covered, select, CoverageCriterion};
use mbtkit_core::docgen::{build_tss, check_closure, emit_bundle, matrix};
use mbtkit_core::explore::{concrete_projection, explore, traces_of, Bounds, ConcreteState, Message, Scenario};
use mbtkit_core::model::{apply_profile, has_errors, parse_model, validate, Model, Semantics};
use mbtkit_core::simulator::{adequacy, mutate, MutantStatus};
use mbtkit_core::testgen::{generate_suite, Matcher, SuiteMetadata, TestCase, TestStep, TestSuite};
use support::{all_stimuli, brute_force, random_model, random_scenario, react};

type Check = Result<String, String>;

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn suite_for(m: &Model, c: CoverageCriterion, b: Bounds) -> TestSuite {
    let g = explore(m, &b, None).expect("explores");
    let sel = select(&g, m, c, None);
    generate_suite(m, &sel, SuiteMetadata::new(m, c, b))
}

/// Replays `tc` against `model` step by step; Err describes the first
/// mismatch.
fn replay(tc: &TestCase, model: &Model) -> Result<(), String> {
    let mut s = ConcreteState { control: model.initial, values: model.initial_values() };
    let mut pending: VecDeque<Message> = VecDeque::new();
    let msg = |event: &str, args: &[Matcher]| -> Result<Message, String> {
        let e = model.event_index(event).ok_or(format!("no event {event}"))?;
        let args = args
            .iter()
            .map(|a| match a {
                Matcher::Value(v) => Ok(v.clone()),
                Matcher::Param { param } => Err(format!("unbound {param}")),
            })
            .collect::<Result<_, _>>()?;
        Ok(Message { event: e, args })
    };
    for (i, step) in tc.steps().enumerate() {
        match step {
            TestStep::Send { event, args } => {
                if !pending.is_empty() {
                    return Err(format!("step {i}: unexpected output before send"));
                }
                let (outs, next) = react(model, &s, &msg(event, args)?);
                pending.extend(outs);
                s = next;
            }
            TestStep::Expect { event, args } => {
                let want = msg(event, args)?;
                match pending.pop_front() {
                    Some(got) if got == want => {}
                    got => return Err(format!("step {i}: expected {want:?}, got {got:?}")),
                }
            }
            TestStep::Settle => {
                if !pending.is_empty() {
                    return Err(format!("step {i}: output pending at settle"));
                }
            }
        }
    }
    if pending.is_empty() {
        Ok(())
    } else {
        Err("outputs left over".into())
    }
}

/// Stimuli the model reacts to in `s`.
fn accepted(model: &Model, stimuli: &[Message], s: &ConcreteState) -> Vec<Message> {
    let sem = Semantics::new(model);
    stimuli.iter().filter(|m| !sem.enabled(s.control, &s.values, m.event, &m.args).is_empty()).cloned().collect()
}

/// Whether some stimulus sequence of at most `depth` steps makes the two
/// models' outputs differ, searching pairs of states breadth-first.
fn distinguishable(model: &Model, mutant: &Model, depth: usize) -> bool {
    let stimuli = all_stimuli(model);
    let init = |m: &Model| ConcreteState { control: m.initial, values: m.initial_values() };
    let mut seen = HashSet::new();
    let mut layer = vec![(init(model), init(mutant))];
    seen.insert(layer[0].clone());
    for _ in 0..depth {
        let mut next = Vec::new();
        for (a, b) in &layer {
            for m in accepted(model, &stimuli, a) {
                let (oa, na) = react(model, a, &m);
                let (ob, nb) = react(mutant, b, &m);
                if oa != ob {
                    return true;
                }
                if seen.insert((na.clone(), nb.clone())) {
                    next.push((na, nb));
                }
            }
        }
        layer = next;
    }
    false
}

fn criterion_1() -> Check {
    let mut detail = Vec::new();
    for e in [corpus::corpus_geonet_ls(), corpus::corpus_rx()] {
        let m = e.parse().map_err(|x| x.to_string())?;
        let (s, t) = (m.states.len(), m.transitions.len());
        if !(10..=14).contains(&s) || t <= s {
            return Err(format!("{}: {s} states, {t} transitions", e.name));
        }
        detail.push(format!("{} {s}/{t}", e.name));
    }
    Ok(detail.join(", "))
}

fn criterion_2() -> Check {
    let mut detail = Vec::new();
    for e in corpus::entries() {
        let m = e.parse().map_err(|x| x.to_string())?;
        let g = explore(&m, &Bounds::default(), None).map_err(|x| x.to_string())?;
        let sel = select(&g, &m, CoverageCriterion::Requirement, None);
        let purposes = e.purposes().map_err(|x| x.to_string())?;
        let missed: Vec<&str> = purposes.iter().filter(|p| !p.covered_by(&sel, &m)).map(|p| p.id.as_str()).collect();
        if !missed.is_empty() {
            return Err(format!("{}: uncovered {}", e.name, missed.join(" ")));
        }
        detail.push(format!("{} {}/{}", e.name, purposes.len(), purposes.len()));
    }
    Ok(detail.join(", "))
}

fn compare_with_brute_force(m: &Model, depth: usize) -> Result<(), String> {
    let g = explore(m, &Bounds::depth(depth), None).map_err(|x| x.to_string())?;
    let (states, edges) = brute_force(m, depth);
    let got: BTreeMap<ConcreteState, usize> = g.nodes.iter().map(|n| (n.state.clone(), n.depth)).collect();
    if got.len() != g.nodes.len() {
        return Err("duplicate nodes".into());
    }
    if got != states {
        return Err(format!("nodes differ at depth {depth}: {} vs {}", got.len(), states.len()));
    }
    let (_, got_edges) = concrete_projection(&g);
    if got_edges.len() != g.edges.len() {
        return Err("duplicate edges".into());
    }
    let got_edges: BTreeSet<_> = got_edges.into_iter().collect();
    if got_edges != edges {
        return Err(format!("edges differ at depth {depth}: {} vs {}", got_edges.len(), edges.len()));
    }
    Ok(())
}

fn criterion_3() -> Check {
    let atm = corpus::corpus_atm().parse().map_err(|x| x.to_string())?;
    for d in 1..=5 {
        compare_with_brute_force(&atm, d).map_err(|e| format!("atm: {e}"))?;
    }
    let mut n = 0;
    let mut seed = 0;
    while n < 50 {
        let m = parse_model(&random_model(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        seed += 1;
        if has_errors(&validate(&m)) {
            continue;
        }
        compare_with_brute_force(&m, 5).map_err(|e| format!("{}: {e}", m.name))?;
        n += 1;
    }
    Ok(format!("atm at depths 1..5 and 50 random models at depth 5 (seeds 0..{seed})"))
}

fn criterion_4() -> Check {
    let mut n = 0;
    let mut seed = 1000;
    let mut edges = 0;
    while n < 100 {
        let m = parse_model(&random_model(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        let text = random_scenario(&m, seed);
        seed += 1;
        if has_errors(&validate(&m)) {
            continue;
        }
        let depth = 5;
        let s = Scenario::parse(&text).map_err(|e| format!("{text}: {e}"))?;
        let g = explore(&m, &Bounds::depth(depth), Some(&s)).map_err(|e| e.to_string())?;
        let (_, reference) = brute_force(&m, depth);
        for e in &g.edges {
            let key = (
                g.nodes[e.from].state.clone(),
                e.stimulus.clone(),
                e.transition,
                e.outputs.clone(),
                g.nodes[e.to].state.clone(),
            );
            if !reference.contains(&key) {
                return Err(format!("{} under `{text}`: step {key:?} is not a model step", m.name));
            }
        }
        edges += g.edges.len();
        n += 1;
    }
    Ok(format!("100 pairs, {edges} sliced edges checked"))
}

fn criterion_5() -> Check {
    let mut models: Vec<(String, Model)> = vec![("ping".into(), corpus::ping())];
    for e in corpus::entries() {
        let m = e.parse().map_err(|x| x.to_string())?;
        for (p, _) in e.profiles {
            let prof = e.profile(p).map_err(|x| x.to_string())?;
            models.push((format!("{}/{p}", e.name), apply_profile(&m, &prof).map_err(|x| x.to_string())?));
        }
        models.push((e.name.to_string(), m));
    }
    let mut cases = 0;
    for (name, m) in &models {
        for c in CoverageCriterion::ALL {
            let suite = suite_for(m, c, Bounds::default());
            for tc in &suite.cases {
                replay(tc, m).map_err(|e| format!("{name} {}: {e}", tc.id))?;
            }
            cases += suite.cases.len();
        }
    }
    Ok(format!("{cases} cases over {} models and {} criteria, 0 false alarms", models.len(), CoverageCriterion::ALL.len()))
}

fn criterion_6() -> Check {
    let m = corpus::corpus_geonet_ls().parse().map_err(|x| x.to_string())?;
    let b = Bounds::default();
    let suite = suite_for(&m, CoverageCriterion::Transition, b);
    let mutants = mutate(&m, 0, 40);
    if mutants.len() != 40 {
        return Err(format!("only {} mutants", mutants.len()));
    }
    let rep = adequacy(&suite, &m, &mutants, &b);
    let (mut killed, mut live) = (0, Vec::new());
    let mut equivalent = 0;
    for (mu, out) in mutants.iter().zip(&rep.mutants) {
        let kills = suite.cases.iter().any(|tc| replay(tc, &mu.model).is_err());
        let status = if kills {
            MutantStatus::Killed
        } else if distinguishable(&m, &mu.model, b.max_depth) {
            MutantStatus::Survived
        } else {
            MutantStatus::EquivalentWithinBounds
        };
        if status != out.status {
            return Err(format!("{:?}: classified {:?}, reference says {status:?}", mu.operator, out.status));
        }
        match status {
            MutantStatus::Killed => killed += 1,
            MutantStatus::Survived => live.push(format!("{:?}", mu.operator)),
            MutantStatus::EquivalentWithinBounds => equivalent += 1,
        }
    }
    let score = killed as f64 / (killed + live.len()) as f64;
    let summary = format!("{killed} killed, {} survived, {equivalent} equivalent, score {score:.3}", live.len());
    if live.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; survivors: {}", live.join("; ")))
    }
}

/// Smallest number of candidates whose items cover `goal`.
fn minimum_cover(sets: &[BTreeSet<usize>], goal: &BTreeSet<usize>) -> usize {
    fn search(sets: &[BTreeSet<usize>], from: usize, left: usize, have: &BTreeSet<usize>, goal: &BTreeSet<usize>) -> bool {
        if goal.is_subset(have) {
            return true;
        }
        if left == 0 {
            return false;
        }
        (from..sets.len()).any(|i| {
            let next: BTreeSet<usize> = have.union(&sets[i]).copied().collect();
            next.len() > have.len() && search(sets, i + 1, left - 1, &next, goal)
        })
    }
    (0..=sets.len()).find(|&k| search(sets, 0, k, &BTreeSet::new(), goal)).unwrap()
}

fn criterion_7() -> Check {
    let m = corpus::corpus_atm().parse().map_err(|x| x.to_string())?;
    let g = explore(&m, &Bounds::default(), None).map_err(|x| x.to_string())?;
    let mut detail = Vec::new();
    for c in [CoverageCriterion::State, CoverageCriterion::Transition] {
        let candidates = traces_of(&g);
        let mut index = BTreeMap::new();
        let sets: Vec<BTreeSet<usize>> = candidates
            .iter()
            .map(|t| {
                covered(t, &m, c)
                    .into_iter()
                    .map(|i| {
                        let n = index.len();
                        *index.entry(i).or_insert(n)
                    })
                    .collect()
            })
            .collect();
        let goal: BTreeSet<usize> = sets.iter().flatten().copied().collect();
        let greedy = select(&g, &m, c, None).len();
        let opt = minimum_cover(&sets, &goal);
        let bound = ((goal.len() as f64).ln() + 1.0) * opt as f64;
        if greedy as f64 > bound {
            return Err(format!("{}: greedy {greedy} > {bound:.2} (optimum {opt}, {} items)", c.name(), goal.len()));
        }
        detail.push(format!("{} greedy {greedy}, optimum {opt}, {} items", c.name(), goal.len()));
    }
    Ok(detail.join("; "))
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    let mut models: Vec<(String, PathBuf)> = corpus::entries()
        .iter()
        .map(|e| (e.name.to_string(), workspace().join("corpus").join(e.name).join("model.mbt")))
        .collect();
    models.push(("ping".into(), workspace().join("corpus/ping.mbt")));
    for (name, path) in models {
        let mut runs = Vec::new();
        for i in 0..2 {
            let out = tmp.path().join(format!("{name}-{i}"));
            let status = Command::new(env!("CARGO_BIN_EXE_mbtkit"))
                .arg("all")
                .arg(&path)
                .args(["--seed", "7", "--out"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{name}: {}", String::from_utf8_lossy(&status.stderr)));
            }
            runs.push(tree(&out));
        }
        if runs[0] != runs[1] {
            return Err(format!("{name}: output trees differ"));
        }
        files += runs[0].len();
    }
    Ok(format!("4 models, {files} files identical across runs"))
}

fn closure(name: &str, m: &Model) -> Result<Vec<(String, String)>, String> {
    let suite = suite_for(m, CoverageCriterion::Transition, Bounds::default());
    let tss = build_tss(&suite, m);
    let mx = matrix(&suite, m);
    check_closure(&suite, m, &tss, &mx).map_err(|e| format!("{name}: {e}"))?;
    let declared: BTreeSet<&str> = m.requirements.iter().map(|r| r.id.as_str()).collect();
    let rows: BTreeSet<&str> = mx.rows.iter().map(|r| r.requirement.as_str()).collect();
    if declared != rows {
        return Err(format!("{name}: matrix rows do not match requirements"));
    }
    let bundle = emit_bundle(&suite, m, &tss).map_err(|e| format!("{name}: {e}"))?;
    Ok(bundle.files())
}

fn criterion_9() -> Check {
    let entries: Vec<CorpusEntry> = corpus::entries().into_iter().collect();
    for e in &entries {
        closure(e.name, &e.parse().map_err(|x| x.to_string())?)?;
    }
    let files = closure("ping", &corpus::ping())?;
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/ping");
    for (name, text) in &files {
        let want = fs::read_to_string(golden.join(name)).map_err(|e| format!("golden {name}: {e}"))?;
        if &want != text {
            return Err(format!("ping {name} differs from the golden copy"));
        }
    }
    Ok(format!("{} corpus bundles closed, {} ping files match", entries.len(), files.len()))
}

fn main() -> ExitCode {
    let criteria: [(u8, fn() -> Check); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {n}: PASS {d} ({secs:.1}s)"),
            Err(d) => {
                failed += 1;
                println!("criterion {n}: FAIL {d} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
