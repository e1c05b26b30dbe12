use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;

use mbtkit_core::coverage::{parse_rational, report, select, CoverageCriterion, SelectionBudget};
use mbtkit_core::docgen::{build_tss, emit_bundle};
use mbtkit_core::explore::{explore, Bounds, DataStrategy, ExplorationGraph, Scenario, Trace, DEFAULT_MAX_DEPTH, DEFAULT_MAX_NODES};
use mbtkit_core::model::{apply_profile, has_errors, parse_model, validate, Model, Profile, Severity};
use mbtkit_core::simulator::{adequacy, mutate, run, Sut, Verdict};
use mbtkit_core::testgen::{check_deterministic, generate_suite, SuiteMetadata, TestSuite, DEFAULT_STATE_CHECK};

#[derive(Parser)]
#[command(name = "mbtkit", version, about = "Generate conformance test suites from EFSM protocol models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a model; exit 1 on errors
    Validate(Opts),
    /// Write the exploration graph
    Explore(Opts),
    /// Write the test suite and its coverage report
    Generate(Opts),
    /// Write the TSS, TP, TD, TC and traceability documents
    Docs(Opts),
    /// Score the suite against seeded model mutants
    Adequacy(Opts),
    /// Run every stage and write all outputs
    All(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum DataArg {
    Exhaustive,
    Boundary,
}

#[derive(Args)]
struct Opts {
    /// Model file (.mbt)
    model: PathBuf,
    #[arg(long, default_value = "transition", value_parser = criterion_parser())]
    criterion: CoverageCriterion,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    depth: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
    #[arg(long, value_enum, default_value = "exhaustive")]
    data: DataArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// ICS profile file of `OPTION = true|false` lines
    #[arg(long)]
    profile: Option<PathBuf>,
    /// File holding a scenario pattern over stimuli
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Cost of one test (default 1 when a budget is given)
    #[arg(long, value_parser = rational)]
    budget_test: Option<Rational64>,
    /// Cost of one step (default 0 when a budget is given)
    #[arg(long, value_parser = rational)]
    budget_step: Option<Rational64>,
    /// Total cost limit
    #[arg(long, value_parser = rational)]
    budget_max: Option<Rational64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of mutants for `adequacy`
    #[arg(long, default_value_t = 40)]
    mutants: usize,
    /// Longest state-verification sequence appended to each test body; 0 disables it
    #[arg(long, default_value_t = DEFAULT_STATE_CHECK)]
    state_check: usize,
}

fn criterion_parser() -> impl TypedValueParser<Value = CoverageCriterion> {
    PossibleValuesParser::new(CoverageCriterion::ALL.map(CoverageCriterion::name))
        .map(|s| s.parse::<CoverageCriterion>().expect("listed criterion"))
}

fn rational(s: &str) -> Result<Rational64, String> {
    parse_rational(s).ok_or_else(|| format!("`{s}` is not a number or fraction"))
}

/// Exit statuses: 1 invalid input model, 2 usage, 3 internal inconsistency.
enum Failure {
    Invalid(String),
    Usage(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Usage(m) | Failure::Internal(m) => m,
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, text: &str) -> Outcome<()> {
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(dir.join(name), text))
        .map_err(|e| Failure::Internal(format!("cannot write {}: {e}", dir.join(name).display())))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    write(dir, name, &(text + "\n"))
}

struct Loaded {
    model: Model,
    scenario: Option<(Scenario, String)>,
    bounds: Bounds,
    budget: Option<SelectionBudget>,
}

fn check(model: &Model, what: &str) -> Outcome<()> {
    let diags = validate(model);
    for d in &diags {
        eprintln!("{what}: {d}");
    }
    if has_errors(&diags) {
        let n = diags.iter().filter(|d| d.severity == Severity::Error).count();
        return Err(Failure::Invalid(format!("{what}: {n} error(s)")));
    }
    Ok(())
}

fn load(o: &Opts) -> Outcome<Loaded> {
    let src = read(&o.model)?;
    let mut model = parse_model(&src).map_err(|e| Failure::Invalid(format!("{}: {e}", o.model.display())))?;
    check(&model, &o.model.display().to_string())?;
    if let Some(p) = &o.profile {
        let profile = Profile::parse(&read(p)?).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?;
        model = apply_profile(&model, &profile).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?;
        check(&model, &format!("{} with {}", o.model.display(), p.display()))?;
    }
    let scenario = match &o.scenario {
        Some(p) => {
            let text = read(p)?.trim().to_string();
            let s = Scenario::parse(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?;
            s.compile(&model).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?;
            Some((s, text))
        }
        None => None,
    };
    if o.depth == 0 || o.max_nodes == 0 {
        return Err(Failure::Usage("--depth and --max-nodes must be positive".into()));
    }
    let data = match o.data {
        DataArg::Exhaustive => DataStrategy::Exhaustive,
        DataArg::Boundary => DataStrategy::Boundary,
    };
    let bounds = Bounds { max_depth: o.depth, max_nodes: o.max_nodes, data, seed: o.seed };
    let budget = if o.budget_test.is_some() || o.budget_step.is_some() || o.budget_max.is_some() {
        let b = SelectionBudget {
            cost_per_test: o.budget_test.unwrap_or(Rational64::from_integer(1)),
            cost_per_step: o.budget_step.unwrap_or(Rational64::from_integer(0)),
            max_total_cost: o.budget_max,
        };
        if !b.is_valid() {
            return Err(Failure::Usage("budget costs must be non-negative and --budget-max positive".into()));
        }
        Some(b)
    } else {
        None
    };
    Ok(Loaded { model, scenario, bounds, budget })
}

fn graph(l: &Loaded) -> Outcome<ExplorationGraph> {
    let g = explore(&l.model, &l.bounds, l.scenario.as_ref().map(|s| &s.0)).map_err(|e| Failure::Invalid(e.to_string()))?;
    eprintln!("explored {} nodes, {} edges, {} on the frontier", g.nodes.len(), g.edges.len(), g.frontier.len());
    Ok(g)
}

/// The suite plus the selected traces that became test cases.
fn suite(o: &Opts, l: &Loaded, g: &ExplorationGraph) -> Outcome<(TestSuite, Vec<Trace>)> {
    let selected = select(g, &l.model, o.criterion, l.budget.as_ref());
    let mut meta = SuiteMetadata::new(&l.model, o.criterion, l.bounds);
    meta.budget = l.budget;
    meta.profile = o.profile.as_ref().map(|p| p.display().to_string());
    meta.scenario = l.scenario.as_ref().map(|s| s.1.clone());
    meta.state_check = o.state_check;
    let suite = generate_suite(&l.model, &selected, meta);
    for r in &suite.rejected {
        eprintln!("rejected trace {}: {}", r.source_trace.join(" "), r.reason);
    }
    let mut sut = Sut::new(&l.model);
    for tc in &suite.cases {
        let r = run(tc, &mut sut);
        if r.verdict != Verdict::Pass {
            return Err(Failure::Internal(format!(
                "{} gives {} on the model itself: {}",
                tc.id,
                r.verdict,
                r.reason.unwrap_or_default()
            )));
        }
    }
    eprintln!("{} test cases for {} coverage", suite.cases.len(), o.criterion);
    let accepted = selected
        .into_iter()
        .filter(|t| !t.is_empty() && check_deterministic(t, &l.model).is_ok())
        .collect();
    Ok((suite, accepted))
}

fn write_suite(o: &Opts, l: &Loaded, g: &ExplorationGraph, suite: &TestSuite, accepted: &[Trace]) -> Outcome<()> {
    let rep = report(accepted, &l.model, o.criterion, Some(g));
    eprintln!("{} coverage {}/{} ({:.3})", o.criterion, rep.covered, rep.total, rep.ratio);
    write_json(&o.out, "suite.json", &suite.to_json())?;
    write_json(&o.out, "coverage.json", &rep.to_json())?;
    write(&o.out, "coverage.txt", &rep.table())
}

fn write_docs(o: &Opts, l: &Loaded, suite: &TestSuite) -> Outcome<()> {
    let tss = build_tss(suite, &l.model);
    let bundle = emit_bundle(suite, &l.model, &tss).map_err(|e| Failure::Internal(e.to_string()))?;
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    for (name, text) in bundle.files() {
        write(&o.out, &name, &text)?;
    }
    Ok(())
}

fn write_adequacy(o: &Opts, l: &Loaded, suite: &TestSuite) -> Outcome<()> {
    let mutants = mutate(&l.model, o.seed, o.mutants);
    let rep = adequacy(suite, &l.model, &mutants, &l.bounds);
    eprintln!(
        "{} mutants: {} killed, {} survived, {} equivalent within bounds, score {:.3}",
        rep.total, rep.killed, rep.survived, rep.equivalent, rep.score
    );
    write_json(&o.out, "adequacy.json", &rep.to_json())
}

fn execute(cmd: &Command) -> Outcome<()> {
    match cmd {
        Command::Validate(o) => {
            let src = read(&o.model)?;
            let model = parse_model(&src).map_err(|e| Failure::Invalid(format!("{}: {e}", o.model.display())))?;
            let diags = validate(&model);
            for d in &diags {
                println!("{d}");
            }
            if has_errors(&diags) {
                return Err(Failure::Invalid(format!("{} is invalid", o.model.display())));
            }
            eprintln!("{}: {} states, {} transitions", model.name, model.states.len(), model.transitions.len());
            Ok(())
        }
        Command::Explore(o) => {
            let l = load(o)?;
            let g = graph(&l)?;
            write_json(&o.out, "graph.json", &g.to_json(&l.model))
        }
        Command::Generate(o) => {
            let l = load(o)?;
            let g = graph(&l)?;
            let (s, traces) = suite(o, &l, &g)?;
            write_suite(o, &l, &g, &s, &traces)
        }
        Command::Docs(o) => {
            let l = load(o)?;
            let g = graph(&l)?;
            let (s, _) = suite(o, &l, &g)?;
            write_docs(o, &l, &s)
        }
        Command::Adequacy(o) => {
            let l = load(o)?;
            let g = graph(&l)?;
            let (s, _) = suite(o, &l, &g)?;
            write_adequacy(o, &l, &s)
        }
        Command::All(o) => {
            let l = load(o)?;
            let g = graph(&l)?;
            write_json(&o.out, "graph.json", &g.to_json(&l.model))?;
            let (s, traces) = suite(o, &l, &g)?;
            write_suite(o, &l, &g, &s, &traces)?;
            write_docs(o, &l, &s)?;
            write_adequacy(o, &l, &s)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mbtkit: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
