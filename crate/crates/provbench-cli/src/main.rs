use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use provbench::conservation::{
    check_chain, conservation_hypothesis, conserve_chain, scripted_scenario, ClassGate, Derivation, Predicate, Prover,
    Scenario,
};
use provbench::hierarchy::classify;
use provbench::machines::{run, MachineKind, MachineTrace};
use provbench::oracle;
use provbench::prop::{atoms_of, skeleton, tc, PropFormula};
use provbench::semantics::{eval_bounded, OutputOracle};
use provbench::syntax::{parse, print};
use provbench::theory::{TheoryId, ToyTheory};
use provbench::{diagonal, Formula, HierarchyClass, MachineId};

/// Writes to stdout; a closed pipe (e.g. `| head`) ends the process quietly.
fn write_stdout(args: std::fmt::Arguments<'_>) {
    if let Err(e) = io::stdout().lock().write_fmt(args) {
        if e.kind() == io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(1);
    }
}

macro_rules! emit {
    ($($arg:tt)*) => { write_stdout(format_args!($($arg)*)) };
}

macro_rules! emitln {
    () => { write_stdout(format_args!("\n")) };
    ($($arg:tt)*) => { write_stdout(format_args!("{}\n", format_args!($($arg)*))) };
}

#[derive(Parser)]
#[command(name = "provbench", version, about = "Executable provability-predicate constructions at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal hierarchy classes and every class up to a level cap.
    Classify {
        formula: String,
        #[arg(long, default_value_t = 3)]
        max_level: u32,
    },
    /// Propositional skeleton with its atom table.
    Skeleton { formula: String },
    /// Tautological consequence of the assumptions.
    Tc {
        #[arg(long = "assume")]
        assume: Vec<String>,
        formula: String,
    },
    /// Three-valued bounded evaluation, optionally against a machine trace.
    Eval {
        formula: String,
        #[arg(long, default_value_t = 64)]
        bound: u64,
        #[arg(long, requires = "machine")]
        trace: Option<PathBuf>,
        #[arg(long)]
        machine: Option<String>,
    },
    /// Registered fixed points and their expansions.
    Diag {
        /// Print only this name's expansion.
        #[arg(long, conflicts_with = "template")]
        name: Option<String>,
        /// Registers the fixed points in this file and prints them. Each
        /// line reads `NAME CLASS xK BODY`; `xK` stands for the sentence's own code.
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Runs a bell machine and writes its trace as JSON Lines.
    Run {
        #[arg(long)]
        machine: String,
        /// `sound`, `incons`, `unsound`, or a theory file.
        #[arg(long)]
        theory: String,
        #[arg(long, default_value_t = 2000)]
        stages: u64,
        #[arg(long = "p2-budget", default_value_t = 5000)]
        p2_budget: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rosser (or plain) provability of a formula read off a trace.
    Rosser {
        #[arg(long)]
        trace: PathBuf,
        /// Use the plain predicate instead of the Rosser one.
        #[arg(long)]
        plain: bool,
        formula: String,
    },
    /// Builds and validates a conservation derivation.
    Conserve {
        #[arg(long, conflicts_with = "scenario")]
        gamma: Option<String>,
        #[arg(long = "phi")]
        phis: Vec<String>,
        #[arg(long, default_value = "Sigma1")]
        class: String,
        /// `Pr:T` style plain predicate or `PrR:T` Rosser predicate.
        #[arg(long, default_value = "Pr:T")]
        predicate: String,
        /// Theory certifying the hypothesis; by default the hypothesis is its only fact.
        #[arg(long)]
        theory: Option<String>,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints the brute-force reference computations.
    Oracle {
        #[arg(long, default_value_t = 5)]
        corpus_size: usize,
    },
}

/// A failure inside a well-formed command.
struct DomainError(String);

impl<E: std::fmt::Display> From<E> for DomainError {
    fn from(e: E) -> Self {
        DomainError(e.to_string())
    }
}

type CmdResult = Result<ExitCode, DomainError>;

fn formula(text: &str) -> Result<Formula, DomainError> {
    parse(text).map_err(|e| DomainError(format!("cannot parse `{text}`: {e}")))
}

fn load_theory(source: &str) -> Result<ToyTheory, DomainError> {
    if let Some(t) = ToyTheory::by_name(source) {
        return Ok(t);
    }
    let text = fs::read_to_string(source).map_err(|e| DomainError(format!("cannot read theory `{source}`: {e}")))?;
    let name = PathBuf::from(source).file_stem().map_or("custom".to_string(), |s| s.to_string_lossy().into_owned());
    Ok(ToyTheory::parse_file(&name, &text)?)
}

fn load_trace(path: &PathBuf) -> Result<MachineTrace, DomainError> {
    let text = fs::read_to_string(path).map_err(|e| DomainError(format!("cannot read trace {}: {e}", path.display())))?;
    Ok(MachineTrace::from_jsonl(&text)?)
}

fn parse_predicate(s: &str) -> Result<Predicate, DomainError> {
    let (kind, machine) = s.split_once(':').ok_or_else(|| DomainError(format!("bad predicate `{s}`")))?;
    let m: MachineId = machine.parse().map_err(DomainError)?;
    match kind {
        "Pr" => Ok(Predicate::Plain(m)),
        "PrR" => Ok(Predicate::Rosser(m)),
        _ => Err(DomainError(format!("bad predicate `{s}` (Pr:M or PrR:M)"))),
    }
}

fn cmd_classify(text: &str, max_level: u32) -> CmdResult {
    let phi = formula(text)?;
    let m = classify(&phi, max_level);
    let minimal = m.minimal_classes();
    if minimal.is_empty() {
        emitln!("none");
        return Ok(ExitCode::SUCCESS);
    }
    let names = |cs: &[HierarchyClass]| cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
    let mut rest: Vec<HierarchyClass> = m.classes.iter().copied().filter(|c| !minimal.contains(c)).collect();
    rest.sort_by_key(|c| (c.level, !c.is_sigma()));
    if minimal == [HierarchyClass::sigma(0)] {
        rest.retain(|c| *c != HierarchyClass::pi(0));
    }
    emitln!("{} (minimal); {}", names(&minimal), names(&rest));
    Ok(ExitCode::SUCCESS)
}

fn render_prop(p: &PropFormula, atoms: &[Formula]) -> String {
    match p {
        PropFormula::Atom(a) => format!("p{}", atoms.iter().position(|x| x == a.as_ref()).expect("collected")),
        PropFormula::Not(a) => format!("!{}", render_prop(a, atoms)),
        PropFormula::And(a, b) => format!("({} & {})", render_prop(a, atoms), render_prop(b, atoms)),
        PropFormula::Or(a, b) => format!("({} | {})", render_prop(a, atoms), render_prop(b, atoms)),
        PropFormula::Imp(a, b) => format!("({} -> {})", render_prop(a, atoms), render_prop(b, atoms)),
    }
}

fn cmd_skeleton(text: &str) -> CmdResult {
    let sk = skeleton(&formula(text)?);
    let atoms = atoms_of(std::slice::from_ref(&sk));
    emitln!("{}", render_prop(&sk, &atoms));
    for (i, a) in atoms.iter().enumerate() {
        emitln!("p{i} := {}", print(a));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_tc(assume: &[String], text: &str) -> CmdResult {
    let premises = assume.iter().map(|s| formula(s)).collect::<Result<Vec<_>, _>>()?;
    emitln!("{}", tc(&premises, &formula(text)?)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(text: &str, bound: u64, trace: Option<&PathBuf>, machine: Option<&str>) -> CmdResult {
    let phi = formula(text)?;
    let truth = match (trace, machine) {
        (Some(path), Some(m)) => {
            let t = load_trace(path)?;
            let id: MachineId = m.parse().map_err(DomainError)?;
            let list: &dyn OutputOracle = t.output_list();
            eval_bounded(&phi, bound, Some((id, list)))
        }
        _ => eval_bounded(&phi, bound, None),
    };
    emitln!("{truth}");
    Ok(ExitCode::SUCCESS)
}

fn show_fixed_point(n: &provbench::Name) -> Result<(), DomainError> {
    let class = diagonal::declared_class(n).ok_or_else(|| DomainError(format!("`{}` is not registered", n.as_str())))?;
    emitln!("{} : {} := {}", n.as_str(), class, print(&diagonal::expand(n)?));
    Ok(())
}

fn cmd_diag_templates(path: &PathBuf) -> CmdResult {
    let text = fs::read_to_string(path).map_err(|e| DomainError(format!("cannot read {}: {e}", path.display())))?;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| DomainError(format!("line {}: {what}", idx + 1));
        let mut parts = line.splitn(4, char::is_whitespace);
        let (Some(name), Some(class), Some(var), Some(body)) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad("expected `NAME CLASS xK BODY`"));
        };
        let class: HierarchyClass = class.parse().map_err(|e: provbench::hierarchy::ParseClassError| bad(&e.to_string()))?;
        let var: u32 = var.strip_prefix('x').and_then(|v| v.parse().ok()).ok_or_else(|| bad("hole must be a variable like x1"))?;
        let body = parse(body.trim()).map_err(|e| bad(&e.to_string()))?;
        let sentence = diagonal::fixed_point(&diagonal::Template::hole(var, body), name, class)?;
        if let Formula::Named(n) = &sentence {
            show_fixed_point(n)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_diag(name: Option<&str>, template: Option<&PathBuf>) -> CmdResult {
    if let Some(path) = template {
        return cmd_diag_templates(path);
    }
    let names = diagonal::registered_names();
    for n in names {
        if name.is_some_and(|wanted| wanted != n.as_str()) {
            continue;
        }
        show_fixed_point(&n)?;
    }
    if let Some(wanted) = name {
        if !diagonal::registered_names().iter().any(|n| n.as_str() == wanted) {
            return Err(DomainError(format!("no fixed point named `{wanted}`")));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(machine: &str, theory: &str, stages: u64, p2_budget: u64, out: &PathBuf) -> CmdResult {
    let kind = MachineKind::parse(machine).map_err(DomainError)?;
    let trace = run(kind, load_theory(theory)?, stages, p2_budget)?;
    fs::write(out, trace.to_jsonl())?;
    match trace.bell_stage() {
        Some(b) => emitln!("bell: {b}; records: {}; outputs: {}", trace.records.len(), trace.outputs().len()),
        None => emitln!("bell: none; records: {}; outputs: {}", trace.records.len(), trace.outputs().len()),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_rosser(trace: &PathBuf, plain: bool, text: &str) -> CmdResult {
    let t = load_trace(trace)?;
    let phi = formula(text)?;
    emitln!("{}", if plain { t.pr(&phi) } else { t.rosser(&phi) });
    Ok(ExitCode::SUCCESS)
}

fn emit_derivation(d: &Derivation, out: Option<&PathBuf>) -> CmdResult {
    let text = d.to_jsonl();
    match out {
        Some(path) => fs::write(path, &text)?,
        None => emit!("{text}"),
    }
    match check_chain(d) {
        Ok(()) => {
            emitln!("verdict: valid ({} steps)", d.steps.len());
            Ok(ExitCode::SUCCESS)
        }
        Err(f) => {
            emitln!("verdict: invalid at step {}: {}", f.index, f.reason);
            Ok(ExitCode::from(1))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_conserve(
    gamma: Option<&str>,
    phis: &[String],
    class: &str,
    predicate: &str,
    theory: Option<&str>,
    scenario: Option<&str>,
    out: Option<&PathBuf>,
) -> CmdResult {
    if let Some(name) = scenario {
        let s: Scenario = name.parse().map_err(DomainError)?;
        return emit_derivation(&scripted_scenario(s)?, out);
    }
    let gamma = formula(gamma.ok_or_else(|| DomainError("either --gamma or --scenario is required".into()))?)?;
    let phis = phis.iter().map(|s| formula(s)).collect::<Result<Vec<_>, _>>()?;
    let gate: ClassGate = class.parse().map_err(DomainError)?;
    let predicate = parse_predicate(predicate)?;
    let theory = match theory {
        Some(source) => load_theory(source)?,
        None => {
            let h = conservation_hypothesis(predicate, &phis, &gamma);
            ToyTheory::new(TheoryId::Custom("hypothesis".into()), vec![], vec![h], Default::default())?
        }
    };
    let d = conserve_chain(&gamma, &phis, gate, predicate, Prover { theory, bound: 64 })?;
    emit_derivation(&d, out)
}

fn cmd_oracle(corpus_size: usize) -> CmdResult {
    let corpus = oracle::Corpus::up_to_size(corpus_size);
    let fix = oracle::HierarchyFixpoint::compute(&corpus, corpus_size as u32 + 1);
    let mismatches = oracle::hierarchy_mismatches(&corpus, &fix);
    emitln!("hierarchy corpus (size <= {corpus_size}): {} formulas, {} mismatches", corpus.len(), mismatches.len());
    for (name, theory) in [("sound", ToyTheory::sound()), ("incons", ToyTheory::incons()), ("unsound", ToyTheory::unsound())] {
        match oracle::first_bell_scan(&theory, 2000) {
            Some(m) => emitln!("first stage with 0=1 a t.c. ({name}): {m}"),
            None => emitln!("first stage with 0=1 a t.c. ({name}): none up to 2000"),
        }
    }
    for n in 1..=5 {
        for c in [HierarchyClass::sigma(n), HierarchyClass::pi(n)] {
            let a = provbench::hierarchy::alpha(c)?;
            emitln!("alpha {c}: {} valid-at-desk={}", print(&a), oracle::bounded_validity(&a, 3));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Classify { formula, max_level } => cmd_classify(&formula, max_level),
        Command::Skeleton { formula } => cmd_skeleton(&formula),
        Command::Tc { assume, formula } => cmd_tc(&assume, &formula),
        Command::Eval { formula, bound, trace, machine } => cmd_eval(&formula, bound, trace.as_ref(), machine.as_deref()),
        Command::Diag { name, template } => cmd_diag(name.as_deref(), template.as_ref()),
        Command::Run { machine, theory, stages, p2_budget, out } => cmd_run(&machine, &theory, stages, p2_budget, &out),
        Command::Rosser { trace, plain, formula } => cmd_rosser(&trace, plain, &formula),
        Command::Conserve { gamma, phis, class, predicate, theory, scenario, out } => cmd_conserve(
            gamma.as_deref(),
            &phis,
            &class,
            &predicate,
            theory.as_deref(),
            scenario.as_deref(),
            out.as_ref(),
        ),
        Command::Oracle { corpus_size } => cmd_oracle(corpus_size),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = diagonal::register_standard_families() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(DomainError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
