use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cscoop::bench::{parse_binding, set_params};
use cscoop::compiler::{lower_program, program_to_dot, CompileOptions, Program};
use cscoop::explorer::{
    explore, run_single, Checks, ExploreError, ExploreOptions, RunOptions, RunOutcome, Verdict, ViolationKind,
};
use cscoop::export::{space_to_dot, to_gxl};
use cscoop::frontend::pretty::pretty;
use cscoop::frontend::{analyze, parse_units, SourceUnit};
use cscoop::semantics::{initial_state, Discipline, SemanticsOptions};

const SAFE: u8 = 0;
const VIOLATION: u8 = 1;
const USAGE: u8 = 2;
const EXHAUSTED: u8 = 3;

#[derive(Parser)]
#[command(name = "cscoop", version, about = "Model checker for SCOOP programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore the state space and report deadlocks and other errors.
    Check(CheckArgs),
    /// Execute one pseudo-random run.
    Run(RunArgs),
    /// Print the parsed program or its control-flow graphs.
    Dump(DumpArgs),
}

#[derive(Args)]
struct Input {
    /// Source files; classes may be spread over several files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Replace the literal tagged `-- @param NAME` (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_binding)]
    params: Vec<(String, i64)>,
}

#[derive(Args)]
struct Semantics {
    /// Comma-separated detectors: deadlock, stuck, void-call, postcondition, runtime.
    #[arg(long, value_parser = Checks::parse, default_value = "deadlock,stuck,void-call,postcondition,runtime")]
    checks: Checks,
    /// Queue discipline; `bag` lets any queued request be served next.
    #[arg(long = "queue", value_enum, default_value_t = Queue::Fifo)]
    queue: Queue,
    /// Remove unreachable idle processors after every step.
    #[arg(long)]
    gc: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Queue {
    Fifo,
    Bag,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    semantics: Semantics,
    /// Stop at the first violating state.
    #[arg(long)]
    first: bool,
    /// Maximum exploration depth in steps.
    #[arg(long, value_name = "N")]
    bound: Option<usize>,
    /// Give up after storing this many states.
    #[arg(long, value_name = "N")]
    max_states: Option<usize>,
    /// Write the state space as DOT.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Write the violating (or else the initial) configuration as GXL.
    #[arg(long, value_name = "PATH")]
    gxl: Option<PathBuf>,
    /// Counterexample trace file [default: <input stem>.trace].
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Print exploration statistics.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    semantics: Semantics,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "N", default_value_t = 100_000)]
    max_steps: usize,
    /// Write the trace here instead of standard output.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Write the last configuration as GXL.
    #[arg(long, value_name = "PATH")]
    gxl: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    input: Input,
    /// Print the syntax tree instead of the control-flow graphs.
    #[arg(long)]
    ast: bool,
    /// Write the control-flow graphs as DOT to this file.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Write the initial configuration as GXL.
    #[arg(long, value_name = "PATH")]
    gxl: Option<PathBuf>,
}

/// An error with its exit code.
struct Failure(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(USAGE, e.into())
    }
}

fn read_units(input: &Input) -> Result<Vec<SourceUnit>, Failure> {
    let mut units = Vec::new();
    let mut unused: Vec<&str> = input.params.iter().map(|(n, _)| n.as_str()).collect();
    for path in &input.files {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let bindings: Vec<(&str, i64)> = input
            .params
            .iter()
            .filter(|(n, _)| text.contains(&format!("@param {n}")))
            .map(|(n, v)| (n.as_str(), *v))
            .collect();
        unused.retain(|n| !bindings.iter().any(|(b, _)| b == n));
        let text = set_params(&text, &bindings).map_err(|e| anyhow!("{}: {e}", path.display()))?;
        units.push(SourceUnit::new(path.display().to_string(), text));
    }
    if let Some(n) = unused.first() {
        return Err(anyhow!("no parameter named `{n}` in the input").into());
    }
    Ok(units)
}

fn compile(input: &Input, options: CompileOptions) -> Result<Program, Failure> {
    let typed = analyze(&read_units(input)?).map_err(|d| anyhow!("{d}"))?;
    Ok(lower_program(&typed, options))
}

fn semantics(s: &Semantics) -> SemanticsOptions {
    SemanticsOptions {
        discipline: match s.queue {
            Queue::Fifo => Discipline::Fifo,
            Queue::Bag => Discipline::Bag,
        },
        gc: s.gc,
    }
}

fn compile_options(checks: Checks) -> CompileOptions {
    CompileOptions {
        postconditions: checks.contains(ViolationKind::Postcondition),
    }
}

fn default_trace(files: &[PathBuf]) -> PathBuf {
    let stem = files[0]
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    PathBuf::from(format!("{stem}.trace"))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn check(args: CheckArgs) -> Result<u8, Failure> {
    let checks = args.semantics.checks;
    let p = compile(&args.input, compile_options(checks))?;
    let opts = ExploreOptions {
        checks,
        bound: args.bound,
        semantics: semantics(&args.semantics),
        stop_at_first: args.first,
        max_states: args.max_states,
    };
    let e = match explore(&p, opts) {
        Ok(e) => e,
        Err(ExploreError::StateLimit { limit, stats }) => {
            println!("verdict: state limit of {limit} exceeded");
            if args.stats {
                println!("{stats}");
            }
            return Ok(EXHAUSTED);
        }
        Err(e) => return Err(Failure(EXHAUSTED, e.into())),
    };
    println!("verdict: {}", e.verdict.name());
    if args.stats {
        println!("{}", e.space.stats);
        for kind in ViolationKind::ALL {
            let n = e
                .space
                .violating()
                .filter(|(_, s)| s.violations.iter().any(|v| v.kind == kind))
                .count();
            if n > 0 {
                println!("{kind} states: {n}");
            }
        }
    } else {
        println!("states: {}", e.space.stats.states);
        println!("transitions: {}", e.space.stats.transitions);
    }
    if let Some(path) = &args.dot {
        write(path, &space_to_dot(&p, &e.space))?;
    }
    let code = match &e.verdict {
        Verdict::Safe => SAFE,
        Verdict::BoundReached { .. } => EXHAUSTED,
        Verdict::CounterexampleFound { state, trace, .. } => {
            let detail = e.space.states[*state]
                .violations
                .iter()
                .map(|v| v.detail.as_str())
                .collect::<Vec<_>>();
            println!("detail: {}", detail.join("; "));
            let path = args.trace.clone().unwrap_or_else(|| default_trace(&args.input.files));
            write(&path, &trace.to_text())?;
            println!("trace: {} ({} steps)", path.display(), trace.events.len());
            VIOLATION
        }
    };
    if let Some(path) = &args.gxl {
        let c = match &e.verdict {
            Verdict::CounterexampleFound { state, .. } => &e.space.states[*state].config,
            _ => &e.space.states[0].config,
        };
        write(path, &to_gxl(&p, c))?;
    }
    Ok(code)
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let checks = args.semantics.checks;
    let p = compile(&args.input, compile_options(checks))?;
    let opts = RunOptions {
        semantics: semantics(&args.semantics),
        checks,
        max_steps: args.max_steps,
    };
    let (outcome, trace) = run_single(&p, args.seed, opts);
    match &args.trace {
        Some(path) => write(path, &trace.to_text())?,
        None => print!("{}", trace.to_text()),
    }
    if let Some(path) = &args.gxl {
        write(path, &to_gxl(&p, &trace.final_config))?;
    }
    Ok(match outcome {
        RunOutcome::Terminated => SAFE,
        RunOutcome::Violation(_) => VIOLATION,
        RunOutcome::StepLimit => EXHAUSTED,
    })
}

fn dump(args: DumpArgs) -> Result<u8, Failure> {
    if args.ast {
        let tree = parse_units(&read_units(&args.input)?).map_err(|d| anyhow!("{d}"))?;
        print!("{}", pretty(&tree));
        return Ok(SAFE);
    }
    let p = compile(&args.input, CompileOptions::default())?;
    let dot = program_to_dot(&p);
    match &args.dot {
        Some(path) => write(path, &dot)?,
        None if args.gxl.is_none() => print!("{dot}"),
        None => {}
    }
    if let Some(path) = &args.gxl {
        write(path, &to_gxl(&p, &initial_state(&p, SemanticsOptions::default())))?;
    }
    Ok(SAFE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => check(a),
        Command::Run(a) => run(a),
        Command::Dump(a) => dump(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
