use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use lrp_core::calculus::{compare_empty_context, evaluate, OracleOutcome, Strategy};
use lrp_core::compile::{compile_expr, freshen, link, translate_psi};
use lrp_core::corpus::random_corpus;
use lrp_core::harness::{
    check_adequacy, emit_csv, emit_tikz, emit_trace_csv, named_experiment, run_experiment, HarnessError, EXPERIMENTS,
};
use lrp_core::machine::{run, GcMode, Outcome, RunConfig, RunResult, SpaceExclusion, DEFAULT_MAX_STEPS};
use lrp_core::parser::parse_definitions;
use lrp_core::prelude::load_prelude;
use lrp_core::syntax::{is_machine_expr, Binding, DataEnv};
use lrp_core::{parse_program, Expr};

#[derive(Parser, Debug)]
#[command(name = "lrp", version, about = "Run and measure programs of a lazy core language")]
struct Cli {
    /// Garbage collection: eager, every:N or never
    #[arg(long, global = true, default_value = "eager")]
    gc_mode: GcMode,
    /// Disable stack-chain removal
    #[arg(long, global = true)]
    no_screm: bool,
    /// Step bound for the machine and the calculus
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: u64,
    /// Trace destination, csv:PATH or tikz:PATH
    #[arg(long, global = true)]
    trace_out: Option<TraceOut>,
    /// Library file replacing the built-in one
    #[arg(long, global = true)]
    prelude: Option<PathBuf>,
    /// Seed for generated test corpora
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a program on the machine and print its measures
    Run { file: PathBuf },
    /// Print the compiled machine expression
    Compile { file: PathBuf },
    /// Record the size of every machine state
    Trace { file: PathBuf },
    /// Evaluate with the calculus and check agreement with the machine
    Oracle { file: PathBuf },
    /// Compare two programs in the empty context
    Compare { left: PathBuf, right: PathBuf },
    /// Run a named experiment (fold, reverse, fusion, append, adequacy)
    Bench {
        name: String,
        /// Input sizes, START..END:STEP or a comma-separated list
        #[arg(long)]
        k: Option<KRange>,
    },
}

#[derive(Clone, Debug)]
enum TraceOut {
    Csv(PathBuf),
    Tikz(PathBuf),
}

impl FromStr for TraceOut {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("csv", p)) if !p.is_empty() => Ok(TraceOut::Csv(p.into())),
            Some(("tikz", p)) if !p.is_empty() => Ok(TraceOut::Tikz(p.into())),
            _ => Err(format!("expected csv:PATH or tikz:PATH, got {s:?}")),
        }
    }
}

#[derive(Clone, Debug)]
struct KRange(Vec<usize>);

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected START..END:STEP or a list, got {s:?}");
        let ks: Vec<usize> = if let Some((a, rest)) = s.split_once("..") {
            let (b, step) = rest.split_once(':').unwrap_or((rest, "1"));
            let (a, b, step): (usize, usize, usize) =
                (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?, step.parse().map_err(|_| bad())?);
            if step == 0 {
                return Err(bad());
            }
            (a..=b).step_by(step).collect()
        } else {
            s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
        };
        if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad());
        }
        Ok(KRange(ks))
    }
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure { code: 1, message: message.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e)
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match e {
            HarnessError::Blackhole { .. } => 2,
            HarnessError::StepLimit { .. } => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = out.flush();
            eprintln!("lrp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn config(cli: &Cli) -> RunConfig {
    RunConfig {
        gc_mode: cli.gc_mode,
        screm_enabled: !cli.no_screm,
        max_steps: cli.max_steps,
        ..RunConfig::default()
    }
}

fn library(cli: &Cli) -> Result<Vec<Binding>, Failure> {
    match &cli.prelude {
        None => Ok(load_prelude().to_vec()),
        Some(path) => {
            let text = read(path)?;
            parse_definitions(&text, &DataEnv::builtin()).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// The closed source expression of a program file.
fn source(cli: &Cli, path: &Path) -> Result<Expr, Failure> {
    let text = read(path)?;
    let program = parse_program(&text).map_err(|e| Failure::input(format!("{}:{e}", path.display())))?;
    let linked = link(&program, &library(cli)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(freshen(&linked))
}

fn machine_run(e: &Expr, cfg: &RunConfig) -> Result<RunResult, Failure> {
    let r = run(e, cfg).map_err(Failure::input)?;
    match &r.outcome {
        Outcome::Final(_) => Ok(r),
        Outcome::Blackhole(x) => Err(Failure { code: 2, message: format!("black hole: {x} is demanded during its own evaluation") }),
        Outcome::StepLimit => Err(Failure { code: 3, message: format!("step limit of {} reached", cfg.max_steps) }),
    }
}

fn execute(cli: &Cli, out: &mut impl Write) -> CliResult {
    let cfg = config(cli);
    match &cli.command {
        Command::Run { file } => {
            let e = compile_expr(&source(cli, file)?);
            let r = machine_run(&e, &cfg)?;
            let m = r.measures;
            writeln!(out, "mln={} mlnall={} mspmax={} gc_runs={}", m.mln, m.mlnall, m.mspmax, m.gc_runs)?;
            if let Outcome::Final(st) = &r.outcome {
                writeln!(out, "result: {}", st.control())?;
            }
        }
        Command::Compile { file } => {
            writeln!(out, "{}", compile_expr(&source(cli, file)?))?;
        }
        Command::Trace { file } => {
            let e = compile_expr(&source(cli, file)?);
            let r = machine_run(&e, &cfg.with_trace())?;
            let trace = r.trace.unwrap_or_default();
            match &cli.trace_out {
                None => emit_trace_csv(&trace, out)?,
                Some(TraceOut::Csv(path)) => {
                    let mut f = io::BufWriter::new(fs::File::create(path)?);
                    emit_trace_csv(&trace, &mut f)?;
                    f.flush()?;
                    writeln!(out, "wrote {} records to {}", trace.len(), path.display())?;
                }
                Some(TraceOut::Tikz(path)) => {
                    fs::write(path, emit_tikz(&trace)?)?;
                    writeln!(out, "wrote {} points to {}", trace.len(), path.display())?;
                }
            }
        }
        Command::Oracle { file } => oracle(cli, &cfg, file, out)?,
        Command::Compare { left, right } => {
            let (a, b) = (source(cli, left)?, source(cli, right)?);
            let rep = compare_empty_context(&a, &b, cli.max_steps);
            let side = |m: &lrp_core::calculus::SideMeasures| {
                format!("converged={} rln={} rlnall={} spmax={}", m.converged, m.rln, m.rlnall, m.spmax)
            };
            writeln!(out, "left:  {}", side(&rep.left))?;
            writeln!(out, "right: {}", side(&rep.right))?;
            for (name, ord) in [("rln", rep.rln), ("rlnall", rep.rlnall), ("spmax", rep.spmax)] {
                let rel = match ord {
                    std::cmp::Ordering::Less => "<",
                    std::cmp::Ordering::Equal => "=",
                    std::cmp::Ordering::Greater => ">",
                };
                writeln!(out, "{name}: left {rel} right")?;
            }
            if rep.inconclusive {
                writeln!(out, "inconclusive: step limit reached")?;
            }
        }
        Command::Bench { name, k } => bench(cli, &cfg, name, k.as_ref().map(|r| r.0.clone()), out)?,
    }
    Ok(())
}

fn oracle(cli: &Cli, cfg: &RunConfig, file: &Path, out: &mut impl Write) -> CliResult {
    let s = source(cli, file)?;
    let o = evaluate(&s, Strategy::Lrpgc, cli.max_steps);
    match &o.outcome {
        OracleOutcome::Whnf(_) => {}
        OracleOutcome::Blackhole(x) => {
            return Err(Failure { code: 2, message: format!("black hole: {x} is demanded during its own evaluation") })
        }
        OracleOutcome::StepLimit => {
            return Err(Failure { code: 3, message: format!("step limit of {} reached", cli.max_steps) })
        }
        OracleOutcome::Stuck(msg) => return Err(Failure::input(format!("evaluation is stuck: {msg}"))),
    }
    writeln!(out, "rln={} rlnall={} spmax={}", o.rln, o.rlnall, o.spmax)?;
    let timed = machine_run(&translate_psi(&s), cfg)?;
    let time_ok = timed.measures.mln == o.rln;
    let space = if is_machine_expr(&s) {
        let direct = machine_run(&s, &cfg.with_gc(GcMode::Eager))?;
        Some(direct.measures.mspmax)
    } else {
        None
    };
    writeln!(
        out,
        "mln={} mlnall={} mspmax={}",
        timed.measures.mln,
        timed.measures.mlnall,
        space.map_or("n/a".to_string(), |m| m.to_string())
    )?;
    let verdict = match (time_ok, space) {
        (true, Some(m)) if m == o.spmax => "adequate: mln==rln, mspmax==spmax".to_string(),
        (true, None) => "adequate: mln==rln (space check skipped: not a machine expression)".to_string(),
        (t, sp) => {
            let mut parts = Vec::new();
            if !t {
                parts.push(format!("mln={} rln={}", timed.measures.mln, o.rln));
            }
            if let Some(m) = sp.filter(|&m| m != o.spmax) {
                parts.push(format!("mspmax={m} spmax={}", o.spmax));
            }
            format!("not adequate: {}", parts.join(", "))
        }
    };
    writeln!(out, "{verdict}")?;
    Ok(())
}

fn bench(cli: &Cli, cfg: &RunConfig, name: &str, ks: Option<Vec<usize>>, out: &mut impl Write) -> CliResult {
    if name == "adequacy" {
        return adequacy(cli, cfg, ks.and_then(|k| k.last().copied()).unwrap_or(500), out);
    }
    let specs = named_experiment(name, ks).map_err(|e| match e {
        HarnessError::UnknownExperiment(n) => {
            Failure::input(format!("unknown experiment {n:?}; expected one of {}, adequacy", EXPERIMENTS.join(", ")))
        }
        other => other.into(),
    })?;
    for (i, mut spec) in specs.into_iter().enumerate() {
        spec.config = RunConfig { gc_mode: spec.config.gc_mode, ..*cfg };
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "# {}", spec.name)?;
        let rows = run_experiment(&spec)?;
        emit_csv(&rows, out)?;
    }
    Ok(())
}

/// Machine against calculus on a generated corpus.
fn adequacy(cli: &Cli, cfg: &RunConfig, n: usize, out: &mut impl Write) -> CliResult {
    let widened = cfg.with_exclusion(SpaceExclusion::ConstructorsAndSeq);
    let (mut converged, mut time_bad, mut space_bad, mut widened_bad) = (0, 0, 0, 0);
    let check = |e: &Expr, c: &RunConfig| check_adequacy(e, c, 10_000).map_err(Failure::input);
    for e in random_corpus(cli.seed, n, 8) {
        let Some(a) = check(&e, cfg)? else { continue };
        converged += 1;
        time_bad += usize::from(!a.time_ok());
        let psi = translate_psi(&e);
        space_bad += usize::from(!check(&psi, cfg)?.is_some_and(|a| a.space_ok()));
        widened_bad += usize::from(!check(&psi, &widened)?.is_some_and(|a| a.space_ok()));
    }
    writeln!(out, "seed={} expressions={n} converged={converged}", cli.seed)?;
    writeln!(out, "time_mismatches={time_bad}")?;
    writeln!(out, "space_mismatches={space_bad}")?;
    writeln!(out, "space_mismatches_seq_excluded={widened_bad}")?;
    Ok(())
}
