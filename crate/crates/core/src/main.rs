use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ibp::diag::{Diagnostic, Severity};
use ibp::frontend::{load_file, LoadError, Program};
use ibp::interp::{parse_store, Interpreter, Policy};
use ibp::smt::{
    check_all, dump_file_name, encode, Outcome, SolverConfig, Summary, Verdict, DEFAULT_SOLVER,
};
use ibp::vcgen::{generate_all, GenOptions, Vc};

const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ibp",
    version,
    about = "Verify and run invariant-based programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate every verification condition and discharge it with an SMT solver.
    Check(CheckArgs),
    /// Print verification conditions as sequents.
    Vcs(VcsArgs),
    /// Execute a procedure with runtime checking of all annotations.
    Run(RunArgs),
    /// Export the diagrams as Graphviz DOT.
    Dot { file: PathBuf },
}

#[derive(Args)]
struct GenFlags {
    /// Only this procedure.
    #[arg(long = "proc")]
    proc_name: Option<String>,
    /// Skip termination conditions.
    #[arg(long)]
    no_termination: bool,
    /// Skip liveness conditions.
    #[arg(long)]
    no_liveness: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Jsonl,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[command(flatten)]
    gen: GenFlags,
    /// Per-VC timeout in milliseconds.
    #[arg(long, default_value_t = 60_000)]
    timeout: u64,
    /// Solver command line; the script goes to its standard input.
    #[arg(long, env = "IBP_SOLVER", default_value = DEFAULT_SOLVER)]
    solver: String,
    /// Solver processes running at once.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write each script to DIR/<vc-id>.smt2.
    #[arg(long, value_name = "DIR")]
    dump_smt: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// Random seed passed to the solver.
    #[arg(long)]
    seed: Option<u64>,
    /// Include wall times in JSONL records.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct VcsArgs {
    file: PathBuf,
    #[command(flatten)]
    gen: GenFlags,
    /// Only VCs whose id is this or starts with `this/`.
    #[arg(long)]
    id: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    First,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Json,
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Procedure to run; may be omitted when there is only one.
    #[arg(long = "proc")]
    proc_name: Option<String>,
    /// Initial values, e.g. "a=[3,1,2]; n=3".
    #[arg(long, default_value = "")]
    input: String,
    #[arg(long, value_enum, default_value = "first")]
    policy: PolicyArg,
    /// Seed for the random policy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: TraceFormat,
    /// Maximum number of situation arrivals.
    #[arg(long)]
    max_steps: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    ExitCode::from(match cli.cmd {
        Cmd::Check(a) => cmd_check(a),
        Cmd::Vcs(a) => cmd_vcs(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Dot { file } => cmd_dot(&file),
    })
}

fn load(path: &Path) -> Result<Program, u8> {
    load_file(path).map_err(|e| {
        match &e {
            LoadError::Io { .. } => eprintln!("error: {e}"),
            LoadError::Invalid(diags) => print_diags(diags),
        }
        EXIT_ERROR
    })
}

fn print_diags(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn generate(prog: &Program, gen: &GenFlags) -> Result<Vec<Vc>, u8> {
    if let Some(p) = &gen.proc_name {
        if prog.ctx.procedure(p).is_none() {
            eprintln!("error: no procedure `{p}` in context `{}`", prog.ctx.name);
            return Err(EXIT_USAGE);
        }
    }
    let opts = GenOptions {
        liveness: !gen.no_liveness,
        termination: !gen.no_termination,
        ..GenOptions::default()
    };
    let mut vcs = generate_all(&prog.ctx, &prog.env, &prog.analysis, opts);
    if let Some(p) = &gen.proc_name {
        vcs.retain(|vc| &vc.procedure == p);
    }
    Ok(vcs)
}

/// Warnings for checks the user postponed.
fn postponed(prog: &Program, gen: &GenFlags) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (p, a) in prog.ctx.procedures.iter().zip(&prog.analysis.procs) {
        if gen.proc_name.as_ref().is_some_and(|n| n != &p.name) {
            continue;
        }
        if gen.no_termination && a.sccs.iter().any(|c| c.is_cyclic()) {
            let m = format!(
                "procedure `{}` may not be terminating: termination checks were skipped",
                p.name
            );
            out.push(Diagnostic::warning("TERM005", m, p.span.clone()));
        }
        if gen.no_liveness {
            let m = format!(
                "procedure `{}` may not be live: liveness checks were skipped",
                p.name
            );
            out.push(Diagnostic::warning("LIVE005", m, p.span.clone()));
        }
    }
    out
}

fn cmd_check(a: CheckArgs) -> u8 {
    let prog = match load(&a.file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let vcs = match generate(&prog, &a.gen) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let mut config = match SolverConfig::default().with_command_line(&a.solver) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    config.timeout_ms = a.timeout;
    config.seed = a.seed;
    if let Some(j) = a.jobs {
        config.workers = j.max(1);
    }
    let mut diags: Vec<Diagnostic> = prog.diagnostics().to_vec();
    diags.extend(postponed(&prog, &a.gen));
    match a.format {
        Format::Human => print_diags(&diags),
        Format::Jsonl => {
            for d in &diags {
                println!("{}", json!({ "type": "diagnostic", "diagnostic": d }));
            }
        }
    }
    if let Some(dir) = &a.dump_smt {
        if let Err(code) = dump_scripts(dir, &vcs, &prog, &config) {
            return code;
        }
    }

    let start = Instant::now();
    let verdicts = check_all(&vcs, &prog.env, &config, |_, vc, v| match a.format {
        Format::Human => print_human(vc, v),
        Format::Jsonl => println!("{}", vc_record(vc, v, a.timings)),
    });
    let s = Summary::of(&verdicts);
    let status = if s.errors > 0 {
        EXIT_ERROR
    } else if !s.all_proved() {
        EXIT_FAIL
    } else {
        EXIT_OK
    };
    match a.format {
        Format::Human => {
            let warnings = diags
                .iter()
                .filter(|d| d.severity == Severity::Warning)
                .count();
            println!(
                "{} VCs: {} proved, {} refuted, {} unknown, {} errors; {} warnings ({:.1} s)",
                verdicts.len(),
                s.proved,
                s.refuted,
                s.unknown,
                s.errors,
                warnings,
                start.elapsed().as_secs_f64()
            );
        }
        Format::Jsonl => {
            let label = ["ok", "unproved", "error"][status as usize];
            println!(
                "{}",
                json!({ "type": "summary", "proved": s.proved, "refuted": s.refuted,
                        "unknown": s.unknown, "errors": s.errors, "status": label })
            );
        }
    }
    status
}

fn dump_scripts(dir: &Path, vcs: &[Vc], prog: &Program, config: &SolverConfig) -> Result<(), u8> {
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return Err(EXIT_ERROR);
    }
    for vc in vcs {
        // Encoding failures show up again as solver errors in the report.
        let Ok(script) = encode(vc, &prog.env, &config.logic, config.seed) else {
            continue;
        };
        let path = dir.join(dump_file_name(&vc.id));
        if let Err(e) = std::fs::write(&path, script) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return Err(EXIT_ERROR);
        }
    }
    Ok(())
}

fn print_human(vc: &Vc, v: &Verdict) {
    match &v.outcome {
        Outcome::Proved => println!("proved    {}  ({} ms)", vc.id, v.millis),
        other => {
            let detail = match other {
                Outcome::Unknown(r) | Outcome::SolverError(r) => format!(" ({r})"),
                _ => String::new(),
            };
            println!(
                "{:<9} {}  ({} ms)",
                other.label().to_uppercase(),
                vc.id,
                v.millis
            );
            println!("          at {}: {}{detail}", vc.span, vc.goal);
            if let Outcome::Refuted(m) = other {
                let vals: Vec<String> = m
                    .vars
                    .iter()
                    .map(|(k, x)| format!("{k}={x}"))
                    .chain(m.olds.iter().map(|(k, x)| format!("{k}_0={x}")))
                    .collect();
                println!("          counterexample: {}", vals.join(" "));
            }
        }
    }
}

fn vc_record(vc: &Vc, v: &Verdict, timings: bool) -> serde_json::Value {
    let mut r = json!({
        "type": "vc",
        "id": vc.id,
        "kind": vc.kind.as_str(),
        "procedure": vc.procedure,
        "situation": vc.situation,
        "span": vc.span,
        "verdict": v.outcome.label(),
    });
    match &v.outcome {
        Outcome::Refuted(m) => r["model"] = json!(m),
        Outcome::Unknown(reason) | Outcome::SolverError(reason) => r["reason"] = json!(reason),
        Outcome::Proved => {}
    }
    if timings {
        r["millis"] = json!(v.millis);
    }
    r
}

fn cmd_vcs(a: VcsArgs) -> u8 {
    let prog = match load(&a.file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    print_diags(prog.diagnostics());
    let vcs = match generate(&prog, &a.gen) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let selected: Vec<&Vc> = vcs
        .iter()
        .filter(|vc| match &a.id {
            None => true,
            Some(id) => vc.id == *id || vc.id.starts_with(&format!("{id}/")),
        })
        .collect();
    if selected.is_empty() && a.id.is_some() {
        eprintln!("error: no VC matches `{}`", a.id.unwrap_or_default());
        return EXIT_USAGE;
    }
    for (i, vc) in selected.iter().enumerate() {
        if i > 0 {
            println!();
        }
        print!("{vc}");
    }
    EXIT_OK
}

fn cmd_run(a: RunArgs) -> u8 {
    let prog = match load(&a.file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let name = match (&a.proc_name, prog.ctx.procedures.as_slice()) {
        (Some(n), _) => n.clone(),
        (None, [p]) => p.name.clone(),
        (None, _) => {
            eprintln!("error: the context has several procedures; choose one with --proc");
            return EXIT_USAGE;
        }
    };
    let inputs = match parse_store(&a.input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: --input: {e}");
            return EXIT_USAGE;
        }
    };
    let policy = match a.policy {
        PolicyArg::First => Policy::FirstEnabled,
        PolicyArg::Random => Policy::Random(a.seed),
    };
    let mut interp = Interpreter::new(&prog.ctx, &prog.env, &prog.analysis);
    if let Some(m) = a.max_steps {
        interp.limits.max_steps = m;
    }
    let trace = match interp.run(&name, &inputs, policy) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match a.format {
        TraceFormat::Text => print!("{trace}"),
        TraceFormat::Json => println!("{}", trace.to_json()),
    }
    if trace.outcome.is_ok() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn cmd_dot(file: &Path) -> u8 {
    match load(file) {
        Ok(prog) => {
            print!("{}", ibp::dot::to_dot(&prog.ctx));
            EXIT_OK
        }
        Err(code) => code,
    }
}
