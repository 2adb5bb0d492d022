//! One solver process per script, spoken to over stdin/stdout.
//!
//! The script ends in `(check-sat)`. On `sat` the driver asks for the
//! values of the VC's symbols with `get-value`, vector lengths first and
//! then their elements; on `unknown` it asks for the reason.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdout, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::encode::{old_symbol, var_symbol};
use super::sexp::{parse_all, Sexp};
use crate::model::{SemType, Value};

/// Vectors longer than this are reported by length only.
const MAX_DECODED_LEN: i64 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Program and arguments; the script is written to its stdin.
    pub command: Vec<String>,
    pub timeout_ms: u64,
    pub logic: String,
    pub seed: Option<u64>,
    pub workers: usize,
}

pub const DEFAULT_SOLVER: &str = "z3 -in -smt2";

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: DEFAULT_SOLVER
                .split_whitespace()
                .map(String::from)
                .collect(),
            timeout_ms: 60_000,
            logic: "AUFLIA".into(),
            seed: None,
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

impl SolverConfig {
    /// Splits a shell-style command line such as `z3 -in -smt2`.
    pub fn with_command_line(mut self, line: &str) -> Result<Self, String> {
        let words =
            shell_words::split(line).map_err(|e| format!("bad solver command `{line}`: {e}"))?;
        if words.is_empty() {
            return Err("empty solver command".into());
        }
        self.command = words;
        Ok(self)
    }
}

/// Values the solver assigned to the VC's symbols. Entry values are keyed
/// by the variable they belong to.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Model {
    pub vars: BTreeMap<String, Value>,
    pub olds: BTreeMap<String, Value>,
    /// Parts that could not be turned into values, verbatim.
    pub undecoded: Vec<String>,
}

impl Model {
    pub fn is_total(
        &self,
        symbols: &BTreeMap<String, SemType>,
        olds: &BTreeMap<String, SemType>,
    ) -> bool {
        symbols.keys().all(|k| self.vars.contains_key(k))
            && olds.keys().all(|k| self.olds.contains_key(k))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Proved,
    Refuted(Model),
    Unknown(String),
    SolverError(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Proved => "proved",
            Outcome::Refuted(_) => "refuted",
            Outcome::Unknown(_) => "unknown",
            Outcome::SolverError(_) => "error",
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, Outcome::Proved)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub millis: u64,
}

/// The symbols whose values are wanted on `sat`.
#[derive(Clone, Debug, Default)]
pub struct Query<'a> {
    pub symbols: Option<&'a BTreeMap<String, SemType>>,
    pub olds: Option<&'a BTreeMap<String, SemType>>,
}

struct Session {
    out: BufReader<ChildStdout>,
    stdin: std::process::ChildStdin,
}

impl Session {
    fn send(&mut self, text: &str) -> std::io::Result<()> {
        self.stdin.write_all(text.as_bytes())?;
        self.stdin.flush()
    }

    /// Next complete response. `None` at end of output.
    fn response(&mut self) -> Result<Option<Sexp>, String> {
        let mut buf = String::new();
        loop {
            let mut line = String::new();
            let n = self.out.read_line(&mut line).map_err(|e| e.to_string())?;
            if n == 0 {
                return if buf.trim().is_empty() {
                    Ok(None)
                } else {
                    Err(format!("truncated output: {buf}"))
                };
            }
            buf.push_str(&line);
            if let Ok(mut items) = parse_all(&buf) {
                match items.len() {
                    0 => buf.clear(),
                    1 => return Ok(items.pop()),
                    _ => return Err(format!("unexpected output: {}", buf.trim())),
                }
            }
        }
    }
}

fn is_error(s: &Sexp) -> Option<String> {
    match s.list()? {
        [Sexp::Atom(e), msg] if e == "error" => Some(msg.to_string().trim_matches('"').to_string()),
        _ => None,
    }
}

fn converse(mut s: Session, script: &str, q: &Query) -> Outcome {
    if let Err(e) = s.send(script) {
        return Outcome::SolverError(format!("cannot write script: {e}"));
    }
    let mut errors = Vec::new();
    let verdict = loop {
        match s.response() {
            Ok(Some(r)) => {
                if let Some(e) = is_error(&r) {
                    errors.push(e);
                    continue;
                }
                match r.atom() {
                    Some(v @ ("sat" | "unsat" | "unknown")) => break v.to_string(),
                    _ => errors.push(format!("unexpected response `{r}`")),
                }
            }
            Ok(None) => {
                let detail = if errors.is_empty() {
                    "solver exited without a verdict".into()
                } else {
                    errors.join("; ")
                };
                return Outcome::SolverError(detail);
            }
            Err(e) => return Outcome::SolverError(e),
        }
    };
    if !errors.is_empty() {
        return Outcome::SolverError(errors.join("; "));
    }
    let outcome = match verdict.as_str() {
        "unsat" => Outcome::Proved,
        "unknown" => {
            let reason = ask(&mut s, "(get-info :reason-unknown)\n")
                .and_then(|r| {
                    r.list()
                        .and_then(|l| l.get(1))
                        .map(|x| x.to_string().trim_matches('"').to_string())
                })
                .unwrap_or_else(|| "unknown".into());
            Outcome::Unknown(reason)
        }
        _ => Outcome::Refuted(decode_model(&mut s, q)),
    };
    let _ = s.send("(exit)\n");
    outcome
}

fn ask(s: &mut Session, cmd: &str) -> Option<Sexp> {
    s.send(cmd).ok()?;
    s.response()
        .ok()
        .flatten()
        .filter(|r| is_error(r).is_none())
}

fn decode_model(s: &mut Session, q: &Query) -> Model {
    let mut m = Model::default();
    let mut entries: Vec<(bool, &str, SemType)> = Vec::new();
    for (old, syms) in [(false, q.symbols), (true, q.olds)] {
        for (x, t) in syms.into_iter().flatten() {
            entries.push((old, x, *t));
        }
    }
    if entries.is_empty() {
        return m;
    }
    let term = |old: bool, x: &str| if old { old_symbol(x) } else { var_symbol(x) };
    let first: Vec<String> = entries
        .iter()
        .map(|&(old, x, t)| {
            if t == SemType::Vector {
                format!("(len {})", term(old, x))
            } else {
                term(old, x)
            }
        })
        .collect();
    let Some(resp) = ask(s, &format!("(get-value ({}))\n", first.join(" "))) else {
        m.undecoded.push("get-value failed".into());
        return m;
    };
    let values: Vec<Sexp> = resp
        .list()
        .unwrap_or_default()
        .iter()
        .filter_map(|p| p.list().and_then(|l| l.get(1)).cloned())
        .collect();
    let mut vectors = Vec::new();
    for (&(old, x, t), v) in entries.iter().zip(&values) {
        let slot = if old { &mut m.olds } else { &mut m.vars };
        let decoded = match t {
            SemType::Bool => v.as_bool().map(Value::Bool),
            SemType::Vector => match v.as_int() {
                Some(n) if (0..=MAX_DECODED_LEN).contains(&n) => {
                    vectors.push((old, x, n));
                    None
                }
                _ => {
                    m.undecoded.push(format!(
                        "len({}) = {v}",
                        if old { format!("{x}_0") } else { x.to_string() }
                    ));
                    None
                }
            },
            _ => v.as_int().map(Value::Int),
        };
        match decoded {
            Some(d) => {
                slot.insert(x.to_string(), d);
            }
            None if t != SemType::Vector => m.undecoded.push(format!("{x} = {v}")),
            None => {}
        }
    }
    let elems: Vec<String> = vectors
        .iter()
        .flat_map(|&(old, x, n)| (0..n).map(move |i| format!("(elem {} {i})", term(old, x))))
        .collect();
    let elem_values: Vec<Option<i64>> = if elems.is_empty() {
        Vec::new()
    } else {
        match ask(s, &format!("(get-value ({}))\n", elems.join(" "))) {
            Some(r) => r
                .list()
                .unwrap_or_default()
                .iter()
                .map(|p| p.list().and_then(|l| l.get(1)).and_then(Sexp::as_int))
                .collect(),
            None => vec![None; elems.len()],
        }
    };
    let mut it = elem_values.into_iter();
    for (old, x, n) in vectors {
        let xs: Option<Vec<i64>> = (0..n).map(|_| it.next().flatten()).collect();
        match xs {
            Some(xs) => {
                let slot = if old { &mut m.olds } else { &mut m.vars };
                slot.insert(x.to_string(), Value::Vector(xs));
            }
            None => m.undecoded.push(format!("elements of {x}")),
        }
    }
    m
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

/// Runs the solver on one script.
pub fn run_solver(script: &str, query: &Query, config: &SolverConfig) -> Verdict {
    let start = Instant::now();
    let outcome = run_inner(script, query, config);
    Verdict {
        outcome,
        millis: start.elapsed().as_millis() as u64,
    }
}

fn run_inner(script: &str, query: &Query, config: &SolverConfig) -> Outcome {
    let Some((prog, args)) = config.command.split_first() else {
        return Outcome::SolverError("empty solver command".into());
    };
    let mut child = match Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return Outcome::SolverError(format!("cannot start `{prog}`: {e}")),
    };
    let (Some(stdin), Some(stdout)) = (child.stdin.take(), child.stdout.take()) else {
        kill(&mut child);
        return Outcome::SolverError("solver pipes unavailable".into());
    };
    let session = Session {
        out: BufReader::new(stdout),
        stdin,
    };
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        scope.spawn(|| {
            let _ = tx.send(converse(session, script, query));
        });
        match rx.recv_timeout(Duration::from_millis(config.timeout_ms)) {
            Ok(o) => {
                let status = child.wait();
                match (&o, status) {
                    (Outcome::SolverError(d), Ok(st)) if !st.success() => {
                        let mut err = String::new();
                        if let Some(mut e) = child.stderr.take() {
                            let _ = std::io::Read::read_to_string(&mut e, &mut err);
                        }
                        let err = err.trim();
                        Outcome::SolverError(if err.is_empty() {
                            format!("{d} ({st})")
                        } else {
                            format!("{d}: {err}")
                        })
                    }
                    _ => o,
                }
            }
            Err(_) => {
                // Killing the process closes its stdout, which ends the session thread.
                kill(&mut child);
                Outcome::Unknown("timeout".into())
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(script_body: &str) -> SolverConfig {
        // A stand-in solver: ignores its input and prints canned responses.
        let cfg = SolverConfig {
            timeout_ms: 5_000,
            ..SolverConfig::default()
        };
        SolverConfig {
            command: vec!["sh".into(), "-c".into(), script_body.into()],
            ..cfg
        }
    }

    #[test]
    fn unsat_is_proved() {
        let v = run_solver(
            "(check-sat)\n",
            &Query::default(),
            &fake("cat >/dev/null & echo unsat"),
        );
        assert_eq!(v.outcome, Outcome::Proved);
    }

    #[test]
    fn missing_executable_is_a_solver_error() {
        let cfg = SolverConfig {
            command: vec!["/nonexistent/solver".into()],
            ..SolverConfig::default()
        };
        assert!(matches!(
            run_solver("", &Query::default(), &cfg).outcome,
            Outcome::SolverError(_)
        ));
    }

    #[test]
    fn timeout_kills_the_process() {
        let cfg = SolverConfig {
            timeout_ms: 200,
            ..fake("exec sleep 30")
        };
        let v = run_solver("(check-sat)\n", &Query::default(), &cfg);
        assert_eq!(v.outcome, Outcome::Unknown("timeout".into()));
        assert!(v.millis < 5_000);
    }

    #[test]
    fn exit_without_verdict_is_an_error() {
        let v = run_solver(
            "(check-sat)\n",
            &Query::default(),
            &fake("read x; echo oops >&2; exit 3"),
        );
        match v.outcome {
            Outcome::SolverError(d) => assert!(d.contains("oops"), "{d}"),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn sat_decodes_scalar_and_vector_values() {
        let responses = "read x; echo sat; read x; echo '((v.k 2) ((len v.a) 2))'; read x; echo '(((elem v.a 0) (- 1)) ((elem v.a 1) 5))'";
        let mut syms = BTreeMap::new();
        syms.insert("k".to_string(), SemType::Nat);
        syms.insert("a".to_string(), SemType::Vector);
        let q = Query {
            symbols: Some(&syms),
            olds: None,
        };
        let v = run_solver("(check-sat)\n", &q, &fake(responses));
        let Outcome::Refuted(m) = v.outcome else {
            panic!("{:?}", v.outcome)
        };
        assert_eq!(m.vars["k"], Value::Int(2));
        assert_eq!(m.vars["a"], Value::Vector(vec![-1, 5]));
        assert!(m.is_total(&syms, &BTreeMap::new()));
    }

    #[test]
    fn errors_before_the_verdict_are_reported() {
        let v = run_solver(
            "x\n",
            &Query::default(),
            &fake("read x; echo '(error \"unknown constant\")'; echo unsat"),
        );
        assert_eq!(v.outcome, Outcome::SolverError("unknown constant".into()));
    }
}
