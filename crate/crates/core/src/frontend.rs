//! Loading a program file together with the theories it imports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{analyze, Analysis};
use crate::diag::{has_errors, Diagnostic};
use crate::model::VerificationContext;
use crate::parser::{parse_context, parse_theory};
use crate::prelude::{load_theory, TheoryEnv};

/// A parsed, type checked and analysed context.
#[derive(Clone, Debug)]
pub struct Program {
    pub ctx: VerificationContext,
    pub env: TheoryEnv,
    pub analysis: Analysis,
}

impl Program {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.analysis.diagnostics
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}", render(.0))]
    Invalid(Vec<Diagnostic>),
}

impl LoadError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            LoadError::Io { .. } => &[],
            LoadError::Invalid(d) => d,
        }
    }
}

fn render(diags: &[Diagnostic]) -> String {
    let mut s = String::new();
    for (i, d) in diags.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = write!(s, "{d}");
    }
    s
}

pub fn load_file(path: impl AsRef<Path>) -> Result<Program, LoadError> {
    let path = path.as_ref();
    let text = read(path)?;
    load_source(&text, &path.display().to_string(), path.parent())
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `text` as a context. Each `import x` is looked up as `x.ibt` in
/// `dir`; `sorting` falls back to the built-in copy when no file is found.
pub fn load_source(text: &str, file: &str, dir: Option<&Path>) -> Result<Program, LoadError> {
    let mut ctx = parse_context(text, file).map_err(LoadError::Invalid)?;
    let mut files = Vec::new();
    let mut diags = Vec::new();
    for (name, span) in &ctx.imports {
        let candidate = dir.unwrap_or(Path::new(".")).join(format!("{name}.ibt"));
        if candidate.is_file() {
            let t = read(&candidate)?;
            match parse_theory(&t, &candidate.display().to_string()) {
                Ok(f) if f.name == *name => files.push(f),
                Ok(f) => diags.push(Diagnostic::error(
                    "RESOLVE020",
                    format!(
                        "`{}` defines theory `{}`, not `{name}`",
                        candidate.display(),
                        f.name
                    ),
                    span.clone(),
                )),
                Err(d) => diags.push(d),
            }
        } else if name != "sorting" {
            diags.push(Diagnostic::error(
                "RESOLVE021",
                format!("no theory file for import `{name}`"),
                span.clone(),
            ));
        }
    }
    if has_errors(&diags) {
        return Err(LoadError::Invalid(diags));
    }
    let mut env = load_theory(files, &ctx.strategy).map_err(LoadError::Invalid)?;
    let analysis = analyze(&mut ctx, &mut env);
    if analysis.has_errors() {
        return Err(LoadError::Invalid(analysis.diagnostics));
    }
    Ok(Program { ctx, env, analysis })
}
