//! Background theories: function definitions with opacity, lemmas with
//! trigger hints, and the environment that selects which lemmas the solver
//! sees.

use std::collections::BTreeSet;

use crate::diag::{Diagnostic, SourceSpan};
use crate::model::{Domain, Expr, SemType};
use crate::parser::{parse_theory, TheoryFile};

/// Definitions every context sees, independent of imports.
const CORE_THEORY: &str = "theory core {
  // Rounding down is already the meaning of `/`; `floor` only documents it.
  def floor(x: int): int = x;
}
";

/// The shipped sorting theory, also available as `corpus/sorting.ibt`.
pub const SORTING_THEORY: &str = include_str!("../../../../corpus/sorting.ibt");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FParam {
    pub name: String,
    pub domain: Domain,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<FParam>,
    pub result: SemType,
    /// Absent for uninterpreted symbols.
    pub body: Option<Expr>,
    /// Opaque definitions are never expanded for the solver.
    pub opaque: bool,
    /// Property of `result` that the solver may always assume.
    pub ensures: Option<Expr>,
    pub span: SourceSpan,
}

impl FuncDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Transparent with a quantifier-free body: expanded in place.
    pub fn is_macro(&self) -> bool {
        !self.opaque && self.body.as_ref().is_some_and(|b| !b.has_quantifier())
    }

    /// Transparent with a quantified body: a solver symbol plus a definitional axiom.
    pub fn is_axiomatized(&self) -> bool {
        !self.opaque && self.body.as_ref().is_some_and(Expr::has_quantifier)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma {
    pub name: String,
    pub params: Vec<FParam>,
    pub statement: Expr,
    /// Each entry is one multi-term pattern.
    pub triggers: Vec<Vec<Expr>>,
    pub span: SourceSpan,
}

/// Function symbols with a runtime meaning that is not given by a body.
pub fn has_native(name: &str, arity: usize) -> bool {
    matches!((name, arity), ("perm", 2))
}

#[derive(Clone, Debug, Default)]
pub struct TheoryEnv {
    pub funcs: Vec<FuncDef>,
    pub lemmas: Vec<Lemma>,
    /// Active lemma names, in strategy order.
    pub active: Vec<String>,
}

impl TheoryEnv {
    pub fn func(&self, name: &str, arity: usize) -> Option<&FuncDef> {
        self.funcs
            .iter()
            .find(|f| f.name == name && f.arity() == arity)
    }

    pub fn has_func_name(&self, name: &str) -> bool {
        self.funcs.iter().any(|f| f.name == name)
    }

    pub fn lemma(&self, name: &str) -> Option<&Lemma> {
        self.lemmas.iter().find(|l| l.name == name)
    }

    pub fn active_lemmas(&self) -> impl Iterator<Item = &Lemma> + '_ {
        self.active.iter().filter_map(|n| self.lemma(n))
    }

    /// Copy of the environment with a different active lemma list. Unknown
    /// names are ignored.
    pub fn with_active<I, S>(&self, names: I) -> TheoryEnv
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut env = self.clone();
        env.active = names
            .into_iter()
            .map(Into::into)
            .filter(|n| self.lemma(n).is_some())
            .collect();
        env
    }

    /// Every symbol name the environment declares.
    pub fn symbol_names(&self) -> BTreeSet<String> {
        self.funcs.iter().map(|f| f.name.clone()).collect()
    }

    fn merge(&mut self, th: TheoryFile) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for f in th.defs {
            if self.func(&f.name, f.arity()).is_some() {
                diags.push(Diagnostic::error(
                    "THEORY001",
                    format!(
                        "duplicate definition of `{}` with {} parameters",
                        f.name,
                        f.arity()
                    ),
                    f.span.clone(),
                ));
            } else {
                self.funcs.push(f);
            }
        }
        for l in th.lemmas {
            if self.lemma(&l.name).is_some() {
                diags.push(Diagnostic::error(
                    "THEORY001",
                    format!("duplicate lemma `{}`", l.name),
                    l.span.clone(),
                ));
            } else {
                self.lemmas.push(l);
            }
        }
        for (name, span) in th.opaque {
            let mut found = false;
            for f in self.funcs.iter_mut().filter(|f| f.name == name) {
                f.opaque = true;
                found = true;
            }
            if !found {
                diags.push(Diagnostic::error(
                    "THEORY002",
                    format!("`opaque` names unknown function `{name}`"),
                    span,
                ));
            }
        }
        diags
    }
}

fn parse_builtin(text: &str, file: &str) -> TheoryFile {
    parse_theory(text, file).unwrap_or_else(|d| panic!("built-in theory does not parse: {d}"))
}

/// Core definitions plus the sorting theory, with no lemma active.
pub fn builtin_theory() -> TheoryEnv {
    let mut env = TheoryEnv::default();
    for (text, file) in [(CORE_THEORY, "<core>"), (SORTING_THEORY, "<sorting>")] {
        let diags = env.merge(parse_builtin(text, file));
        assert!(diags.is_empty(), "built-in theories conflict: {diags:?}");
    }
    env
}

/// Builds the environment for a context. `files` are the parsed imported
/// theory files; the built-in sorting theory is included unless one of them
/// is itself named `sorting`.
pub fn load_theory(
    files: Vec<TheoryFile>,
    strategy: &[(String, SourceSpan)],
) -> Result<TheoryEnv, Vec<Diagnostic>> {
    let mut env = TheoryEnv::default();
    let mut diags = env.merge(parse_builtin(CORE_THEORY, "<core>"));
    if !files.iter().any(|f| f.name == "sorting") {
        diags.extend(env.merge(parse_builtin(SORTING_THEORY, "<sorting>")));
    }
    for f in files {
        diags.extend(env.merge(f));
    }
    for (name, span) in strategy {
        if env.lemma(name).is_none() {
            diags.push(Diagnostic::error(
                "THEORY003",
                format!("strategy names unknown lemma `{name}`"),
                span.clone(),
            ));
        } else if !env.active.contains(name) {
            env.active.push(name.clone());
        }
    }
    if crate::diag::has_errors(&diags) {
        Err(diags)
    } else {
        Ok(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExprKind;

    #[test]
    fn builtin_has_sorting_vocabulary() {
        let env = builtin_theory();
        for (f, n) in [
            ("eql", 4),
            ("sorted", 1),
            ("sorted", 2),
            ("partitioned", 2),
            ("perm", 2),
            ("swap", 3),
            ("l", 1),
            ("r", 1),
            ("heap", 3),
            ("heap", 2),
            ("floor", 1),
        ] {
            assert!(env.func(f, n).is_some(), "{f}/{n}");
        }
        for l in [
            "perm_len",
            "perm_ref",
            "perm_sym",
            "perm_trs",
            "swap_acc",
            "swap_perm",
            "heap_max",
            "perm_partitioned",
        ] {
            assert!(env.lemma(l).is_some(), "{l}");
        }
        assert!(env.active.is_empty());
    }

    #[test]
    fn opacity_classification() {
        let env = builtin_theory();
        assert!(env.func("swap", 3).unwrap().opaque);
        assert!(env.func("perm", 2).unwrap().body.is_none());
        assert!(env.func("l", 1).unwrap().is_macro());
        assert!(env.func("heap", 2).unwrap().is_macro());
        assert!(env.func("heap", 3).unwrap().is_axiomatized());
        assert!(env.func("eql", 4).unwrap().is_axiomatized());
    }

    #[test]
    fn child_index_functions() {
        let env = builtin_theory();
        let l = env.func("l", 1).unwrap().body.clone().unwrap();
        assert!(matches!(l.kind, ExprKind::Binary(..)));
        assert_eq!(l.to_string(), "2 * i + 1");
        assert_eq!(
            env.func("r", 1).unwrap().body.as_ref().unwrap().to_string(),
            "2 * i + 2"
        );
    }

    #[test]
    fn strategy_selects_active_lemmas_in_order() {
        let six = [
            "perm_len",
            "perm_ref",
            "perm_sym",
            "perm_trs",
            "swap_acc",
            "swap_perm",
        ];
        let strategy: Vec<_> = six
            .iter()
            .map(|s| (s.to_string(), SourceSpan::synthetic()))
            .collect();
        let env = load_theory(vec![], &strategy).unwrap();
        assert_eq!(env.active, six);
        assert_eq!(env.active_lemmas().count(), 6);
    }

    #[test]
    fn empty_imports_give_builtin_only() {
        let env = load_theory(vec![], &[]).unwrap();
        assert_eq!(env.funcs.len(), builtin_theory().funcs.len());
    }

    #[test]
    fn unknown_strategy_lemma_is_an_error() {
        let e = load_theory(vec![], &[("nope".into(), SourceSpan::synthetic())]).unwrap_err();
        assert_eq!(e[0].code, "THEORY003");
    }

    #[test]
    fn duplicate_definitions_are_rejected() {
        let extra = parse_theory("theory extra { def l(i: nat): nat = i; }", "x.ibt").unwrap();
        let e = load_theory(vec![extra], &[]).unwrap_err();
        assert_eq!(e[0].code, "THEORY001");
    }
}
