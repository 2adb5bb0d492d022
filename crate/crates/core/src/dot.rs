//! Graphviz export of invariant diagrams.
//!
//! Situations are rounded boxes, with the precondition drawn bold and
//! postconditions with a double outline. A situation with nested situations
//! becomes a cluster; its own transitions attach to a small anchor node
//! inside the cluster. An implicit `true` precondition with nothing leaving
//! it is left out.

use std::fmt::Write as _;

use crate::model::{Procedure, SitId, SituationKind, VerificationContext};
use crate::vcgen::render_body;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn node_id(p: &Procedure, s: SitId) -> String {
    quote(&format!("{}.{}", p.name, p.situation(s).name))
}

fn label(p: &Procedure, s: SitId) -> String {
    let sit = p.situation(s);
    match &sit.variant {
        Some(v) => format!("{}\n|{v}|", sit.name),
        None => sit.name.clone(),
    }
}

fn style(kind: SituationKind) -> &'static str {
    match kind {
        SituationKind::Pre => "style=\"rounded,bold\"",
        SituationKind::Post => "style=rounded, peripheries=2",
        SituationKind::Intermediate => "style=rounded",
    }
}

/// The whole context as one digraph, one cluster per procedure.
pub fn to_dot(ctx: &VerificationContext) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&ctx.name));
    out.push_str("  compound=true;\n  node [shape=box, fontname=\"Helvetica\"];\n  edge [fontname=\"Helvetica\", fontsize=10];\n");
    for (pi, p) in ctx.procedures.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_p{pi} {{");
        let _ = writeln!(
            out,
            "    label={};\n    style=dashed;",
            quote(&format!("procedure {}", p.name))
        );
        for s in 0..p.situations.len() {
            let isolated_default =
                p.situation(s).implicit && !p.transitions.iter().any(|t| t.source == s);
            if p.situation(s).parent.is_none() && !isolated_default {
                write_situation(&mut out, p, s, 2);
            }
        }
        out.push_str("  }\n");
        for t in &p.transitions {
            let mut attrs = vec![format!(
                "label={}",
                quote(&format!(
                    "t{}#{} {}",
                    t.block,
                    t.branch,
                    render_body(&t.body)
                ))
            )];
            if !p.situation(t.source).children.is_empty() {
                attrs.push(format!("ltail={}", cluster_id(p, t.source)));
            }
            if !p.situation(t.target).children.is_empty() {
                attrs.push(format!("lhead={}", cluster_id(p, t.target)));
            }
            let _ = writeln!(
                out,
                "  {} -> {} [{}];",
                node_id(p, t.source),
                node_id(p, t.target),
                attrs.join(", ")
            );
        }
    }
    out.push_str("}\n");
    out
}

fn cluster_id(p: &Procedure, s: SitId) -> String {
    quote(&format!("cluster_{}.{}", p.name, p.situation(s).name))
}

fn write_situation(out: &mut String, p: &Procedure, s: SitId, depth: usize) {
    let pad = "  ".repeat(depth);
    let sit = p.situation(s);
    if sit.children.is_empty() {
        let _ = writeln!(
            out,
            "{pad}{} [label={}, {}];",
            node_id(p, s),
            quote(&label(p, s)),
            style(sit.kind)
        );
        return;
    }
    let _ = writeln!(out, "{pad}subgraph {} {{", cluster_id(p, s));
    let _ = writeln!(
        out,
        "{pad}  label={};\n{pad}  {};",
        quote(&label(p, s)),
        style(sit.kind)
    );
    let _ = writeln!(
        out,
        "{pad}  {} [shape=point, width=0.08, label=\"\"];",
        node_id(p, s)
    );
    for &c in &sit.children {
        write_situation(out, p, c, depth + 1);
    }
    let _ = writeln!(out, "{pad}}}");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_source;

    #[test]
    fn single_situation_has_no_edges() {
        let prog = load_source(
            "context c { procedure p(x: int) { post { x > 0 } } }",
            "c.ibp",
            None,
        )
        .unwrap();
        let dot = to_dot(&prog.ctx);
        assert_eq!(dot.matches("->").count(), 0);
        assert_eq!(dot.matches("[label=").count(), 1, "{dot}");
        assert!(
            dot.contains("\"p.Post\" [label=\"Post\", style=rounded, peripheries=2]"),
            "{dot}"
        );
    }

    #[test]
    fn labels_are_escaped() {
        assert_eq!(quote("a\"b\\c\nd"), "\"a\\\"b\\\\c\\nd\"");
    }
}
