use std::collections::BTreeSet;
use std::fmt::Write;

use epik_core::frontend::ast::{AgentId, SystemSpec};
use epik_core::model::StructuredModel;
use epik_core::valuation::VarId;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT text for the dag of `sm`. The vertices `agent` observes are drawn
/// inside a labeled cluster and those in `highlight` in bold.
pub fn render(
    spec: &SystemSpec,
    sm: &StructuredModel,
    agent: Option<AgentId>,
    highlight: &BTreeSet<VarId>,
) -> String {
    let mut out = String::from("digraph dependencies {\n  rankdir=TB;\n  node [shape=ellipse];\n");
    let node = |v: VarId| quote(sm.table.name(v));
    let style = |v: VarId| {
        if highlight.contains(&v) {
            " [style=bold]"
        } else {
            ""
        }
    };
    let observed: BTreeSet<VarId> = agent
        .map(|i| {
            sm.observables[i]
                .iter()
                .copied()
                .filter(|&v| sm.dag.contains(v))
                .collect()
        })
        .unwrap_or_default();
    if let Some(i) = agent.filter(|_| !observed.is_empty()) {
        let _ = writeln!(out, "  subgraph cluster_observed {{");
        let _ = writeln!(
            out,
            "    label={};",
            quote(&format!("observed by {}", spec.agents[i].name))
        );
        let _ = writeln!(out, "    style=rounded;");
        for &v in &observed {
            let _ = writeln!(out, "    {}{};", node(v), style(v));
        }
        let _ = writeln!(out, "  }}");
    }
    for v in sm.dag.vertices().filter(|v| !observed.contains(v)) {
        let _ = writeln!(out, "  {}{};", node(v), style(v));
    }
    for (a, b) in sm.dag.edges() {
        let _ = writeln!(out, "  {} -> {};", node(a), node(b));
    }
    out.push_str("}\n");
    out
}
