use std::collections::BTreeMap;
use std::fmt::Write;

use super::{BddStore, NodeId};

/// Rendering knobs for [`BddStore::export_dot`].
pub struct DotOptions<'a> {
    /// Display name of a Boolean variable.
    pub var_name: &'a dyn Fn(u32) -> String,
}

impl Default for DotOptions<'_> {
    fn default() -> Self {
        DotOptions {
            var_name: &|v| format!("x{v}"),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl BddStore {
    /// Graphviz description of the graph below `roots`. High edges are solid,
    /// low edges dashed; one rank per variable. Shared nodes are emitted once.
    pub fn export_dot(&self, roots: &[(String, NodeId)], options: &DotOptions<'_>) -> String {
        let ids: Vec<NodeId> = roots.iter().map(|(_, r)| *r).collect();
        let nodes = self.reachable(&ids);

        let mut root_labels: BTreeMap<NodeId, Vec<&str>> = BTreeMap::new();
        for (label, id) in roots {
            root_labels.entry(*id).or_default().push(label);
        }
        let xlabel = |id: NodeId| -> String {
            match root_labels.get(&id) {
                Some(labels) => format!(", xlabel=\"{}\"", escape(&labels.join(", "))),
                None => String::new(),
            }
        };

        let mut out = String::from("digraph bdd {\n");
        let mut terminals = Vec::new();
        for t in [NodeId::TERM0, NodeId::TERM1] {
            let used =
                ids.contains(&t) || nodes.iter().any(|&u| self.low(u) == t || self.high(u) == t);
            if used {
                terminals.push(t);
            }
        }
        for &t in &terminals {
            let label = if t == NodeId::TERM1 { "1" } else { "0" };
            let _ = writeln!(out, "  n{t} [label=\"{label}\", shape=box{}];", xlabel(t));
        }

        let mut by_var: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for &u in &nodes {
            by_var.entry(self.var(u)).or_default().push(u);
        }
        for (var, layer) in &by_var {
            let name = escape(&(options.var_name)(*var));
            let _ = write!(out, "  {{ rank=same;");
            for u in layer {
                let _ = write!(out, " n{u};");
            }
            out.push_str(" }\n");
            for u in layer {
                let _ = writeln!(
                    out,
                    "  n{u} [label=\"{name}\", shape=circle{}];",
                    xlabel(*u)
                );
            }
        }
        if terminals.len() > 1 {
            out.push_str("  { rank=same; n0; n1; }\n");
        }
        for &u in &nodes {
            let n = self.node(u);
            let _ = writeln!(out, "  n{u} -> n{} [style=dashed];", n.low);
            let _ = writeln!(out, "  n{u} -> n{};", n.high);
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_nodes(dot: &str) -> usize {
        dot.lines().filter(|l| l.contains("[label=")).count()
    }

    #[test]
    fn terminal_root_is_a_single_node() {
        let s = BddStore::new(3);
        let dot = s.export_dot(&[("f".into(), NodeId::TERM1)], &DotOptions::default());
        assert_eq!(count_nodes(&dot), 1);
        assert!(dot.contains("label=\"1\""));
    }

    #[test]
    fn shared_nodes_emitted_once() {
        let mut s = BddStore::new(3);
        let x2 = s.literal(2, true).unwrap();
        let f = s.mk_node(0, x2, NodeId::TERM1).unwrap();
        let g = s.mk_node(1, NodeId::TERM0, x2).unwrap();
        let dot = s.export_dot(&[("f".into(), f), ("g".into(), g)], &DotOptions::default());
        // f, g, x2 and both terminals
        assert_eq!(count_nodes(&dot), 5);
        assert_eq!(dot.matches(&format!("n{x2} [label=")).count(), 1);
        assert!(dot.contains(&format!("n{f} -> n{x2} [style=dashed];")));
        assert!(dot.contains(&format!("n{f} -> n1;")));
        assert_eq!(
            dot,
            s.export_dot(&[("f".into(), f), ("g".into(), g)], &DotOptions::default())
        );
    }
}
