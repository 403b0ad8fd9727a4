use std::fmt::Write as _;

use super::KnowledgeGraph;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl KnowledgeGraph {
    /// Graphviz rendering: one box per entity labeled with its class and
    /// attributes, one labeled edge per relation.
    pub fn to_dot(&self) -> String {
        let mut out = format!("digraph {} {{\n", quote(&self.clip_id));
        for (name, node) in self.nodes() {
            let mut label = name.clone();
            if let Some(class) = &node.class {
                let _ = write!(label, "\nclass: {class}");
            }
            for (attr, a) in &node.attributes {
                let _ = write!(label, "\n{attr} = {}", a.value);
            }
            let _ = writeln!(out, "  {} [shape=box, label={}];", quote(name), quote(&label));
        }
        for e in self.edges() {
            let _ = writeln!(
                out,
                "  {} -> {} [label={}];",
                quote(&e.subject),
                quote(&e.object),
                quote(&format!("{} ({})", e.relation, e.kind.as_str()))
            );
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::{EreTuple, KnowledgeGraph, RelationKind};

    #[test]
    fn empty_graph_is_header_and_footer() {
        assert_eq!(KnowledgeGraph::new("c").to_dot(), "digraph \"c\" {\n}\n");
    }

    #[test]
    fn one_edge() {
        let mut g = KnowledgeGraph::new("c");
        g.merge_ere(&[EreTuple::new("RobotArm", "pour", RelationKind::Action, "ColdWater").unwrap()]);
        let dot = g.to_dot();
        assert_eq!(dot.matches(" -> ").count(), 1);
        assert!(dot.contains("\"RobotArm\" -> \"ColdWater\" [label=\"pour (action)\"];"));
        assert_eq!(dot.matches("[shape=box").count(), 2);
    }

    #[test]
    fn escapes_quotes() {
        let mut g = KnowledgeGraph::new("c\"1");
        g.merge_ere(&[EreTuple::new("A\"", "on", RelationKind::Static, "B").unwrap()]);
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph \"c\\\"1\" {"));
        assert!(dot.contains("\"A\\\"\" -> \"B\""));
    }
}
