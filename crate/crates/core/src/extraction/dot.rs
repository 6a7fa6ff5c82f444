//! Graphviz rendering of a SEG.

use std::fmt::Write;

use super::seg::Seg;

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', "\\l")
}

/// Nodes are labelled with the network, its marking bits and its choice path; edges with
/// their action.
pub fn seg_to_dot(seg: &Seg, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  node [shape=box, fontname=monospace];").unwrap();
    for (id, node) in seg.nodes().iter().enumerate() {
        let label = format!(
            "{}\nmarking {}  path {}\n",
            node.an.net,
            node.an.marking.bits(),
            node.path
        );
        let style = if node.an.is_white() { ", style=bold" } else { "" };
        writeln!(out, "  n{id} [label=\"{}\"{style}];", escape(&label)).unwrap();
    }
    for (id, node) in seg.nodes().iter().enumerate() {
        for (label, target) in &node.edges {
            writeln!(out, "  n{id} -> n{target} [label=\"{}\"];", escape(&label.to_string())).unwrap();
        }
    }
    out.push_str("}\n");
    out
}
