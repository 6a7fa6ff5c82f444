//! Splitting loop nodes out of a SEG and reading off a choreography.

use std::collections::BTreeMap;
use std::sync::Arc;

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;

use super::seg::{LeafKind, NodeId, Seg};
use crate::ast::{ActionLabel, ChorBody, Choreography, ProcName};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DagTarget {
    Node(NodeId),
    Call(ProcName),
}

/// A SEG whose edges into loop nodes have been replaced by procedure calls.
#[derive(Debug, Clone)]
pub struct Dag {
    pub edges: Vec<Vec<(ActionLabel, DagTarget)>>,
    pub leaves: Vec<Option<LeafKind>>,
    /// Loop nodes with their procedure names, in discovery order.
    pub loops: Vec<(NodeId, ProcName)>,
}

impl Dag {
    pub fn loop_name(&self, id: NodeId) -> Option<&ProcName> {
        self.loops.iter().find(|(n, _)| *n == id).map(|(_, x)| x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cycle survived loop splitting at node {0}")]
pub struct CycleError(pub NodeId);

pub fn unroll_graph(seg: &Seg) -> Result<Dag, CycleError> {
    let n = seg.len();
    let mut indegree = vec![0usize; n];
    for node in seg.nodes() {
        for (_, t) in &node.edges {
            indegree[*t] += 1;
        }
    }
    let is_loop = |id: NodeId| indegree[id] > 1 || (id == Seg::ROOT && indegree[id] >= 1);

    let mut loops = Vec::new();
    let mut seen = vec![false; n];
    let mut todo = vec![Seg::ROOT];
    while let Some(id) = todo.pop() {
        if std::mem::replace(&mut seen[id], true) {
            continue;
        }
        if is_loop(id) {
            loops.push((id, ProcName::new(format!("X{}", loops.len() + 1))));
        }
        todo.extend(seg.node(id).edges.iter().rev().map(|(_, t)| *t));
    }
    let names: BTreeMap<NodeId, ProcName> = loops.iter().cloned().collect();

    let mut graph = DiGraph::<NodeId, ()>::with_capacity(n, seg.edge_count());
    let ix: Vec<_> = (0..n).map(|id| graph.add_node(id)).collect();
    let edges: Vec<Vec<(ActionLabel, DagTarget)>> = seg
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, node)| {
            node.edges
                .iter()
                .map(|(label, t)| {
                    let target = match names.get(t) {
                        Some(x) => DagTarget::Call(x.clone()),
                        None => {
                            graph.add_edge(ix[id], ix[*t], ());
                            DagTarget::Node(*t)
                        }
                    };
                    (label.clone(), target)
                })
                .collect()
        })
        .collect();
    toposort(&graph, None).map_err(|c| CycleError(graph[c.node_id()]))?;

    Ok(Dag {
        edges,
        leaves: (0..n).map(|id| seg.leaf_kind(id)).collect(),
        loops,
    })
}

fn read_off(dag: &Dag, id: NodeId) -> Arc<ChorBody> {
    let target = |t: &DagTarget| match t {
        DagTarget::Node(m) => read_off(dag, *m),
        DagTarget::Call(x) => Arc::new(ChorBody::Call(x.clone())),
    };
    match dag.edges[id].as_slice() {
        [] => Arc::new(match dag.leaves[id] {
            Some(LeafKind::Deadlock) => ChorBody::Dlock,
            _ => ChorBody::Nil,
        }),
        [(label, t)] => Arc::new(ChorBody::prefix(label, target(t))),
        [(ActionLabel::Then { process, expr }, t), (_, e)] => Arc::new(ChorBody::Cond {
            process: process.clone(),
            expr: expr.clone(),
            then: target(t),
            els: target(e),
        }),
        _ => unreachable!("malformed node {id}"),
    }
}

pub fn build_choreography(dag: &Dag) -> Choreography {
    let procedures = dag
        .loops
        .iter()
        .map(|(id, x)| (x.clone(), read_off(dag, *id)))
        .collect();
    let main = match dag.loop_name(Seg::ROOT) {
        Some(x) => Arc::new(ChorBody::Call(x.clone())),
        None => read_off(dag, Seg::ROOT),
    };
    Choreography { procedures, main }
}
