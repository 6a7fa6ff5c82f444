//! Lazy construction of a valid symbolic execution graph.

use std::collections::HashMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::strategy::{group_actions, order_actions, Action, Strategy, StrategyKind};
use crate::ast::ActionLabel;
use crate::semantics::{enabled_steps, AnnotatedNetwork, Step};

pub type NodeId = usize;

/// Conditional branches taken from the root; `false` is then, `true` is else.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChoicePath(Vec<bool>);

impl ChoicePath {
    pub fn root() -> Self {
        ChoicePath(Vec::new())
    }

    pub fn child(&self, els: bool) -> Self {
        let mut bits = self.0.clone();
        bits.push(els);
        ChoicePath(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Non-strict: every path is a prefix of itself.
    pub fn is_prefix_of(&self, other: &ChoicePath) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for ChoicePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn is_prefix(a: &ChoicePath, b: &ChoicePath) -> bool {
    a.is_prefix_of(b)
}

#[derive(Debug, Clone)]
pub struct SegNode {
    pub an: AnnotatedNetwork,
    pub path: ChoicePath,
    /// One interaction edge, or a Then edge followed by an Else edge.
    pub edges: Vec<(ActionLabel, NodeId)>,
    stack_pos: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafKind {
    Terminated,
    Deadlock,
}

/// Node 0 is the root.
#[derive(Debug, Clone, Default)]
pub struct Seg {
    nodes: Vec<SegNode>,
    index: HashMap<AnnotatedNetwork, Vec<NodeId>>,
}

impl Seg {
    pub const ROOT: NodeId = 0;

    pub fn nodes(&self) -> &[SegNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &SegNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.edges.len()).sum()
    }

    /// Only meaningful on a finished graph.
    pub fn leaf_kind(&self, id: NodeId) -> Option<LeafKind> {
        let n = &self.nodes[id];
        if !n.edges.is_empty() {
            None
        } else if n.an.is_finished() {
            Some(LeafKind::Terminated)
        } else {
            Some(LeafKind::Deadlock)
        }
    }

    pub fn deadlock_leaves(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&id| self.leaf_kind(id) == Some(LeafKind::Deadlock))
            .collect()
    }

    /// Existing node for `an` whose path is the longest prefix of `path`.
    pub fn lookup(&self, an: &AnnotatedNetwork, path: &ChoicePath) -> Option<NodeId> {
        self.index
            .get(an)?
            .iter()
            .copied()
            .filter(|&id| self.nodes[id].path.is_prefix_of(path))
            .max_by_key(|&id| self.nodes[id].path.len())
    }

    fn insert(&mut self, an: AnnotatedNetwork, path: ChoicePath) -> NodeId {
        let id = self.nodes.len();
        self.index.entry(an.clone()).or_default().push(id);
        self.nodes.push(SegNode {
            an,
            path,
            edges: Vec::new(),
            stack_pos: None,
        });
        id
    }

    fn truncate(&mut self, len: usize) -> usize {
        let removed = self.nodes.len().saturating_sub(len);
        for node in self.nodes.drain(len..) {
            if let Some(ids) = self.index.get_mut(&node.an) {
                ids.retain(|&id| id < len);
                if ids.is_empty() {
                    self.index.remove(&node.an);
                }
            }
        }
        removed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStackEntry {
    pub node: NodeId,
    /// White nodes strictly below this entry on the stack.
    pub white_below: usize,
}

/// Whether the cycle closed by a back-edge from `top` to `target` passes through a white node.
///
/// Counts white nodes at stack positions `target..=top`.
pub fn loop_is_valid(target: &PathStackEntry, top: &PathStackEntry, top_white: bool) -> bool {
    top.white_below + usize::from(top_white) > target.white_below
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Ok,
    Fail,
    BadLoop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunStats {
    pub nodes_created: usize,
    pub nodes_deleted: usize,
    pub badloops: usize,
    pub elapsed_ms: f64,
}

impl RunStats {
    pub fn absorb(&mut self, other: &RunStats) {
        self.nodes_created += other.nodes_created;
        self.nodes_deleted += other.nodes_deleted;
        self.badloops += other.badloops;
    }
}

struct Checkpoint {
    nodes: usize,
    owner: NodeId,
    owner_edges: usize,
}

/// Depth-first builder for one annotated network.
pub struct Engine {
    seg: Seg,
    stack: Vec<PathStackEntry>,
    kind: StrategyKind,
    rng: ChaCha8Rng,
    stats: RunStats,
}

impl Engine {
    pub fn new(root: AnnotatedNetwork, strategy: Strategy, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(strategy.seed);
        rng.set_stream(stream);
        let mut seg = Seg::default();
        seg.insert(root, ChoicePath::root());
        Engine {
            seg,
            stack: Vec::new(),
            kind: strategy.kind,
            rng,
            stats: RunStats {
                nodes_created: 1,
                ..RunStats::default()
            },
        }
    }

    /// Builds the graph from the root.
    pub fn run(mut self) -> (Outcome, Seg, RunStats) {
        self.push(Seg::ROOT);
        let outcome = self.build_graph(Seg::ROOT);
        self.pop();
        (outcome, self.seg, self.stats)
    }

    pub fn seg(&self) -> &Seg {
        &self.seg
    }

    fn push(&mut self, id: NodeId) {
        let white_below = match self.stack.last() {
            Some(top) => top.white_below + usize::from(self.seg.nodes[top.node].an.is_white()),
            None => 0,
        };
        self.seg.nodes[id].stack_pos = Some(self.stack.len());
        self.stack.push(PathStackEntry {
            node: id,
            white_below,
        });
    }

    fn pop(&mut self) {
        let entry = self.stack.pop().expect("path stack is nonempty");
        self.seg.nodes[entry.node].stack_pos = None;
    }

    fn checkpoint(&self, owner: NodeId) -> Checkpoint {
        Checkpoint {
            nodes: self.seg.nodes.len(),
            owner,
            owner_edges: self.seg.nodes[owner].edges.len(),
        }
    }

    fn rollback(&mut self, cp: Checkpoint) {
        self.stats.nodes_deleted += self.seg.truncate(cp.nodes);
        self.seg.nodes[cp.owner].edges.truncate(cp.owner_edges);
    }

    pub fn build_graph(&mut self, node: NodeId) -> Outcome {
        let steps = enabled_steps(&self.seg.nodes[node].an);
        if steps.is_empty() {
            return Outcome::Ok;
        }
        let actions = order_actions(
            group_actions(steps),
            self.kind,
            &self.seg.nodes[node].an,
            &mut self.rng,
        );
        for action in actions {
            let outcome = match action {
                Action::Interaction(step) => self.build_communication(node, step),
                Action::Conditional { then, els } => self.build_conditional(node, then, els),
            };
            match outcome {
                Outcome::BadLoop => continue,
                done => return done,
            }
        }
        Outcome::Fail
    }

    pub fn build_communication(&mut self, node: NodeId, step: Step) -> Outcome {
        let path = self.seg.nodes[node].path.clone();
        let cp = self.checkpoint(node);
        let outcome = self.follow(node, step, path);
        if outcome != Outcome::Ok {
            self.rollback(cp);
        }
        outcome
    }

    pub fn build_conditional(&mut self, node: NodeId, then: Step, els: Step) -> Outcome {
        let path = self.seg.nodes[node].path.clone();
        let cp = self.checkpoint(node);
        let mut outcome = self.follow(node, then, path.child(false));
        if outcome == Outcome::Ok {
            outcome = self.follow(node, els, path.child(true));
        }
        if outcome != Outcome::Ok {
            self.rollback(cp);
        }
        outcome
    }

    /// Adds the edge for `step` out of `node`, either closing a loop or building a fresh node
    /// carrying `child_path`.
    fn follow(&mut self, node: NodeId, step: Step, child_path: ChoicePath) -> Outcome {
        let own_path = &self.seg.nodes[node].path;
        if let Some(target) = self.seg.lookup(&step.successor, own_path) {
            let pos = self.seg.nodes[target]
                .stack_pos
                .expect("a node reachable by prefix lookup is on the path stack");
            let top = *self.stack.last().expect("path stack is nonempty");
            let top_white = self.seg.nodes[node].an.is_white();
            if loop_is_valid(&self.stack[pos], &top, top_white) {
                self.seg.nodes[node].edges.push((step.label, target));
                return Outcome::Ok;
            }
            self.stats.badloops += 1;
            return Outcome::BadLoop;
        }
        let child = self.seg.insert(step.successor, child_path);
        self.stats.nodes_created += 1;
        self.seg.nodes[node].edges.push((step.label, child));
        self.push(child);
        let outcome = self.build_graph(child);
        self.pop();
        outcome
    }
}

/// Checks out-degrees, reachability and that every cycle passes through a white node, without
/// reference to how the graph was built.
pub fn verify_valid_seg(seg: &Seg) -> Result<(), String> {
    let n = seg.len();
    if n == 0 {
        return Err("empty graph".into());
    }
    for (id, node) in seg.nodes().iter().enumerate() {
        match node.edges.as_slice() {
            [] => {}
            [(l, _)] if l.is_interaction() => {}
            [(ActionLabel::Then { process: p, expr: e }, _), (ActionLabel::Else { process: q, expr: f }, _)]
                if p == q && e == f => {}
            _ => return Err(format!("node {id} has malformed out-edges")),
        }
        if node.edges.iter().any(|(_, t)| *t >= n) {
            return Err(format!("node {id} has a dangling edge"));
        }
    }
    let mut seen = vec![false; n];
    let mut todo = vec![Seg::ROOT];
    while let Some(id) = todo.pop() {
        if std::mem::replace(&mut seen[id], true) {
            continue;
        }
        todo.extend(seg.node(id).edges.iter().map(|(_, t)| *t));
    }
    if let Some(id) = seen.iter().position(|s| !s) {
        return Err(format!("node {id} is unreachable"));
    }
    // Every cycle meets a white node iff the non-white nodes induce an acyclic subgraph.
    let white: Vec<bool> = seg.nodes().iter().map(|n| n.an.is_white()).collect();
    let mut state = vec![0u8; n];
    for start in 0..n {
        if white[start] || state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some((id, i)) = stack.pop() {
            let edges = &seg.node(id).edges;
            if i < edges.len() {
                stack.push((id, i + 1));
                let t = edges[i].1;
                if white[t] {
                    continue;
                }
                match state[t] {
                    0 => {
                        state[t] = 1;
                        stack.push((t, 0));
                    }
                    1 => return Err(format!("cycle through node {t} has no white node")),
                    _ => {}
                }
            } else {
                state[id] = 2;
            }
        }
    }
    Ok(())
}
