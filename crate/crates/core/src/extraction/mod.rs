//! Extraction of choreographies from networks.

mod dag;
mod dot;
mod seg;
mod strategy;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use petgraph::graph::UnGraph;
use petgraph::unionfind::UnionFind;
use serde::Serialize;

pub use dag::{build_choreography, unroll_graph, CycleError, Dag, DagTarget};
pub use dot::seg_to_dot;
pub use seg::{
    is_prefix, loop_is_valid, verify_valid_seg, ChoicePath, Engine, LeafKind, NodeId, Outcome,
    PathStackEntry, RunStats, Seg, SegNode,
};
pub use strategy::{group_actions, order_actions, order_steps, Action, Strategy, StrategyKind};

use crate::ast::{ChorBody, Choreography, Network, ProcessName, Program};
use crate::checks::{check_all, CheckReport};
use crate::semantics::AnnotatedNetwork;

const ENGINE_STACK: usize = 256 << 20;

/// Undirected graph with an edge between every two processes that mention each other.
pub fn communication_graph(n: &Network) -> UnGraph<ProcessName, ()> {
    let mut g = UnGraph::new_undirected();
    let ix: BTreeMap<&ProcessName, _> = n.names().map(|p| (p, g.add_node(p.clone()))).collect();
    let mut edges = BTreeSet::new();
    for (p, term) in &n.processes {
        let mut visit = |q: &ProcessName| {
            if let Some(&j) = ix.get(q) {
                let i = ix[p];
                if i != j {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
        };
        term.main.for_each_peer(&mut visit);
        for body in term.procedures.values() {
            body.for_each_peer(&mut visit);
        }
    }
    for (a, b) in edges {
        g.add_edge(a, b, ());
    }
    g
}

/// Connected components of the communication graph, ordered by their least process name.
pub fn components(n: &Network) -> Vec<BTreeSet<ProcessName>> {
    let g = communication_graph(n);
    let mut uf = UnionFind::new(g.node_count());
    for e in g.raw_edges() {
        uf.union(e.source().index(), e.target().index());
    }
    let mut groups: BTreeMap<usize, BTreeSet<ProcessName>> = BTreeMap::new();
    for i in g.node_indices() {
        groups
            .entry(uf.find(i.index()))
            .or_default()
            .insert(g[i].clone());
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort();
    out
}

/// log₂ of the most distinct nodes a graph for `n` can have: markings times reachable
/// behaviours per process times choice paths.
pub fn node_bound_log2(n: &Network) -> f64 {
    let terms: f64 = n
        .processes
        .values()
        .map(|t| ((t.size() + 1) as f64).log2())
        .sum();
    let conditionals: usize = n.processes.values().map(|t| t.conditionals()).sum();
    n.len() as f64 + terms + conditionals as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    /// Every way of continuing some node would close a loop without a white node.
    ExhaustedBadLoops,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::ExhaustedBadLoops => f.write_str("every continuation closes an invalid loop"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub component: usize,
    pub processes: Vec<ProcessName>,
    pub reason: FailureReason,
    pub stats: RunStats,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ExtractError {
    #[error("network is not well formed")]
    Checks(CheckReport),
    #[error("service {0} is not a process of the network")]
    UnknownService(ProcessName),
    #[error("no valid graph for component {} ({})", .0.component, names(&.0.processes))]
    NoValidSeg(Failure),
    #[error(transparent)]
    Internal(#[from] CycleError),
}

fn names(ps: &[ProcessName]) -> String {
    ps.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ")
}

/// A deadlocked leaf and the processes stuck in it.
#[derive(Debug, Clone, Serialize)]
pub struct DeadlockReport {
    pub component: usize,
    pub path: String,
    pub stuck: Vec<(ProcessName, String)>,
}

#[derive(Debug, Clone)]
pub struct ComponentRun {
    pub processes: BTreeSet<ProcessName>,
    pub seg: Seg,
    pub choreography: Choreography,
    pub stats: RunStats,
    pub node_bound_log2: f64,
}

impl ComponentRun {
    pub fn within_node_bound(&self) -> bool {
        (self.stats.nodes_created as f64).log2() <= self.node_bound_log2 + 1e-9
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub program: Program,
    pub components: Vec<ComponentRun>,
    /// Totals over components; elapsed time is wall-clock for the whole call.
    pub stats: RunStats,
}

impl Extraction {
    pub fn deadlocks(&self) -> Vec<DeadlockReport> {
        let mut out = Vec::new();
        for (i, run) in self.components.iter().enumerate() {
            for id in run.seg.deadlock_leaves() {
                let node = run.seg.node(id);
                let stuck = node
                    .an
                    .net
                    .processes
                    .iter()
                    .filter(|(p, t)| !t.is_terminated() && !node.an.marking.services.contains(*p))
                    .map(|(p, t)| (p.clone(), t.main.to_string()))
                    .collect();
                out.push(DeadlockReport {
                    component: i,
                    path: node.path.to_string(),
                    stuck,
                });
            }
        }
        out
    }

    pub fn has_deadlocks(&self) -> bool {
        self.components.iter().any(|c| !c.seg.deadlock_leaves().is_empty())
    }
}

enum ComponentError {
    Failed(RunStats),
    Cycle(CycleError),
}

fn run_component(
    net: Network,
    services: &BTreeSet<ProcessName>,
    strategy: Strategy,
    stream: u64,
) -> Result<ComponentRun, ComponentError> {
    let start = Instant::now();
    let processes: BTreeSet<ProcessName> = net.names().cloned().collect();
    let node_bound_log2 = node_bound_log2(&net);
    let an = AnnotatedNetwork::initial(net, services);
    let (outcome, seg, mut stats) = Engine::new(an, strategy, stream).run();
    if outcome != Outcome::Ok {
        stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        return Err(ComponentError::Failed(stats));
    }
    let dag = unroll_graph(&seg).map_err(ComponentError::Cycle)?;
    let choreography = build_choreography(&dag);
    stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(ComponentRun {
        processes,
        seg,
        choreography,
        stats,
        node_bound_log2,
    })
}

fn spawn_component<'s>(
    scope: &'s std::thread::Scope<'s, '_>,
    net: Network,
    services: &'s BTreeSet<ProcessName>,
    strategy: Strategy,
    stream: u64,
) -> std::thread::ScopedJoinHandle<'s, Result<ComponentRun, ComponentError>> {
    std::thread::Builder::new()
        .name(format!("extract-{stream}"))
        .stack_size(ENGINE_STACK)
        .spawn_scoped(scope, move || run_component(net, services, strategy, stream))
        .expect("spawn extraction worker")
}

/// Extracts `n`. With `parallel`, independent groups of processes are extracted separately and
/// concurrently; otherwise the whole network is one component.
pub fn extract(
    n: &Network,
    services: &BTreeSet<ProcessName>,
    strategy: Strategy,
    parallel: bool,
) -> Result<Extraction, ExtractError> {
    let report = check_all(n);
    if !report.ok {
        return Err(ExtractError::Checks(report));
    }
    if let Some(s) = services.iter().find(|s| n.get(s).is_none()) {
        return Err(ExtractError::UnknownService(s.clone()));
    }
    let start = Instant::now();
    let groups = if parallel {
        components(n)
    } else {
        vec![n.names().cloned().collect()]
    };
    let results: Vec<Result<ComponentRun, ComponentError>> = std::thread::scope(|scope| {
        if parallel {
            let handles: Vec<_> = groups
                .iter()
                .enumerate()
                .map(|(i, g)| spawn_component(scope, n.restrict(g), services, strategy, i as u64))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("extraction worker panicked"))
                .collect()
        } else {
            let net = n.clone();
            vec![spawn_component(scope, net, services, strategy, 0)
                .join()
                .expect("extraction worker panicked")]
        }
    });

    let mut runs = Vec::with_capacity(results.len());
    let mut stats = RunStats::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(run) => {
                stats.absorb(&run.stats);
                runs.push(run);
            }
            Err(ComponentError::Failed(s)) => {
                return Err(ExtractError::NoValidSeg(Failure {
                    component: i,
                    processes: groups[i].iter().cloned().collect(),
                    reason: FailureReason::ExhaustedBadLoops,
                    stats: s,
                }))
            }
            Err(ComponentError::Cycle(e)) => return Err(e.into()),
        }
    }
    stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;

    let trivial = |c: &Choreography| c.procedures.is_empty() && *c.main == ChorBody::Nil;
    let mut chors: Vec<Choreography> = runs
        .iter()
        .map(|r| r.choreography.clone())
        .filter(|c| !trivial(c))
        .collect();
    if chors.is_empty() {
        chors.push(Choreography {
            procedures: BTreeMap::new(),
            main: Arc::new(ChorBody::Nil),
        });
    }
    let program = Program::new(chors).expect("components act on disjoint processes");
    Ok(Extraction {
        program,
        components: runs,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epp::epp;
    use crate::parser::{parse_choreography, parse_network};

    fn set(names: &[&str]) -> BTreeSet<ProcessName> {
        names.iter().map(|s| ProcessName::from(*s)).collect()
    }

    fn extract_text(text: &str, services: &[&str]) -> Result<Extraction, ExtractError> {
        extract(&parse_network(text).unwrap(), &set(services), Strategy::default(), true)
    }

    const N1: &str = "p { main { q!<e>; stop } } | q { main { p?x; stop } } \
                      | r { main { s!<e'>; stop } } | s { main { r?y; stop } }";

    const LOOP: &str = "p { def X { q!<e>; q&{left: q!<e>; X, right: stop} } main { q!<e>; X } } \
                        | q { def Y { p?x; p?x; r?y; if eq(x,y) then p+left; Y else p+right; stop } main { Y } } \
                        | r { def Z { q!<e'>; Z } main { Z } }";

    #[test]
    fn components_of_examples() {
        let n = parse_network(N1).unwrap();
        assert_eq!(components(&n), vec![set(&["p", "q"]), set(&["r", "s"])]);
        let n = parse_network("a { main { stop } } | b { main { stop } } | c { main { stop } }").unwrap();
        assert_eq!(components(&n).len(), 3);
        assert_eq!(communication_graph(&n).edge_count(), 0);
    }

    #[test]
    fn independent_pairs_extract_separately() {
        let x = extract_text(N1, &[]).unwrap();
        assert_eq!(x.program.components.len(), 2);
        assert_eq!(x.program.to_string(), "main { p.e->q.x; stop }\n||\nmain { r.e'->s.y; stop }\n");
        let seq = extract(&parse_network(N1).unwrap(), &set(&[]), Strategy::default(), false).unwrap();
        assert_eq!(seq.program.components.len(), 1);
        assert_eq!(seq.program.components[0].to_string(), "main { p.e->q.x; r.e'->s.y; stop }\n");
    }

    #[test]
    fn conditional_network() {
        let x = extract_text(
            "p { main { if e then q+left; q!<1>; stop else q+right; q?x; stop } } \
             | q { main { p&{left: p?y; stop, right: p!<2>; stop} } }",
            &[],
        )
        .unwrap();
        assert_eq!(
            x.program.to_string(),
            "main { if p.e then p->q[left]; p.1->q.y; stop else p->q[right]; q.2->p.x; stop }\n"
        );
    }

    #[test]
    fn deadlocks_become_bottom() {
        let x = extract_text(
            "p { main { q!<1>; r!<2>; stop } } | q { main { p?x; r!<3>; stop } } \
             | r { main { if e then p?y; stop else q?y; stop } }",
            &[],
        )
        .unwrap();
        assert_eq!(x.program.deadlocks(), 2);
        assert!(x.has_deadlocks());
        let reports = x.deadlocks();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].stuck.len(), 1);
    }

    #[test]
    fn starvation_loop_contains_both_pairs() {
        let x = extract(
            &parse_network(
                "p { def X { q!<e>; X } main { X } } | q { def Y { p?x; Y } main { Y } } \
                 | r { def Z { s!<f>; Z } main { Z } } | s { def W { r?y; W } main { W } }",
            )
            .unwrap(),
            &set(&[]),
            Strategy::default(),
            false,
        )
        .unwrap();
        assert_eq!(
            x.program.to_string(),
            "def X1 { p.e->q.x; r.f->s.y; X1 }\nmain { X1 }\n"
        );
        assert_eq!(x.stats.badloops, 1);
    }

    #[test]
    fn livelock_reports_component() {
        let err = extract_text(
            "p { def X { q!<e>; X } main { X } } | q { def Y { p?x; Y } main { Y } } \
             | r { def Z { p?y; Z } main { Z } } | a { main { b!<e>; stop } } | b { main { a?x; stop } }",
            &[],
        )
        .unwrap_err();
        let ExtractError::NoValidSeg(f) = err else { panic!("{err}") };
        assert_eq!(f.component, 1);
        assert_eq!(f.processes, vec!["p".into(), "q".into(), "r".into()] as Vec<ProcessName>);
        assert_eq!(f.reason, FailureReason::ExhaustedBadLoops);
    }

    #[test]
    fn loop_with_service() {
        let x = extract_text(LOOP, &["r"]).unwrap();
        assert!(!x.has_deadlocks());
        let c = &x.program.components[0];
        assert_eq!(c.procedures.len(), 1);
        for run in &x.components {
            verify_valid_seg(&run.seg).unwrap();
            assert!(run.within_node_bound());
        }
        let without = extract_text(LOOP, &[]).unwrap();
        assert_eq!(without.program.deadlocks(), 1);
    }

    #[test]
    fn projection_round_trip_shape() {
        let c = parse_choreography(
            "def X { u.cred->a.cred; if a.check(cred) then a->u[ok]; a->w[ok]; w.token->u.token; stop \
             else a->u[ko]; a->w[ko]; X } main { X }",
        )
        .unwrap();
        let n = epp(&c).unwrap();
        let x = extract(&n, &set(&[]), Strategy::default(), true).unwrap();
        let expected = parse_choreography(
            "def X1 { u.cred->a.cred; if a.check(cred) then a->u[ok]; a->w[ok]; w.token->u.token; stop \
             else a->u[ko]; a->w[ko]; X1 } main { X1 }",
        )
        .unwrap();
        assert_eq!(x.program.components, vec![expected]);
    }

    #[test]
    fn services_must_exist() {
        assert!(matches!(
            extract_text(N1, &["zz"]),
            Err(ExtractError::UnknownService(_))
        ));
    }

    #[test]
    fn ill_formed_networks_are_rejected() {
        let n = crate::parser::parse_network_unvalidated("p { def X { Y } def Y { X } main { X } }").unwrap();
        assert!(matches!(
            extract(&n, &set(&[]), Strategy::default(), true),
            Err(ExtractError::Checks(_))
        ));
    }

    #[test]
    fn all_strategies_agree_on_extractability() {
        for text in [N1, LOOP] {
            for kind in StrategyKind::ALL {
                let n = parse_network(text).unwrap();
                assert!(extract(&n, &set(&[]), Strategy::new(kind, 3), true).is_ok(), "{kind}");
            }
        }
    }
}
