//! Abstract transitions of annotated networks.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ast::{ActionLabel, Behaviour, Network, ProcessName};

/// Which processes have taken part in a reduction since the last reset.
///
/// Services and terminated processes are always marked: neither can be required to act inside
/// a loop.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Marking {
    pub marked: BTreeMap<ProcessName, bool>,
    pub services: Arc<BTreeSet<ProcessName>>,
}

impl Marking {
    pub fn is_marked(&self, p: &ProcessName) -> bool {
        self.marked.get(p).copied().unwrap_or(false)
    }

    /// Processes currently unmarked.
    pub fn unmarked(&self) -> impl Iterator<Item = &ProcessName> {
        self.marked.iter().filter(|(_, m)| !**m).map(|(p, _)| p)
    }

    /// Marking bits in process order, `1` for marked.
    pub fn bits(&self) -> String {
        self.marked
            .values()
            .map(|m| if *m { '1' } else { '0' })
            .collect()
    }
}

/// A network together with its marking.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnnotatedNetwork {
    pub net: Network,
    pub marking: Marking,
}

impl AnnotatedNetwork {
    /// Initial annotation: services and terminated processes marked, all others unmarked.
    pub fn initial(net: Network, services: &BTreeSet<ProcessName>) -> Self {
        let services: BTreeSet<ProcessName> = services
            .iter()
            .filter(|s| net.processes.contains_key(*s))
            .cloned()
            .collect();
        let marked = net
            .processes
            .iter()
            .map(|(p, t)| (p.clone(), services.contains(p) || t.is_terminated()))
            .collect();
        AnnotatedNetwork {
            net,
            marking: Marking {
                marked,
                services: Arc::new(services),
            },
        }
    }

    fn exempt(&self, p: &ProcessName) -> bool {
        self.marking.services.contains(p)
            || self.net.processes.get(p).is_some_and(|t| t.is_terminated())
    }

    /// All processes that could still be required to act are unmarked.
    pub fn is_white(&self) -> bool {
        self.marking
            .marked
            .iter()
            .all(|(p, m)| !*m || self.exempt(p))
    }

    /// No process can act any more except services.
    pub fn is_finished(&self) -> bool {
        self.net
            .processes
            .iter()
            .all(|(p, t)| self.marking.services.contains(p) || t.is_terminated())
    }
}

/// One abstract reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub label: ActionLabel,
    pub successor: AnnotatedNetwork,
}

fn successor(
    an: &AnnotatedNetwork,
    label: ActionLabel,
    updates: &[(&ProcessName, &Arc<Behaviour>)],
) -> Step {
    let mut net = an.net.clone();
    for (p, b) in updates {
        let term = net.processes.get_mut(*p).expect("updated process exists");
        *term = term.with_main(Arc::clone(b));
    }
    let involved: BTreeSet<&ProcessName> = label.processes().into_iter().collect();
    let reset = an.marking.unmarked().all(|p| involved.contains(p));
    let mut next = AnnotatedNetwork {
        net,
        marking: an.marking.clone(),
    };
    let marked: BTreeMap<ProcessName, bool> = next
        .marking
        .marked
        .iter()
        .map(|(p, m)| {
            let exempt = next.exempt(p);
            let v = if reset {
                exempt
            } else {
                *m || involved.contains(p) || exempt
            };
            (p.clone(), v)
        })
        .collect();
    next.marking.marked = marked;
    Step {
        label,
        successor: next,
    }
}

/// Every enabled step, in process-name order of the acting process.
///
/// Heads that are procedure calls are unfolded only for the processes taking part in a step;
/// the unfolding is materialized in that step's successor.
pub fn enabled_steps(an: &AnnotatedNetwork) -> Vec<Step> {
    let mut steps = Vec::new();
    let net = &an.net;
    for (p, term) in &net.processes {
        let Some(head) = term.unfold_head(&term.main) else {
            continue;
        };
        match &**head {
            Behaviour::Send { to, expr, cont } => {
                let Some(peer) = net.processes.get(to).filter(|_| to != p) else {
                    continue;
                };
                if let Some(Behaviour::Receive {
                    from,
                    var,
                    cont: peer_cont,
                }) = peer.unfold_head(&peer.main).map(|b| &**b)
                {
                    if from == p {
                        let label = ActionLabel::Com {
                            from: p.clone(),
                            expr: expr.clone(),
                            to: to.clone(),
                            var: var.clone(),
                        };
                        steps.push(successor(an, label, &[(p, cont), (to, peer_cont)]));
                    }
                }
            }
            Behaviour::Select { to, label, cont } => {
                let Some(peer) = net.processes.get(to).filter(|_| to != p) else {
                    continue;
                };
                if let Some(Behaviour::Offer { from, branches }) =
                    peer.unfold_head(&peer.main).map(|b| &**b)
                {
                    if let Some(branch) = branches.get(label).filter(|_| from == p) {
                        let l = ActionLabel::Sel {
                            from: p.clone(),
                            to: to.clone(),
                            label: label.clone(),
                        };
                        steps.push(successor(an, l, &[(p, cont), (to, branch)]));
                    }
                }
            }
            Behaviour::Cond { expr, then, els } => {
                let t = ActionLabel::Then {
                    process: p.clone(),
                    expr: expr.clone(),
                };
                let e = ActionLabel::Else {
                    process: p.clone(),
                    expr: expr.clone(),
                };
                steps.push(successor(an, t, &[(p, then)]));
                steps.push(successor(an, e, &[(p, els)]));
            }
            _ => {}
        }
    }
    steps
}
