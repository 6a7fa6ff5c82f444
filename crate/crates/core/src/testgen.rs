//! Random choreographies and the network transformations used to test extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::{Behaviour, ChorBody, Choreography, Network, ProcName, ProcessName, ProcessTerm};
use crate::epp::{epp, merge, Projector};

const MAX_ATTEMPTS: usize = 1000;
const MAX_AMEND_PASSES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenParams {
    /// Actions in total, conditionals included.
    pub size: usize,
    pub processes: usize,
    pub ifs: usize,
    pub defs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("no choreography with every procedure reachable after {0} attempts")]
    Unreachable(usize),
    #[error("amendment did not reach a projectable choreography: {0}")]
    Amend(String),
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.processes < 2 {
            return Err(GenError::Params("at least two processes are needed".into()));
        }
        if self.ifs > self.size {
            return Err(GenError::Params("more conditionals than actions".into()));
        }
        Ok(())
    }
}

struct Generator<'a> {
    rng: &'a mut ChaCha8Rng,
    processes: Vec<ProcessName>,
    procs: Vec<ProcName>,
    fresh: usize,
}

impl Generator<'_> {
    fn next_fresh(&mut self) -> usize {
        self.fresh += 1;
        self.fresh
    }

    fn body(&mut self, actions: usize, ifs: usize, may_call: bool) -> ChorBody {
        if actions + ifs == 0 {
            return if may_call && !self.procs.is_empty() && self.rng.gen_bool(0.5) {
                ChorBody::Call(self.procs.choose(self.rng).expect("procedures").clone())
            } else {
                ChorBody::Nil
            };
        }
        if self.rng.gen_range(0..actions + ifs) < ifs {
            let p = self.processes.choose(self.rng).expect("processes").clone();
            let k = self.next_fresh();
            let then_actions = self.rng.gen_range(0..=actions);
            let then_ifs = self.rng.gen_range(0..ifs);
            let then = self.body(then_actions, then_ifs, true);
            let els = self.body(actions - then_actions, ifs - 1 - then_ifs, true);
            ChorBody::Cond {
                process: p,
                expr: format!("c{k}").into(),
                then: Arc::new(then),
                els: Arc::new(els),
            }
        } else {
            let mut pair: Vec<ProcessName> =
                self.processes.choose_multiple(self.rng, 2).cloned().collect();
            let to = pair.pop().expect("two processes");
            let from = pair.pop().expect("two processes");
            let k = self.next_fresh();
            let cont = self.body(actions - 1, ifs, true);
            ChorBody::Com {
                from,
                expr: format!("e{k}").into(),
                to,
                var: format!("x{k}").into(),
                cont: Arc::new(cont),
            }
        }
    }
}

fn reachable(c: &Choreography) -> BTreeSet<ProcName> {
    let mut seen = BTreeSet::new();
    let mut todo = Vec::new();
    c.main.for_each_call(&mut |x| todo.push(x.clone()));
    while let Some(x) = todo.pop() {
        if seen.insert(x.clone()) {
            if let Some(b) = c.procedures.get(&x) {
                b.for_each_call(&mut |y| todo.push(y.clone()));
            }
        }
    }
    seen
}

/// Random choreography with interactions and conditionals spread uniformly over main and the
/// procedures. Interactions are communications between distinct, uniformly chosen processes.
pub fn generate(p: &GenParams) -> Result<Choreography, GenError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let processes: Vec<ProcessName> = (1..=p.processes).map(|i| format!("p{i}").into()).collect();
    let procs: Vec<ProcName> = (1..=p.defs).map(|i| format!("X{i}").into()).collect();
    for _ in 0..MAX_ATTEMPTS {
        let mut split = vec![(0usize, 0usize); p.defs + 1];
        for _ in 0..p.size - p.ifs {
            split[rng.gen_range(0..=p.defs)].0 += 1;
        }
        for _ in 0..p.ifs {
            split[rng.gen_range(0..=p.defs)].1 += 1;
        }
        let mut g = Generator {
            rng: &mut rng,
            processes: processes.clone(),
            procs: procs.clone(),
            fresh: 0,
        };
        let main = g.body(split[0].0, split[0].1, true);
        let mut procedures = BTreeMap::new();
        for (i, x) in procs.iter().enumerate() {
            let (a, f) = split[i + 1];
            // An empty procedure body must not be a bare call.
            let body = g.body(a, f, a + f > 0);
            procedures.insert(x.clone(), Arc::new(body));
        }
        let c = Choreography::new(procedures, main).expect("generated choreography is valid");
        if reachable(&c).len() == p.defs {
            return Ok(c);
        }
    }
    Err(GenError::Unreachable(MAX_ATTEMPTS))
}

fn projection_conflict(
    projector: &Projector<'_>,
    then: &Arc<ChorBody>,
    els: &Arc<ChorBody>,
    r: &ProcessName,
) -> bool {
    match (projector.project_body(then, r), projector.project_body(els, r)) {
        (Ok(a), Ok(b)) => merge(&a, &b).is_err(),
        _ => true,
    }
}

fn amend_body(
    body: &Arc<ChorBody>,
    projector: &Projector<'_>,
    processes: &BTreeSet<ProcessName>,
) -> Arc<ChorBody> {
    match &**body {
        ChorBody::Nil | ChorBody::Dlock | ChorBody::Call(_) => Arc::clone(body),
        ChorBody::Com {
            from,
            expr,
            to,
            var,
            cont,
        } => Arc::new(ChorBody::Com {
            from: from.clone(),
            expr: expr.clone(),
            to: to.clone(),
            var: var.clone(),
            cont: amend_body(cont, projector, processes),
        }),
        ChorBody::Sel {
            from,
            to,
            label,
            cont,
        } => Arc::new(ChorBody::Sel {
            from: from.clone(),
            to: to.clone(),
            label: label.clone(),
            cont: amend_body(cont, projector, processes),
        }),
        ChorBody::Cond {
            process,
            expr,
            then,
            els,
        } => {
            let mut then = amend_body(then, projector, processes);
            let mut els = amend_body(els, projector, processes);
            let conflicts: Vec<&ProcessName> = processes
                .iter()
                .filter(|r| *r != process && projection_conflict(projector, &then, &els, r))
                .collect();
            for r in conflicts.into_iter().rev() {
                then = Arc::new(ChorBody::Sel {
                    from: process.clone(),
                    to: r.clone(),
                    label: "thenL".into(),
                    cont: then,
                });
                els = Arc::new(ChorBody::Sel {
                    from: process.clone(),
                    to: r.clone(),
                    label: "elseL".into(),
                    cont: els,
                });
            }
            Arc::new(ChorBody::Cond {
                process: process.clone(),
                expr: expr.clone(),
                then,
                els,
            })
        }
    }
}

/// Inserts selections at the head of conditional branches until the choreography projects.
pub fn amend(c: &Choreography) -> Result<Choreography, GenError> {
    let mut current = c.clone();
    let processes = c.processes();
    for _ in 0..MAX_AMEND_PASSES {
        let err = match epp(&current) {
            Ok(_) => return Ok(current),
            Err(e) => e,
        };
        let projector = Projector::new(&current);
        let next = Choreography {
            procedures: current
                .procedures
                .iter()
                .map(|(x, b)| (x.clone(), amend_body(b, &projector, &processes)))
                .collect(),
            main: amend_body(&current.main, &projector, &processes),
        };
        if next == current {
            return Err(GenError::Amend(err.to_string()));
        }
        current = next;
    }
    match epp(&current) {
        Ok(_) => Ok(current),
        Err(e) => Err(GenError::Amend(e.to_string())),
    }
}

fn interaction_processes(b: &ChorBody) -> Option<[&ProcessName; 2]> {
    match b {
        ChorBody::Com { from, to, .. } | ChorBody::Sel { from, to, .. } => Some([from, to]),
        _ => None,
    }
}

fn with_cont(b: &ChorBody, cont: Arc<ChorBody>) -> ChorBody {
    match b {
        ChorBody::Com {
            from,
            expr,
            to,
            var,
            ..
        } => ChorBody::Com {
            from: from.clone(),
            expr: expr.clone(),
            to: to.clone(),
            var: var.clone(),
            cont,
        },
        ChorBody::Sel {
            from, to, label, ..
        } => ChorBody::Sel {
            from: from.clone(),
            to: to.clone(),
            label: label.clone(),
            cont,
        },
        _ => unreachable!("not an interaction"),
    }
}

fn inefficient(body: &Arc<ChorBody>, rng: &mut ChaCha8Rng) -> Arc<ChorBody> {
    match &**body {
        ChorBody::Nil | ChorBody::Dlock | ChorBody::Call(_) => Arc::clone(body),
        ChorBody::Com { cont, .. } | ChorBody::Sel { cont, .. } => {
            let cont = inefficient(cont, rng);
            let pn = interaction_processes(body).expect("interaction");
            if let ChorBody::Cond {
                process,
                expr,
                then,
                els,
            } = &*cont
            {
                if !pn.contains(&process) && rng.gen_bool(0.5) {
                    return Arc::new(ChorBody::Cond {
                        process: process.clone(),
                        expr: expr.clone(),
                        then: Arc::new(with_cont(body, Arc::clone(then))),
                        els: Arc::new(with_cont(body, Arc::clone(els))),
                    });
                }
            }
            Arc::new(with_cont(body, cont))
        }
        ChorBody::Cond {
            process,
            expr,
            then,
            els,
        } => {
            let then = inefficient(then, rng);
            let els = inefficient(els, rng);
            if let (
                ChorBody::Cond {
                    process: q,
                    expr: f,
                    then: t1,
                    els: e1,
                },
                ChorBody::Cond {
                    process: q2,
                    expr: f2,
                    then: t2,
                    els: e2,
                },
            ) = (&*then, &*els)
            {
                if q == q2 && f == f2 && q != process && rng.gen_bool(0.5) {
                    let inner = |a: &Arc<ChorBody>, b: &Arc<ChorBody>| {
                        Arc::new(ChorBody::Cond {
                            process: process.clone(),
                            expr: expr.clone(),
                            then: Arc::clone(a),
                            els: Arc::clone(b),
                        })
                    };
                    return Arc::new(ChorBody::Cond {
                        process: q.clone(),
                        expr: f.clone(),
                        then: inner(t1, t2),
                        els: inner(e1, e2),
                    });
                }
            }
            Arc::new(ChorBody::Cond {
                process: process.clone(),
                expr: expr.clone(),
                then,
                els,
            })
        }
    }
}

/// Pushes interactions into the branches of following conditionals, and swaps nested
/// conditionals on the same guard, at random eligible sites.
pub fn inject_inefficiency(c: &Choreography, seed: u64) -> Choreography {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let main = inefficient(&c.main, &mut rng);
    let procedures = c
        .procedures
        .iter()
        .map(|(x, b)| (x.clone(), inefficient(b, &mut rng)))
        .collect();
    Choreography { procedures, main }
}

/// The projectable test choreography for `p`: generated, amended, made inefficient and amended
/// again where the rewriting broke projectability.
pub fn generate_projectable(p: &GenParams, inefficiency: bool) -> Result<Choreography, GenError> {
    let c = amend(&generate(p)?)?;
    if inefficiency {
        amend(&inject_inefficiency(&c, p.seed ^ 0x9e37_79b9_7f4a_7c15))
    } else {
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FuzzParams {
    pub deletions: usize,
    pub swaps: usize,
    pub seed: u64,
}

/// What was done to which process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub process: ProcessName,
    pub deletions: usize,
    pub swaps: usize,
}

fn count_actions(b: &Behaviour) -> usize {
    match b {
        Behaviour::Nil | Behaviour::Call(_) => 0,
        Behaviour::Send { cont, .. }
        | Behaviour::Receive { cont, .. }
        | Behaviour::Select { cont, .. } => 1 + count_actions(cont),
        Behaviour::Offer { branches, .. } => {
            1 + branches.values().map(|c| count_actions(c)).sum::<usize>()
        }
        Behaviour::Cond { then, els, .. } => 1 + count_actions(then) + count_actions(els),
    }
}

fn term_actions(t: &ProcessTerm) -> usize {
    count_actions(&t.main) + t.procedures.values().map(|b| count_actions(b)).sum::<usize>()
}

fn replace_cont(b: &Behaviour, cont: Arc<Behaviour>) -> Behaviour {
    match b {
        Behaviour::Send { to, expr, .. } => Behaviour::Send {
            to: to.clone(),
            expr: expr.clone(),
            cont,
        },
        Behaviour::Receive { from, var, .. } => Behaviour::Receive {
            from: from.clone(),
            var: var.clone(),
            cont,
        },
        Behaviour::Select { to, label, .. } => Behaviour::Select {
            to: to.clone(),
            label: label.clone(),
            cont,
        },
        _ => unreachable!("not a prefix action"),
    }
}

fn prefix_cont(b: &Behaviour) -> Option<&Arc<Behaviour>> {
    match b {
        Behaviour::Send { cont, .. }
        | Behaviour::Receive { cont, .. }
        | Behaviour::Select { cont, .. } => Some(cont),
        _ => None,
    }
}

fn delete_here(b: &Behaviour) -> Arc<Behaviour> {
    match b {
        Behaviour::Send { cont, .. }
        | Behaviour::Receive { cont, .. }
        | Behaviour::Select { cont, .. } => Arc::clone(cont),
        Behaviour::Cond { then, .. } => Arc::clone(then),
        Behaviour::Offer { branches, .. } => {
            Arc::clone(branches.values().next().expect("nonempty offer"))
        }
        Behaviour::Nil | Behaviour::Call(_) => unreachable!("not an action"),
    }
}

fn swap_here(b: &Arc<Behaviour>) -> Arc<Behaviour> {
    match &**b {
        Behaviour::Send { cont, .. }
        | Behaviour::Receive { cont, .. }
        | Behaviour::Select { cont, .. } => match &**cont {
            Behaviour::Nil | Behaviour::Call(_) => Arc::clone(cont),
            Behaviour::Offer { from, branches } => Arc::new(Behaviour::Offer {
                from: from.clone(),
                branches: branches
                    .iter()
                    .map(|(l, c)| (l.clone(), Arc::new(replace_cont(b, Arc::clone(c)))))
                    .collect(),
            }),
            Behaviour::Cond { expr, then, els } => Arc::new(Behaviour::Cond {
                expr: expr.clone(),
                then: Arc::new(replace_cont(b, Arc::clone(then))),
                els: Arc::new(replace_cont(b, Arc::clone(els))),
            }),
            next => {
                let rest = prefix_cont(next).expect("prefix action");
                Arc::new(replace_cont(next, Arc::new(replace_cont(b, Arc::clone(rest)))))
            }
        },
        Behaviour::Cond { expr, then, els } => match prefix_cont(then) {
            Some(rest) => Arc::new(replace_cont(
                then,
                Arc::new(Behaviour::Cond {
                    expr: expr.clone(),
                    then: Arc::clone(rest),
                    els: Arc::clone(els),
                }),
            )),
            None => Arc::clone(then),
        },
        Behaviour::Offer { from, branches } => {
            let (first_label, first) = branches.iter().next().expect("nonempty offer");
            match prefix_cont(first) {
                Some(rest) => {
                    let mut branches = branches.clone();
                    branches.insert(first_label.clone(), Arc::clone(rest));
                    Arc::new(replace_cont(
                        first,
                        Arc::new(Behaviour::Offer {
                            from: from.clone(),
                            branches,
                        }),
                    ))
                }
                None => Arc::clone(first),
            }
        }
        Behaviour::Nil | Behaviour::Call(_) => unreachable!("not an action"),
    }
}

/// Applies `op` to the action at preorder position `*index`; returns `None` when the position
/// lies beyond this subterm, after subtracting its action count.
fn at_index(
    b: &Arc<Behaviour>,
    index: &mut usize,
    op: &dyn Fn(&Arc<Behaviour>) -> Arc<Behaviour>,
) -> Option<Arc<Behaviour>> {
    if matches!(**b, Behaviour::Nil | Behaviour::Call(_)) {
        return None;
    }
    if *index == 0 {
        return Some(op(b));
    }
    *index -= 1;
    match &**b {
        Behaviour::Send { cont, .. }
        | Behaviour::Receive { cont, .. }
        | Behaviour::Select { cont, .. } => {
            at_index(cont, index, op).map(|c| Arc::new(replace_cont(b, c)))
        }
        Behaviour::Cond { expr, then, els } => {
            if let Some(t) = at_index(then, index, op) {
                return Some(Arc::new(Behaviour::Cond {
                    expr: expr.clone(),
                    then: t,
                    els: Arc::clone(els),
                }));
            }
            at_index(els, index, op).map(|e| {
                Arc::new(Behaviour::Cond {
                    expr: expr.clone(),
                    then: Arc::clone(then),
                    els: e,
                })
            })
        }
        Behaviour::Offer { from, branches } => {
            for (l, c) in branches {
                if let Some(new) = at_index(c, index, op) {
                    let mut branches = branches.clone();
                    branches.insert(l.clone(), new);
                    return Some(Arc::new(Behaviour::Offer {
                        from: from.clone(),
                        branches,
                    }));
                }
            }
            None
        }
        Behaviour::Nil | Behaviour::Call(_) => None,
    }
}

fn edit_term(
    t: &ProcessTerm,
    mut index: usize,
    op: &dyn Fn(&Arc<Behaviour>) -> Arc<Behaviour>,
) -> ProcessTerm {
    if let Some(main) = at_index(&t.main, &mut index, op) {
        return t.with_main(main);
    }
    let mut procedures = (*t.procedures).clone();
    for (x, body) in t.procedures.iter() {
        if let Some(new) = at_index(body, &mut index, op) {
            procedures.insert(x.clone(), new);
            return ProcessTerm {
                procedures: Arc::new(procedures),
                main: Arc::clone(&t.main),
            };
        }
    }
    t.clone()
}

/// Deletes and swaps actions of one randomly chosen process that has any actions.
pub fn fuzz(n: &Network, p: &FuzzParams) -> (Network, Option<FuzzReport>) {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let candidates: Vec<&ProcessName> = n
        .processes
        .iter()
        .filter(|(_, t)| term_actions(t) > 0)
        .map(|(q, _)| q)
        .collect();
    let Some(&target) = candidates.choose(&mut rng) else {
        return (n.clone(), None);
    };
    let mut term = n.processes[target].clone();
    let mut report = FuzzReport {
        process: target.clone(),
        deletions: 0,
        swaps: 0,
    };
    for _ in 0..p.deletions {
        let total = term_actions(&term);
        if total == 0 {
            break;
        }
        term = edit_term(&term, rng.gen_range(0..total), &|b| delete_here(b));
        report.deletions += 1;
    }
    for _ in 0..p.swaps {
        let total = term_actions(&term);
        if total == 0 {
            break;
        }
        term = edit_term(&term, rng.gen_range(0..total), &swap_here);
        report.swaps += 1;
    }
    let mut out = n.clone();
    out.processes.insert(target.clone(), term);
    (out, Some(report))
}

fn action_chain(body: &Arc<Behaviour>, x: &ProcName) -> Option<Vec<Arc<Behaviour>>> {
    let mut chain = Vec::new();
    let mut cur = body;
    loop {
        match &**cur {
            Behaviour::Call(y) if y == x => return Some(chain),
            b => {
                let cont = prefix_cont(b)?;
                chain.push(Arc::clone(cur));
                cur = cont;
            }
        }
    }
}

fn rebuild_chain(actions: &[Arc<Behaviour>], tail: Arc<Behaviour>) -> Arc<Behaviour> {
    actions
        .iter()
        .rev()
        .fold(tail, |acc, a| Arc::new(replace_cont(a, acc)))
}

fn map_calls(b: &Arc<Behaviour>, f: &dyn Fn(&ProcName) -> Option<Arc<Behaviour>>) -> Arc<Behaviour> {
    match &**b {
        Behaviour::Nil => Arc::clone(b),
        Behaviour::Call(x) => f(x).unwrap_or_else(|| Arc::clone(b)),
        Behaviour::Send { cont, .. }
        | Behaviour::Receive { cont, .. }
        | Behaviour::Select { cont, .. } => Arc::new(replace_cont(b, map_calls(cont, f))),
        Behaviour::Offer { from, branches } => Arc::new(Behaviour::Offer {
            from: from.clone(),
            branches: branches
                .iter()
                .map(|(l, c)| (l.clone(), map_calls(c, f)))
                .collect(),
        }),
        Behaviour::Cond { expr, then, els } => Arc::new(Behaviour::Cond {
            expr: expr.clone(),
            then: map_calls(then, f),
            els: map_calls(els, f),
        }),
    }
}

fn count_calls(b: &Behaviour) -> usize {
    let mut n = 0;
    b.for_each_call(&mut |_| n += 1);
    n
}

/// Replaces the call at preorder position `*index` with the body of the called procedure.
fn inline_at(b: &Arc<Behaviour>, index: &mut usize, procs: &BTreeMap<ProcName, Arc<Behaviour>>) -> Arc<Behaviour> {
    match &**b {
        Behaviour::Nil => Arc::clone(b),
        Behaviour::Call(x) => {
            let here = *index == 0;
            *index = index.wrapping_sub(1);
            if here {
                Arc::clone(&procs[x])
            } else {
                Arc::clone(b)
            }
        }
        Behaviour::Send { cont, .. }
        | Behaviour::Receive { cont, .. }
        | Behaviour::Select { cont, .. } => Arc::new(replace_cont(b, inline_at(cont, index, procs))),
        Behaviour::Offer { from, branches } => Arc::new(Behaviour::Offer {
            from: from.clone(),
            branches: branches
                .iter()
                .map(|(l, c)| (l.clone(), inline_at(c, index, procs)))
                .collect(),
        }),
        Behaviour::Cond { expr, then, els } => {
            let then = inline_at(then, index, procs);
            let els = inline_at(els, index, procs);
            Arc::new(Behaviour::Cond {
                expr: expr.clone(),
                then,
                els,
            })
        }
    }
}

/// What [`unroll`] did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnrollReport {
    pub process: ProcessName,
    pub inlined: usize,
    /// Procedure whose loop was rotated, with the name of its replacement.
    pub rotated: Option<(ProcName, ProcName)>,
}

/// Behaviour-preserving rewrite of one process: rotates one action-chain loop and inlines
/// one to three calls.
pub fn unroll(n: &Network, seed: u64) -> (Network, Option<UnrollReport>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<&ProcessName> = n
        .processes
        .iter()
        .filter(|(_, t)| !t.procedures.is_empty())
        .map(|(p, _)| p)
        .collect();
    let Some(&target) = candidates.choose(&mut rng) else {
        return (n.clone(), None);
    };
    let term = &n.processes[target];
    let mut procs: BTreeMap<ProcName, Arc<Behaviour>> = (*term.procedures).clone();
    let mut main = Arc::clone(&term.main);
    let mut report = UnrollReport {
        process: target.clone(),
        inlined: 0,
        rotated: None,
    };

    let loops: Vec<(ProcName, Vec<Arc<Behaviour>>)> = procs
        .iter()
        .filter_map(|(x, b)| action_chain(b, x).map(|c| (x.clone(), c)))
        .filter(|(_, c)| c.len() >= 2)
        .collect();
    if let Some((x, chain)) = loops.choose(&mut rng) {
        let j = rng.gen_range(1..chain.len());
        let mut k = 1;
        let fresh = loop {
            let name = ProcName::new(format!("{x}_{k}"));
            if !procs.contains_key(&name) {
                break name;
            }
            k += 1;
        };
        let rotated: Vec<Arc<Behaviour>> = chain[j..].iter().chain(&chain[..j]).cloned().collect();
        let body = rebuild_chain(&rotated, Arc::new(Behaviour::Call(fresh.clone())));
        let entry = rebuild_chain(&chain[..j], Arc::new(Behaviour::Call(fresh.clone())));
        procs.remove(x);
        let redirect = |y: &ProcName| (y == x).then(|| Arc::clone(&entry));
        main = map_calls(&main, &redirect);
        for b in procs.values_mut() {
            *b = map_calls(b, &redirect);
        }
        procs.insert(fresh.clone(), body);
        report.rotated = Some((x.clone(), fresh));
    }

    for _ in 0..rng.gen_range(1..=3) {
        let in_main = count_calls(&main);
        let total = in_main + procs.values().map(|b| count_calls(b)).sum::<usize>();
        if total == 0 {
            break;
        }
        let mut index = rng.gen_range(0..total);
        if index < in_main {
            main = inline_at(&main, &mut index, &procs);
        } else {
            index -= in_main;
            let snapshot = procs.clone();
            for b in procs.values_mut() {
                let here = count_calls(b);
                if index < here {
                    *b = inline_at(b, &mut index, &snapshot);
                    break;
                }
                index -= here;
            }
        }
        report.inlined += 1;
    }

    let mut out = n.clone();
    out.processes.insert(
        target.clone(),
        ProcessTerm {
            procedures: Arc::new(procs),
            main,
        },
    );
    (out, Some(report))
}
