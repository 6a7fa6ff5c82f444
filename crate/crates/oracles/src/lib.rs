//! Slow reference implementations used to cross-check the engine in tests.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use chorex_core::semantics::{enabled_steps, AnnotatedNetwork};
use chorex_core::testgen::{fuzz, generate, FuzzParams, GenParams};
use chorex_core::{
    epp::epp, ActionLabel, Behaviour, ChorBody, Choreography, Network, ProcName, ProcessName,
    ProcessTerm,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Whether any node at stack positions `target..` is white.
pub fn loop_scan(whites: &[bool], target: usize) -> bool {
    whites[target..].iter().any(|w| *w)
}

/// One choice at a node: the successors of an interaction, or of a Then/Else pair.
fn choices(an: &AnnotatedNetwork) -> Vec<Vec<AnnotatedNetwork>> {
    let steps = enabled_steps(an);
    let mut out = Vec::new();
    let mut i = 0;
    while i < steps.len() {
        if matches!(steps[i].label, ActionLabel::Then { .. }) {
            out.push(vec![steps[i].successor.clone(), steps[i + 1].successor.clone()]);
            i += 2;
        } else {
            out.push(vec![steps[i].successor.clone()]);
            i += 1;
        }
    }
    out
}

struct Search {
    ids: HashMap<AnnotatedNetwork, usize>,
    nets: Vec<AnnotatedNetwork>,
    white: Vec<bool>,
    options: Vec<Option<Vec<Vec<usize>>>>,
    chosen: Vec<Option<usize>>,
    budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteForce {
    Exists,
    None,
    /// Gave up after the step budget.
    Unknown,
}

impl Search {
    fn id(&mut self, an: &AnnotatedNetwork) -> usize {
        if let Some(&i) = self.ids.get(an) {
            return i;
        }
        let i = self.nets.len();
        self.ids.insert(an.clone(), i);
        self.white.push(an.is_white());
        self.nets.push(an.clone());
        self.options.push(None);
        self.chosen.push(None);
        i
    }

    fn options(&mut self, n: usize) -> Vec<Vec<usize>> {
        if self.options[n].is_none() {
            let opts = choices(&self.nets[n].clone())
                .into_iter()
                .map(|succ| succ.iter().map(|s| self.id(s)).collect())
                .collect();
            self.options[n] = Some(opts);
        }
        self.options[n].clone().expect("computed")
    }

    fn successors(&self, n: usize) -> &[usize] {
        match self.chosen[n] {
            Some(c) => &self.options[n].as_ref().expect("computed")[c],
            None => &[],
        }
    }

    /// Whether `to` reaches `from` through non-white nodes under the current choices.
    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = HashSet::new();
        let mut todo = vec![from];
        while let Some(n) = todo.pop() {
            if n == to {
                return true;
            }
            if self.white[n] || !seen.insert(n) {
                continue;
            }
            todo.extend_from_slice(self.successors(n));
        }
        false
    }

    fn solve(&mut self, open: Vec<usize>) -> BruteForce {
        if self.budget == 0 {
            return BruteForce::Unknown;
        }
        self.budget -= 1;
        let Some(pos) = open.iter().position(|&n| self.chosen[n].is_none()) else {
            return BruteForce::Exists;
        };
        let n = open[pos];
        let opts = self.options(n);
        if opts.is_empty() {
            let mut rest = open;
            rest.remove(pos);
            return self.solve(rest);
        }
        let mut unknown = false;
        for (c, succ) in opts.iter().enumerate() {
            self.chosen[n] = Some(c);
            let closes_bad_cycle =
                !self.white[n] && succ.iter().any(|&s| !self.white[s] && self.reaches(s, n));
            if !closes_bad_cycle {
                let mut rest = open.clone();
                rest.remove(pos);
                for &s in succ {
                    if self.chosen[s].is_none() && !rest.contains(&s) && !self.done(s) {
                        rest.push(s);
                    }
                }
                match self.solve(rest) {
                    BruteForce::Exists => return BruteForce::Exists,
                    BruteForce::Unknown => unknown = true,
                    BruteForce::None => {}
                }
            }
            self.chosen[n] = None;
        }
        if unknown {
            BruteForce::Unknown
        } else {
            BruteForce::None
        }
    }

    fn done(&mut self, n: usize) -> bool {
        self.chosen[n].is_some() || self.options(n).is_empty()
    }
}

/// Exhaustive search for a valid SEG in which every annotated network has one chosen action
/// (both outcomes for a conditional) and every cycle passes through a white node.
pub fn valid_seg_exists(root: &AnnotatedNetwork, budget: usize) -> BruteForce {
    let mut s = Search {
        ids: HashMap::new(),
        nets: Vec::new(),
        white: Vec::new(),
        options: Vec::new(),
        chosen: Vec::new(),
        budget,
    };
    let r = s.id(root);
    s.solve(vec![r])
}

fn disjoint(a: &ChorBody, b: &ChorBody) -> bool {
    let mut x = BTreeSet::new();
    let mut y = BTreeSet::new();
    head_processes(a, &mut x);
    head_processes(b, &mut y);
    x.is_disjoint(&y)
}

fn head_processes(b: &ChorBody, out: &mut BTreeSet<ProcessName>) {
    match b {
        ChorBody::Com { from, to, .. } | ChorBody::Sel { from, to, .. } => {
            out.insert(from.clone());
            out.insert(to.clone());
        }
        ChorBody::Cond { process, .. } => {
            out.insert(process.clone());
        }
        _ => {}
    }
}

fn cont_of(b: &ChorBody) -> Option<&Arc<ChorBody>> {
    match b {
        ChorBody::Com { cont, .. } | ChorBody::Sel { cont, .. } => Some(cont),
        _ => None,
    }
}

fn with_cont(b: &ChorBody, cont: Arc<ChorBody>) -> ChorBody {
    match b {
        ChorBody::Com { from, expr, to, var, .. } => ChorBody::Com {
            from: from.clone(),
            expr: expr.clone(),
            to: to.clone(),
            var: var.clone(),
            cont,
        },
        ChorBody::Sel { from, to, label, .. } => ChorBody::Sel {
            from: from.clone(),
            to: to.clone(),
            label: label.clone(),
            cont,
        },
        _ => unreachable!(),
    }
}

fn head_label(b: &ChorBody) -> Option<ActionLabel> {
    Some(match b {
        ChorBody::Com { from, expr, to, var, .. } => ActionLabel::Com {
            from: from.clone(),
            expr: expr.clone(),
            to: to.clone(),
            var: var.clone(),
        },
        ChorBody::Sel { from, to, label, .. } => ActionLabel::Sel {
            from: from.clone(),
            to: to.clone(),
            label: label.clone(),
        },
        _ => return None,
    })
}

/// All bodies one structural-congruence step away from `b`, at any position.
fn rewrites(c: &Choreography, b: &Arc<ChorBody>) -> Vec<Arc<ChorBody>> {
    let mut out = Vec::new();
    match &**b {
        ChorBody::Call(x) => {
            if let Some(body) = c.procedures.get(x) {
                out.push(Arc::clone(body));
            }
        }
        ChorBody::Com { .. } | ChorBody::Sel { .. } => {
            let cont = cont_of(b).expect("interaction");
            match &**cont {
                ChorBody::Com { .. } | ChorBody::Sel { .. } if disjoint(b, cont) => {
                    let inner = cont_of(cont).expect("interaction");
                    out.push(Arc::new(with_cont(cont, Arc::new(with_cont(b, Arc::clone(inner))))));
                }
                ChorBody::Cond { process, expr, then, els } if disjoint(b, cont) => {
                    out.push(Arc::new(ChorBody::Cond {
                        process: process.clone(),
                        expr: expr.clone(),
                        then: Arc::new(with_cont(b, Arc::clone(then))),
                        els: Arc::new(with_cont(b, Arc::clone(els))),
                    }));
                }
                _ => {}
            }
            for r in rewrites(c, cont) {
                out.push(Arc::new(with_cont(b, r)));
            }
        }
        ChorBody::Cond { process, expr, then, els } => {
            if let (Some(a), Some(a2)) = (head_label(then), head_label(els)) {
                if a == a2 && !a.involves(process) {
                    out.push(Arc::new(with_cont(
                        then,
                        Arc::new(ChorBody::Cond {
                            process: process.clone(),
                            expr: expr.clone(),
                            then: Arc::clone(cont_of(then).expect("interaction")),
                            els: Arc::clone(cont_of(els).expect("interaction")),
                        }),
                    )));
                }
            }
            if let (
                ChorBody::Cond { process: q, expr: f, then: t1, els: e1 },
                ChorBody::Cond { process: q2, expr: f2, then: t2, els: e2 },
            ) = (&**then, &**els)
            {
                if q == q2 && f == f2 && q != process {
                    let inner = |a: &Arc<ChorBody>, b: &Arc<ChorBody>| {
                        Arc::new(ChorBody::Cond {
                            process: process.clone(),
                            expr: expr.clone(),
                            then: Arc::clone(a),
                            els: Arc::clone(b),
                        })
                    };
                    out.push(Arc::new(ChorBody::Cond {
                        process: q.clone(),
                        expr: f.clone(),
                        then: inner(t1, t2),
                        els: inner(e1, e2),
                    }));
                }
            }
            for r in rewrites(c, then) {
                out.push(Arc::new(ChorBody::Cond {
                    process: process.clone(),
                    expr: expr.clone(),
                    then: r,
                    els: Arc::clone(els),
                }));
            }
            for r in rewrites(c, els) {
                out.push(Arc::new(ChorBody::Cond {
                    process: process.clone(),
                    expr: expr.clone(),
                    then: Arc::clone(then),
                    els: r,
                }));
            }
        }
        ChorBody::Nil | ChorBody::Dlock => {}
    }
    out
}

/// Head actions of every body reachable from `body` by at most `depth` congruence rewrites.
pub fn rewrite_enabled(c: &Choreography, body: &Arc<ChorBody>, depth: usize) -> BTreeSet<ActionLabel> {
    let mut seen: HashSet<Arc<ChorBody>> = HashSet::from([Arc::clone(body)]);
    let mut frontier = vec![Arc::clone(body)];
    for _ in 0..depth {
        let mut next = Vec::new();
        for b in &frontier {
            for r in rewrites(c, b) {
                if seen.insert(Arc::clone(&r)) {
                    next.push(r);
                }
            }
        }
        frontier = next;
    }
    let mut out = BTreeSet::new();
    for b in seen {
        if let Some(l) = head_label(&b) {
            out.insert(l);
        }
        if let ChorBody::Cond { process, expr, .. } = &*b {
            out.insert(ActionLabel::Then { process: process.clone(), expr: expr.clone() });
            out.insert(ActionLabel::Else { process: process.clone(), expr: expr.clone() });
        }
    }
    out
}

fn random_behaviour(
    rng: &mut ChaCha8Rng,
    me: &ProcessName,
    peers: &[ProcessName],
    budget: usize,
    procs: &[ProcName],
) -> Behaviour {
    if budget == 0 {
        return match procs.choose(rng) {
            Some(x) if rng.gen_bool(0.6) => Behaviour::Call(x.clone()),
            _ => Behaviour::Nil,
        };
    }
    let peer = peers.iter().filter(|q| *q != me).collect::<Vec<_>>();
    let to = (*peer.choose(rng).expect("a peer")).clone();
    let rest = |rng: &mut ChaCha8Rng, b| random_behaviour(rng, me, peers, b, procs);
    match rng.gen_range(0..10) {
        0..=2 => Behaviour::send(to, ["e", "f"][rng.gen_range(0..2)], rest(rng, budget - 1)),
        3..=5 => Behaviour::receive(to, "x", rest(rng, budget - 1)),
        6 => Behaviour::select(to, ["l", "r"][rng.gen_range(0..2)], rest(rng, budget - 1)),
        7 => {
            let a = rest(rng, (budget - 1) / 2);
            let b = rest(rng, (budget - 1) / 2);
            Behaviour::offer(to, [("l", a), ("r", b)]).expect("nonempty offer")
        }
        _ => {
            let a = rest(rng, (budget - 1) / 2);
            let b = rest(rng, (budget - 1) / 2);
            Behaviour::cond("c", a, b)
        }
    }
}

/// Small random network: half are projections of random choreographies (possibly fuzzed), the
/// rest are unrelated random process terms. Every process has AST size at most `max_size`.
pub fn small_network(seed: u64, max_processes: usize, max_size: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(2..=max_processes);
        let candidate = if rng.gen_bool(0.5) {
            let params = GenParams {
                size: rng.gen_range(1..=4),
                processes: n,
                ifs: rng.gen_range(0..=1),
                defs: rng.gen_range(0..=1),
                seed: rng.gen(),
            };
            let Ok(c) = generate(&params).and_then(|c| chorex_core::testgen::amend(&c)) else {
                continue;
            };
            let Ok(net) = epp(&c) else { continue };
            if rng.gen_bool(0.5) {
                let d = rng.gen_range(0..=1);
                fuzz(&net, &FuzzParams { deletions: d, swaps: 1 - d, seed: rng.gen() }).0
            } else {
                net
            }
        } else {
            let names: Vec<ProcessName> = ["p", "q", "r"][..n].iter().map(|s| (*s).into()).collect();
            let mut processes = std::collections::BTreeMap::new();
            for p in &names {
                let procs: Vec<ProcName> = if rng.gen_bool(0.6) { vec!["X".into()] } else { vec![] };
                let mut defs = chorex_core::Procedures::new();
                for x in &procs {
                    let budget = rng.gen_range(1..=3);
                    let body = random_behaviour(&mut rng, p, &names, budget, &procs);
                    defs.insert(x.clone(), Arc::new(body));
                }
                let budget = rng.gen_range(0..=3);
                let main = random_behaviour(&mut rng, p, &names, budget, &procs);
                processes.insert(p.clone(), ProcessTerm { procedures: Arc::new(defs), main: Arc::new(main) });
            }
            Network { processes }
        };
        let small = candidate.processes.values().all(|t| t.size() <= max_size);
        let valid = chorex_core::checks::check_all(&candidate).ok;
        if small && valid && candidate.len() <= max_processes {
            return candidate;
        }
    }
}

/// Small random choreography for enablement checks: a few interactions, at most one
/// conditional, optionally one looping procedure.
pub fn small_choreography(seed: u64) -> Choreography {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = GenParams {
        size: rng.gen_range(1..=4),
        processes: rng.gen_range(2..=4),
        ifs: rng.gen_range(0..=1),
        defs: rng.gen_range(0..=1),
        seed: rng.gen(),
    };
    generate(&params).expect("small parameters generate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use chorex_core::parse_network;

    fn root(text: &str) -> AnnotatedNetwork {
        AnnotatedNetwork::initial(parse_network(text).unwrap(), &BTreeSet::new())
    }

    #[test]
    fn scan() {
        assert!(loop_scan(&[true, false], 0));
        assert!(!loop_scan(&[true, false, false], 1));
    }

    #[test]
    fn brute_force_examples() {
        let starve = root(
            "p { def X { q!<e>; X } main { X } } | q { def Y { p?x; Y } main { Y } } \
             | r { def Z { s!<f>; Z } main { Z } } | s { def W { r?y; W } main { W } }",
        );
        assert_eq!(valid_seg_exists(&starve, 10_000), BruteForce::Exists);
        let livelock = root(
            "p { def X { q!<e>; X } main { X } } | q { def Y { p?x; Y } main { Y } } \
             | r { def Z { p?y; Z } main { Z } }",
        );
        assert_eq!(valid_seg_exists(&livelock, 10_000), BruteForce::None);
    }

    #[test]
    fn generated_networks_are_small() {
        for s in 0..20 {
            let n = small_network(s, 3, 8);
            assert!(n.len() <= 3);
            assert!(n.processes.values().all(|t| t.size() <= 8));
        }
    }
}
