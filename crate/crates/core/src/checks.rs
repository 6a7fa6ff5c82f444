//! Pre-extraction validation of networks.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::ast::{Behaviour, Network, ProcName, ProcessName, ProcessTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    SelfCommunication,
    UnresolvedCall,
    /// Unrepresentable once parsed (procedures are keyed by name); reported by the parser.
    DuplicateProcedure,
    EmptyOffer,
    UnguardedRecursion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub process: ProcessName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub procedure: Option<ProcName>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Conditions that cannot be decided and were not checked.
    pub skipped: Vec<String>,
}

impl CheckReport {
    fn from_violations(violations: Vec<Violation>, skipped: Vec<String>) -> Self {
        CheckReport {
            ok: violations.is_empty(),
            violations,
            skipped,
        }
    }

    /// Concatenates two reports.
    pub fn and(mut self, other: CheckReport) -> CheckReport {
        self.violations.extend(other.violations);
        for s in other.skipped {
            if !self.skipped.contains(&s) {
                self.skipped.push(s);
            }
        }
        self.ok = self.violations.is_empty();
        self
    }
}

fn bodies(term: &ProcessTerm) -> impl Iterator<Item = (Option<&ProcName>, &Behaviour)> {
    std::iter::once((None, &*term.main))
        .chain(term.procedures.iter().map(|(x, b)| (Some(x), &**b)))
}

fn self_communications(me: &ProcessName, b: &Behaviour, found: &mut Vec<String>) {
    match b {
        Behaviour::Nil | Behaviour::Call(_) => {}
        Behaviour::Send { to: peer, cont, .. }
        | Behaviour::Receive {
            from: peer, cont, ..
        }
        | Behaviour::Select { to: peer, cont, .. } => {
            if peer == me {
                found.push(b.to_string().split(';').next().unwrap_or_default().to_string());
            }
            self_communications(me, cont, found);
        }
        Behaviour::Offer { from, branches } => {
            if from == me {
                found.push(format!("{from}&{{...}}"));
            }
            for c in branches.values() {
                self_communications(me, c, found);
            }
        }
        Behaviour::Cond { then, els, .. } => {
            self_communications(me, then, found);
            self_communications(me, els, found);
        }
    }
}

fn has_empty_offer(b: &Behaviour) -> bool {
    match b {
        Behaviour::Nil | Behaviour::Call(_) => false,
        Behaviour::Send { cont, .. }
        | Behaviour::Receive { cont, .. }
        | Behaviour::Select { cont, .. } => has_empty_offer(cont),
        Behaviour::Offer { branches, .. } => {
            branches.is_empty() || branches.values().any(|c| has_empty_offer(c))
        }
        Behaviour::Cond { then, els, .. } => has_empty_offer(then) || has_empty_offer(els),
    }
}

/// Self-communication, unresolved calls and empty offers.
pub fn check_well_formed(n: &Network) -> CheckReport {
    let mut violations = Vec::new();
    for (p, term) in &n.processes {
        for (owner, body) in bodies(term) {
            let mut found = Vec::new();
            self_communications(p, body, &mut found);
            for subterm in found {
                violations.push(Violation {
                    kind: ViolationKind::SelfCommunication,
                    process: p.clone(),
                    procedure: owner.cloned(),
                    description: format!("{p} communicates with itself in `{subterm}`"),
                });
            }
            if has_empty_offer(body) {
                violations.push(Violation {
                    kind: ViolationKind::EmptyOffer,
                    process: p.clone(),
                    procedure: owner.cloned(),
                    description: "offer without branches".to_string(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for (location, x) in term.unresolved_calls() {
            if seen.insert((location.clone(), x.clone())) {
                violations.push(Violation {
                    kind: ViolationKind::UnresolvedCall,
                    process: p.clone(),
                    procedure: Some(x.clone()),
                    description: format!("{location} calls undefined procedure {x}"),
                });
            }
        }
    }
    CheckReport::from_violations(
        violations,
        vec!["guard evaluation (expressions are opaque)".to_string()],
    )
}

/// Procedures reachable from main through any constructor.
pub fn reachable_procedures(term: &ProcessTerm) -> BTreeSet<ProcName> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    term.main.for_each_call(&mut |x| queue.push_back(x.clone()));
    while let Some(x) = queue.pop_front() {
        if !seen.insert(x.clone()) {
            continue;
        }
        if let Some(body) = term.procedures.get(&x) {
            body.for_each_call(&mut |y| {
                if !seen.contains(y) {
                    queue.push_back(y.clone());
                }
            });
        }
    }
    seen
}

/// Every reachable procedure must unfold to a non-call constructor.
pub fn check_guardedness(n: &Network) -> CheckReport {
    let mut violations = Vec::new();
    for (p, term) in &n.processes {
        for x in reachable_procedures(term) {
            let mut chain = vec![x.clone()];
            let mut current = term.procedures.get(&x);
            while let Some(Behaviour::Call(y)) = current.map(|b| &**b) {
                if chain.contains(y) {
                    chain.push(y.clone());
                    let path: Vec<String> = chain.iter().map(|c| c.to_string()).collect();
                    violations.push(Violation {
                        kind: ViolationKind::UnguardedRecursion,
                        process: p.clone(),
                        procedure: Some(x.clone()),
                        description: format!("unfolding never reaches an action: {}", path.join(" -> ")),
                    });
                    break;
                }
                chain.push(y.clone());
                current = term.procedures.get(y);
            }
        }
    }
    CheckReport::from_violations(violations, Vec::new())
}

/// Both checks; guardedness is only meaningful once well-formedness holds.
pub fn check_all(n: &Network) -> CheckReport {
    let wf = check_well_formed(n);
    if !wf.ok {
        return wf;
    }
    wf.and(check_guardedness(n))
}
