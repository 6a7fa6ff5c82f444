//! Actions a choreography body can perform up to out-of-order execution of independent actions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ast::{ActionLabel, ChorBody, Choreography, ProcName, ProcessName};

type Blocked = BTreeSet<ProcessName>;
type Found = Vec<(ActionLabel, Arc<ChorBody>)>;

struct Scanner<'c> {
    chor: &'c Choreography,
    visiting: Vec<(ProcName, Blocked)>,
    /// Call results that did not depend on a cut against an enclosing frame.
    memo: BTreeMap<(ProcName, Blocked), Found>,
    /// Lowest `visiting` index hit by a cut since it was last reset.
    low: usize,
}

/// Keeps the first result for each label.
fn first_per_label(mut found: Found) -> Found {
    let mut seen = BTreeSet::new();
    found.retain(|(alpha, _)| seen.insert(alpha.clone()));
    found
}

impl Scanner<'_> {
    fn scan(&mut self, body: &Arc<ChorBody>, blocked: &Blocked) -> Found {
        match &**body {
            ChorBody::Nil | ChorBody::Dlock => Vec::new(),
            ChorBody::Call(x) => {
                let key = (x.clone(), blocked.clone());
                if let Some(pos) = self.visiting.iter().position(|k| *k == key) {
                    self.low = self.low.min(pos);
                    return Vec::new();
                }
                if let Some(found) = self.memo.get(&key) {
                    return found.clone();
                }
                let Some(def) = self.chor.procedures.get(x) else {
                    return Vec::new();
                };
                let depth = self.visiting.len();
                let outer_low = std::mem::replace(&mut self.low, usize::MAX);
                self.visiting.push(key.clone());
                let out = self.scan(def, blocked);
                self.visiting.pop();
                if self.low >= depth {
                    self.memo.insert(key, out.clone());
                }
                self.low = self.low.min(outer_low);
                out
            }
            ChorBody::Com { from, to, cont, .. } | ChorBody::Sel { from, to, cont, .. } => {
                let label = interaction_label(body);
                let mut out = Vec::new();
                if !blocked.contains(from) && !blocked.contains(to) {
                    out.push((label.clone(), Arc::clone(cont)));
                }
                let mut inner = blocked.clone();
                inner.insert(from.clone());
                inner.insert(to.clone());
                for (alpha, rest) in self.scan(cont, &inner) {
                    out.push((alpha, Arc::new(ChorBody::prefix(&label, rest))));
                }
                first_per_label(out)
            }
            ChorBody::Cond {
                process,
                expr,
                then,
                els,
            } => {
                let mut out = Vec::new();
                if !blocked.contains(process) {
                    out.push((
                        ActionLabel::Then {
                            process: process.clone(),
                            expr: expr.clone(),
                        },
                        Arc::clone(then),
                    ));
                    out.push((
                        ActionLabel::Else {
                            process: process.clone(),
                            expr: expr.clone(),
                        },
                        Arc::clone(els),
                    ));
                }
                let mut inner = blocked.clone();
                inner.insert(process.clone());
                let in_then = self.scan(then, &inner);
                let in_else = self.scan(els, &inner);
                for (alpha, t) in in_then {
                    if let Some((_, e)) = in_else.iter().find(|(b, _)| *b == alpha) {
                        out.push((
                            alpha,
                            Arc::new(ChorBody::Cond {
                                process: process.clone(),
                                expr: expr.clone(),
                                then: t,
                                els: Arc::clone(e),
                            }),
                        ));
                    }
                }
                first_per_label(out)
            }
        }
    }
}

fn interaction_label(body: &ChorBody) -> ActionLabel {
    match body {
        ChorBody::Com {
            from,
            expr,
            to,
            var,
            ..
        } => ActionLabel::Com {
            from: from.clone(),
            expr: expr.clone(),
            to: to.clone(),
            var: var.clone(),
        },
        ChorBody::Sel {
            from, to, label, ..
        } => ActionLabel::Sel {
            from: from.clone(),
            to: to.clone(),
            label: label.clone(),
        },
        _ => unreachable!("not an interaction"),
    }
}

/// Every action `body` can perform, with the residual body after it.
///
/// An action is found by scanning past earlier actions whose processes it does not share, and
/// past conditionals when it is available in both branches. Procedure calls are unfolded; a call
/// revisited with the same set of blocked processes is cut off.
pub fn chor_enabled(c: &Choreography, body: &Arc<ChorBody>) -> Vec<(ActionLabel, Arc<ChorBody>)> {
    let mut scanner = Scanner {
        chor: c,
        visiting: Vec::new(),
        memo: BTreeMap::new(),
        low: usize::MAX,
    };
    first_per_label(scanner.scan(body, &Blocked::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_choreography;

    fn actions(text: &str) -> Vec<String> {
        let c = parse_choreography(text).unwrap();
        chor_enabled(&c, &c.main)
            .into_iter()
            .map(|(a, _)| a.to_string())
            .collect()
    }

    #[test]
    fn independent_interactions_both_enabled() {
        assert_eq!(
            actions("main { p.e->q.x; r.e'->s.y; stop }"),
            ["p.e->q.x", "r.e'->s.y"]
        );
    }

    #[test]
    fn actions_pulled_out_of_conditionals() {
        assert_eq!(
            actions("main { if p.e then (r.e'->s.y; stop) else (r.e'->s.y; stop) }"),
            ["then p.e", "else p.e", "r.e'->s.y"]
        );
    }

    #[test]
    fn shared_process_blocks() {
        assert_eq!(actions("main { p.e->q.x; p.f->r.y; stop }"), ["p.e->q.x"]);
    }

    #[test]
    fn calls_unfold_and_terminate() {
        let c = parse_choreography("def X { p.e->q.x; r.f->s.y; X } main { X }").unwrap();
        let steps = chor_enabled(&c, &c.main);
        let shown: Vec<String> = steps
            .iter()
            .map(|(a, rest)| format!("{a} / {rest}"))
            .collect();
        assert_eq!(shown, ["p.e->q.x / r.f->s.y; X", "r.f->s.y / p.e->q.x; X"]);
    }

    #[test]
    fn residual_removes_action_in_both_branches() {
        let c = parse_choreography(
            "main { if p.e then (r.a->s.y; stop) else (r.a->s.y; q.b->p.z; stop) }",
        )
        .unwrap();
        let (_, rest) = chor_enabled(&c, &c.main)
            .into_iter()
            .find(|(a, _)| a.is_interaction())
            .unwrap();
        assert_eq!(rest.to_string(), "if p.e then stop else q.b->p.z; stop");
    }
}
