//! Endpoint projection of choreographies and the merge operator.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{
    Behaviour, ChorBody, Choreography, Network, ProcName, ProcessName, ProcessTerm, Procedures,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot merge `{left}` with `{right}`")]
pub struct MergeError {
    /// Where in the behaviours the clash was found, outermost first.
    pub location: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EppError {
    #[error("process {process} is not projectable at {location}: {merge}")]
    Merge {
        process: ProcessName,
        location: String,
        merge: MergeError,
    },
    #[error("cannot project `deadlock` for process {0}")]
    Deadlock(ProcessName),
    #[error("choreography mentions no processes")]
    NoProcesses,
}

fn head(b: &Behaviour) -> String {
    let text = b.to_string();
    match b {
        Behaviour::Offer { .. } | Behaviour::Cond { .. } => text,
        _ => text.split(';').next().unwrap_or_default().to_string(),
    }
}

fn clash(a: &Behaviour, b: &Behaviour) -> MergeError {
    MergeError {
        location: String::new(),
        left: head(a),
        right: head(b),
    }
}

fn nested(err: MergeError, step: &str) -> MergeError {
    let location = if err.location.is_empty() {
        step.to_string()
    } else {
        format!("{step} / {}", err.location)
    };
    MergeError { location, ..err }
}

/// Merges two behaviours that may differ only in the labels offered to them.
pub fn merge(a: &Arc<Behaviour>, b: &Arc<Behaviour>) -> Result<Arc<Behaviour>, MergeError> {
    if Arc::ptr_eq(a, b) || a == b {
        return Ok(Arc::clone(a));
    }
    let merged = match (&**a, &**b) {
        (
            Behaviour::Send { to, expr, cont },
            Behaviour::Send {
                to: to2,
                expr: expr2,
                cont: cont2,
            },
        ) if to == to2 && expr == expr2 => Behaviour::Send {
            to: to.clone(),
            expr: expr.clone(),
            cont: merge(cont, cont2).map_err(|e| nested(e, &format!("{to}!<{expr}>")))?,
        },
        (
            Behaviour::Receive { from, var, cont },
            Behaviour::Receive {
                from: from2,
                var: var2,
                cont: cont2,
            },
        ) if from == from2 && var == var2 => Behaviour::Receive {
            from: from.clone(),
            var: var.clone(),
            cont: merge(cont, cont2).map_err(|e| nested(e, &format!("{from}?{var}")))?,
        },
        (
            Behaviour::Select { to, label, cont },
            Behaviour::Select {
                to: to2,
                label: label2,
                cont: cont2,
            },
        ) if to == to2 && label == label2 => Behaviour::Select {
            to: to.clone(),
            label: label.clone(),
            cont: merge(cont, cont2).map_err(|e| nested(e, &format!("{to}+{label}")))?,
        },
        (
            Behaviour::Offer { from, branches },
            Behaviour::Offer {
                from: from2,
                branches: branches2,
            },
        ) if from == from2 => {
            let mut out = branches.clone();
            for (l, b2) in branches2 {
                let merged = match branches.get(l) {
                    Some(b1) => merge(b1, b2).map_err(|e| nested(e, &format!("{from}&{l}")))?,
                    None => Arc::clone(b2),
                };
                out.insert(l.clone(), merged);
            }
            Behaviour::Offer {
                from: from.clone(),
                branches: out,
            }
        }
        (
            Behaviour::Cond { expr, then, els },
            Behaviour::Cond {
                expr: expr2,
                then: then2,
                els: els2,
            },
        ) if expr == expr2 => Behaviour::Cond {
            expr: expr.clone(),
            then: merge(then, then2).map_err(|e| nested(e, &format!("if {expr} then")))?,
            els: merge(els, els2).map_err(|e| nested(e, &format!("if {expr} else")))?,
        },
        _ => return Err(clash(a, b)),
    };
    Ok(Arc::new(merged))
}

/// Projects bodies of one choreography, caching which procedures involve which processes.
pub struct Projector<'c> {
    chor: &'c Choreography,
    involved: BTreeMap<ProcName, BTreeSet<ProcessName>>,
}

impl<'c> Projector<'c> {
    pub fn new(chor: &'c Choreography) -> Self {
        let mut involved: BTreeMap<ProcName, BTreeSet<ProcessName>> = chor
            .procedures
            .iter()
            .map(|(x, body)| {
                let mut names = BTreeSet::new();
                body.collect_processes(&mut names);
                (x.clone(), names)
            })
            .collect();
        let calls: BTreeMap<ProcName, BTreeSet<ProcName>> = chor
            .procedures
            .iter()
            .map(|(x, body)| {
                let mut called = BTreeSet::new();
                body.for_each_call(&mut |y| {
                    called.insert(y.clone());
                });
                (x.clone(), called)
            })
            .collect();
        loop {
            let mut changed = false;
            for (x, called) in &calls {
                let mut add = BTreeSet::new();
                for y in called {
                    if let Some(names) = involved.get(y) {
                        add.extend(names.iter().cloned());
                    }
                }
                let entry = involved.get_mut(x).expect("procedure present");
                let before = entry.len();
                entry.extend(add);
                changed |= entry.len() != before;
            }
            if !changed {
                break;
            }
        }
        Projector { chor, involved }
    }

    /// Whether `r` can take part in an execution of procedure `x`.
    pub fn is_involved(&self, x: &ProcName, r: &ProcessName) -> bool {
        self.involved.get(x).is_some_and(|s| s.contains(r))
    }

    pub fn project_body(
        &self,
        body: &Arc<ChorBody>,
        r: &ProcessName,
    ) -> Result<Arc<Behaviour>, ProjectError> {
        let b = match &**body {
            ChorBody::Nil => Behaviour::Nil,
            ChorBody::Dlock => return Err(ProjectError::Deadlock),
            ChorBody::Call(x) => {
                if self.is_involved(x, r) {
                    Behaviour::Call(x.clone())
                } else {
                    Behaviour::Nil
                }
            }
            ChorBody::Com {
                from,
                expr,
                to,
                var,
                cont,
            } => {
                let rest = self.project_body(cont, r)?;
                if r == from {
                    Behaviour::Send {
                        to: to.clone(),
                        expr: expr.clone(),
                        cont: rest,
                    }
                } else if r == to {
                    Behaviour::Receive {
                        from: from.clone(),
                        var: var.clone(),
                        cont: rest,
                    }
                } else {
                    return Ok(rest);
                }
            }
            ChorBody::Sel {
                from,
                to,
                label,
                cont,
            } => {
                let rest = self.project_body(cont, r)?;
                if r == from {
                    Behaviour::Select {
                        to: to.clone(),
                        label: label.clone(),
                        cont: rest,
                    }
                } else if r == to {
                    Behaviour::Offer {
                        from: from.clone(),
                        branches: [(label.clone(), rest)].into(),
                    }
                } else {
                    return Ok(rest);
                }
            }
            ChorBody::Cond {
                process,
                expr,
                then,
                els,
            } => {
                let t = self.project_body(then, r)?;
                let e = self.project_body(els, r)?;
                if r == process {
                    Behaviour::Cond {
                        expr: expr.clone(),
                        then: t,
                        els: e,
                    }
                } else {
                    return merge(&t, &e).map_err(|m| ProjectError::Merge {
                        conditional: format!("if {process}.{expr}"),
                        merge: m,
                    });
                }
            }
        };
        Ok(Arc::new(b))
    }

    pub fn project_process(&self, r: &ProcessName) -> Result<ProcessTerm, EppError> {
        let lift = |location: &str, e: ProjectError| match e {
            ProjectError::Deadlock => EppError::Deadlock(r.clone()),
            ProjectError::Merge { conditional, merge } => EppError::Merge {
                process: r.clone(),
                location: format!("{location}, {conditional}"),
                merge,
            },
        };
        let mut procedures = Procedures::new();
        for (x, body) in &self.chor.procedures {
            let b = self
                .project_body(body, r)
                .map_err(|e| lift(&format!("procedure {x}"), e))?;
            procedures.insert(x.clone(), b);
        }
        let main = self
            .project_body(&self.chor.main, r)
            .map_err(|e| lift("main", e))?;
        Ok(ProcessTerm {
            procedures: Arc::new(procedures),
            main,
        })
    }
}

/// Failure inside a single body projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectError {
    Deadlock,
    Merge {
        conditional: String,
        merge: MergeError,
    },
}

/// Projection of `c` onto process `r`.
///
/// A call to a procedure that can never involve `r` projects to `stop`.
pub fn project_process(c: &Choreography, r: &ProcessName) -> Result<ProcessTerm, EppError> {
    Projector::new(c).project_process(r)
}

/// Projects every process occurring in `c`.
pub fn epp(c: &Choreography) -> Result<Network, EppError> {
    epp_with(c, &BTreeSet::new())
}

/// Projects every process occurring in `c` plus the `declared` ones.
pub fn epp_with(c: &Choreography, declared: &BTreeSet<ProcessName>) -> Result<Network, EppError> {
    let mut names = c.processes();
    names.extend(declared.iter().cloned());
    if names.is_empty() {
        return Err(EppError::NoProcesses);
    }
    let projector = Projector::new(c);
    let mut processes = BTreeMap::new();
    for r in names {
        let term = projector.project_process(&r)?;
        processes.insert(r, term);
    }
    Ok(Network { processes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_choreography, parse_network};

    fn arc(b: Behaviour) -> Arc<Behaviour> {
        Arc::new(b)
    }

    #[test]
    fn merge_unions_offers() {
        let b = Behaviour::send("q", "e", Behaviour::Nil);
        let b2 = Behaviour::receive("q", "x", Behaviour::Nil);
        let ok = arc(Behaviour::offer("p", [("ok", b.clone())]).unwrap());
        let ko = arc(Behaviour::offer("p", [("ko", b2.clone())]).unwrap());
        let m = merge(&ok, &ko).unwrap();
        assert_eq!(*m, Behaviour::offer("p", [("ok", b), ("ko", b2)]).unwrap());
    }

    #[test]
    fn merge_is_idempotent_and_detects_clashes() {
        let b = arc(Behaviour::cond("e", Behaviour::Nil, Behaviour::call("X")));
        assert_eq!(merge(&b, &b).unwrap(), b);
        let s = arc(Behaviour::send("q", "e", Behaviour::Nil));
        let r = arc(Behaviour::receive("q", "x", Behaviour::Nil));
        let err = merge(&s, &r).unwrap_err();
        assert_eq!(err.left, "q!<e>");
        assert_eq!(err.right, "q?x");
    }

    #[test]
    fn uninvolved_process_projects_to_nil() {
        let c = parse_choreography("main { if p.e then (p.a->q.x; stop) else (p.b->q.x; stop) }")
            .unwrap();
        let t = project_process(&c, &"r".into()).unwrap();
        assert_eq!(*t.main, Behaviour::Nil);
    }

    #[test]
    fn sign_on_projection() {
        let c = parse_choreography(
            "def X { u.cred->a.cred; if a.check(cred) \
               then a->u[ok]; a->w[ok]; w.token->u.token; stop \
               else a->u[ko]; a->w[ko]; X } \
             main { X }",
        )
        .unwrap();
        let expected = parse_network(
            "u { def X { a!<cred>; a&{ok: w?token; stop, ko: X} } main { X } } \
             | a { def X { u?cred; if check(cred) then u+ok; w+ok; stop else u+ko; w+ko; X } main { X } } \
             | w { def X { a&{ok: u!<token>; stop, ko: X} } main { X } }",
        )
        .unwrap();
        assert_eq!(epp(&c).unwrap(), expected);
    }

    #[test]
    fn unmergeable_branches_name_the_process() {
        let c = parse_choreography(
            "def X { p.e->q.x; p.e->q.x; r.f->q.y; \
               if q.(x=y) then q->p[L]; X else q->p[R]; stop } \
             main { p.e->q.x; X }",
        );
        // r has no selection telling it which branch was taken.
        let c = c.unwrap();
        let err = epp(&c).unwrap_err();
        match err {
            EppError::Merge { process, .. } => assert_eq!(process.as_str(), "r"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn declared_processes_and_empty_choreographies() {
        let c = parse_choreography("main { stop }").unwrap();
        assert_eq!(epp(&c), Err(EppError::NoProcesses));
        let declared = ["p", "q"].into_iter().map(ProcessName::from).collect();
        let n = epp_with(&c, &declared).unwrap();
        assert_eq!(n.len(), 2);
        assert!(n.is_terminated());
    }

    #[test]
    fn deadlock_is_not_projectable() {
        let c = parse_choreography("main { p.e->q.x; deadlock }").unwrap();
        assert!(matches!(epp(&c), Err(EppError::Deadlock(_))));
    }
}
