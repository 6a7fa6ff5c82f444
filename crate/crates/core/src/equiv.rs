//! Budgeted similarity and bisimilarity of choreographies.
//!
//! States are tuples of component bodies. Two states of the same side are identified when their
//! projections coincide after folding unfolded procedure bodies back into calls, which keeps the
//! explored pair set finite for the usual loop shapes. Sides that are not projectable fall back
//! to structural identity.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::ast::{ActionLabel, Behaviour, ChorBody, Choreography, ProcName, ProcessName, Program};
use crate::epp::Projector;
use crate::semantics::chor_enabled;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimBudget {
    pub max_pairs: usize,
    pub max_millis: u64,
}

impl Default for SimBudget {
    fn default() -> Self {
        SimBudget {
            max_pairs: 200_000,
            max_millis: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SearchOrder {
    #[default]
    BreadthFirst,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StateKeys {
    /// Projection with folding, structural where projection fails.
    #[default]
    Projected,
    Structural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Answer {
    Yes,
    No,
    Exhausted,
}

/// An action one side can take that the other cannot match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub action: ActionLabel,
    /// State of the side that performs the action.
    pub from: String,
    /// State of the side that fails to match it.
    pub against: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    #[serde(rename = "verdict")]
    pub answer: Answer,
    pub pairs_explored: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }

    pub fn is_no(&self) -> bool {
        self.answer == Answer::No
    }
}

type State = Vec<Arc<ChorBody>>;
/// Projected procedures of one process: bodies to fold back into calls, and procedures whose
/// body is just another call, mapped to the procedure they eventually reach.
#[derive(Default)]
struct FoldTable {
    bodies: HashMap<Arc<Behaviour>, ProcName>,
    alias: HashMap<ProcName, ProcName>,
}

impl FoldTable {
    fn build(projected: &BTreeMap<ProcName, Arc<Behaviour>>) -> Self {
        let mut table = FoldTable::default();
        for x in projected.keys() {
            let mut seen = vec![x.clone()];
            let mut cur = x.clone();
            while let Some(Behaviour::Call(y)) = projected.get(&cur).map(|b| &**b) {
                if seen.contains(y) {
                    // A cycle of bare calls: pick a fixed representative.
                    cur = seen.iter().min().expect("nonempty").clone();
                    break;
                }
                seen.push(y.clone());
                cur = y.clone();
            }
            if &cur != x {
                table.alias.insert(x.clone(), cur);
            }
        }
        for (x, body) in projected {
            if table.alias.contains_key(x) || matches!(**body, Behaviour::Nil) {
                continue;
            }
            let body = fold(body, &table);
            table.bodies.entry(body).or_insert_with(|| x.clone());
        }
        table
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum StateKey {
    Projected(Vec<Arc<Behaviour>>),
    Structural(State),
}

struct Component<'a> {
    chor: &'a Choreography,
    projector: Projector<'a>,
    /// Per process of the component, its projected procedure bodies; `None` if some procedure
    /// does not project.
    folds: Option<BTreeMap<ProcessName, FoldTable>>,
}

struct Side<'a> {
    components: Vec<Component<'a>>,
}

fn fold(b: &Arc<Behaviour>, table: &FoldTable) -> Arc<Behaviour> {
    let rebuilt = match &**b {
        Behaviour::Nil => return Arc::clone(b),
        Behaviour::Call(x) => {
            return match table.alias.get(x) {
                Some(y) => Arc::new(Behaviour::Call(y.clone())),
                None => Arc::clone(b),
            }
        }
        Behaviour::Send { to, expr, cont } => Behaviour::Send {
            to: to.clone(),
            expr: expr.clone(),
            cont: fold(cont, table),
        },
        Behaviour::Receive { from, var, cont } => Behaviour::Receive {
            from: from.clone(),
            var: var.clone(),
            cont: fold(cont, table),
        },
        Behaviour::Select { to, label, cont } => Behaviour::Select {
            to: to.clone(),
            label: label.clone(),
            cont: fold(cont, table),
        },
        Behaviour::Offer { from, branches } => Behaviour::Offer {
            from: from.clone(),
            branches: branches
                .iter()
                .map(|(l, c)| (l.clone(), fold(c, table)))
                .collect(),
        },
        Behaviour::Cond { expr, then, els } => Behaviour::Cond {
            expr: expr.clone(),
            then: fold(then, table),
            els: fold(els, table),
        },
    };
    let rebuilt = Arc::new(rebuilt);
    match table.bodies.get(&rebuilt) {
        Some(x) => Arc::new(Behaviour::Call(x.clone())),
        None => rebuilt,
    }
}

impl<'a> Side<'a> {
    fn new(prog: &'a Program, keys: StateKeys) -> Self {
        let components = prog
            .components
            .iter()
            .map(|chor| {
                let projector = Projector::new(chor);
                let folds = match keys {
                    StateKeys::Structural => None,
                    StateKeys::Projected => chor
                        .processes()
                        .into_iter()
                        .map(|r| {
                            let mut projected = BTreeMap::new();
                            for (x, body) in &chor.procedures {
                                projected.insert(x.clone(), projector.project_body(body, &r).ok()?);
                            }
                            Some((r, FoldTable::build(&projected)))
                        })
                        .collect(),
                };
                Component {
                    chor,
                    projector,
                    folds,
                }
            })
            .collect();
        Side { components }
    }

    fn initial(&self) -> State {
        self.components.iter().map(|c| Arc::clone(&c.chor.main)).collect()
    }

    fn key(&self, state: &State) -> StateKey {
        let mut projected = Vec::new();
        for (comp, body) in self.components.iter().zip(state) {
            let Some(folds) = &comp.folds else {
                return StateKey::Structural(state.clone());
            };
            for (r, table) in folds {
                match comp.projector.project_body(body, r) {
                    Ok(b) => projected.push(fold(&b, table)),
                    Err(_) => return StateKey::Structural(state.clone()),
                }
            }
        }
        StateKey::Projected(projected)
    }

    fn moves(&self, state: &State) -> Vec<(ActionLabel, State)> {
        let mut out = Vec::new();
        for (i, comp) in self.components.iter().enumerate() {
            for (alpha, rest) in chor_enabled(comp.chor, &state[i]) {
                let mut next = state.clone();
                next[i] = rest;
                out.push((alpha, next));
            }
        }
        out
    }
}

fn show(state: &State) -> String {
    state
        .iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join(" || ")
}

/// Whether `by` can match every move of `of`, step for step.
pub fn program_simulates(
    of: &Program,
    by: &Program,
    budget: SimBudget,
    order: SearchOrder,
    keys: StateKeys,
) -> Verdict {
    let start = Instant::now();
    let deadline = Duration::from_millis(budget.max_millis);
    let left = Side::new(of, keys);
    let right = Side::new(by, keys);
    let init = (left.initial(), right.initial());
    let mut seen = HashSet::new();
    seen.insert((left.key(&init.0), right.key(&init.1)));
    let mut work = VecDeque::from([init]);
    let mut explored = 0usize;
    while let Some((s1, s2)) = match order {
        SearchOrder::BreadthFirst => work.pop_front(),
        SearchOrder::DepthFirst => work.pop_back(),
    } {
        if explored >= budget.max_pairs || start.elapsed() > deadline {
            return Verdict {
                answer: Answer::Exhausted,
                pairs_explored: explored,
                witness: None,
            };
        }
        explored += 1;
        let answers = right.moves(&s2);
        for (alpha, n1) in left.moves(&s1) {
            let Some((_, n2)) = answers.iter().find(|(beta, _)| *beta == alpha) else {
                return Verdict {
                    answer: Answer::No,
                    pairs_explored: explored,
                    witness: Some(Witness {
                        action: alpha,
                        from: show(&s1),
                        against: show(&s2),
                    }),
                };
            };
            if seen.insert((left.key(&n1), right.key(n2))) {
                work.push_back((n1, n2.clone()));
            }
        }
    }
    Verdict {
        answer: Answer::Yes,
        pairs_explored: explored,
        witness: None,
    }
}

/// Both directions of [`program_simulates`]; the pair count is the total.
pub fn programs_bisimilar(
    a: &Program,
    b: &Program,
    budget: SimBudget,
    order: SearchOrder,
    keys: StateKeys,
) -> Verdict {
    let there = program_simulates(a, b, budget, order, keys);
    if there.answer == Answer::No {
        return there;
    }
    let back = program_simulates(b, a, budget, order, keys);
    let pairs_explored = there.pairs_explored + back.pairs_explored;
    match (there.answer, back.answer) {
        (_, Answer::No) => Verdict {
            pairs_explored,
            ..back
        },
        (Answer::Yes, Answer::Yes) => Verdict {
            answer: Answer::Yes,
            pairs_explored,
            witness: None,
        },
        _ => Verdict {
            answer: Answer::Exhausted,
            pairs_explored,
            witness: None,
        },
    }
}

/// Whether `c2` can match every move of `c1`.
pub fn can_simulate(c1: &Choreography, c2: &Choreography, budget: SimBudget) -> Verdict {
    program_simulates(
        &Program::single(c1.clone()),
        &Program::single(c2.clone()),
        budget,
        SearchOrder::default(),
        StateKeys::default(),
    )
}

pub fn bisimilar(c1: &Choreography, c2: &Choreography, budget: SimBudget) -> Verdict {
    programs_bisimilar(
        &Program::single(c1.clone()),
        &Program::single(c2.clone()),
        budget,
        SearchOrder::default(),
        StateKeys::default(),
    )
}
