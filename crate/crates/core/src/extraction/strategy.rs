//! Heuristics ordering the actions tried at each SEG node.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ast::{ActionLabel, ProcessName};
use crate::semantics::{AnnotatedNetwork, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Random,
    LongestFirst,
    ShortestFirst,
    InteractionsFirst,
    ConditionalsFirst,
    UnmarkedFirst,
    UnmarkedThenInteractions,
    UnmarkedThenSelections,
    UnmarkedThenConditionals,
    UnmarkedThenRandom,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 10] = [
        StrategyKind::Random,
        StrategyKind::LongestFirst,
        StrategyKind::ShortestFirst,
        StrategyKind::InteractionsFirst,
        StrategyKind::ConditionalsFirst,
        StrategyKind::UnmarkedFirst,
        StrategyKind::UnmarkedThenInteractions,
        StrategyKind::UnmarkedThenSelections,
        StrategyKind::UnmarkedThenConditionals,
        StrategyKind::UnmarkedThenRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::LongestFirst => "longest-first",
            StrategyKind::ShortestFirst => "shortest-first",
            StrategyKind::InteractionsFirst => "interactions-first",
            StrategyKind::ConditionalsFirst => "conditionals-first",
            StrategyKind::UnmarkedFirst => "unmarked-first",
            StrategyKind::UnmarkedThenInteractions => "unmarked-then-interactions",
            StrategyKind::UnmarkedThenSelections => "unmarked-then-selections",
            StrategyKind::UnmarkedThenConditionals => "unmarked-then-conditionals",
            StrategyKind::UnmarkedThenRandom => "unmarked-then-random",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// A strategy plus the seed used by its random variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub seed: u64,
}

impl Strategy {
    pub fn new(kind: StrategyKind, seed: u64) -> Self {
        Strategy { kind, seed }
    }
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::new(StrategyKind::InteractionsFirst, 0)
    }
}

/// What a node can do next: an interaction, or both outcomes of a conditional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Interaction(Step),
    Conditional { then: Step, els: Step },
}

impl Action {
    /// The interaction label, or the Then label of a conditional.
    pub fn label(&self) -> &ActionLabel {
        match self {
            Action::Interaction(s) => &s.label,
            Action::Conditional { then, .. } => &then.label,
        }
    }

    pub fn into_steps(self) -> Vec<Step> {
        match self {
            Action::Interaction(s) => vec![s],
            Action::Conditional { then, els } => vec![then, els],
        }
    }
}

/// Pairs up the Then/Else steps of each conditional.
pub fn group_actions(steps: Vec<Step>) -> Vec<Action> {
    let mut out = Vec::with_capacity(steps.len());
    let mut iter = steps.into_iter().peekable();
    while let Some(step) = iter.next() {
        match &step.label {
            ActionLabel::Then { process, .. } => {
                let els = iter
                    .next_if(|s| matches!(&s.label, ActionLabel::Else { process: q, .. } if q == process))
                    .expect("Then step is followed by its Else step");
                out.push(Action::Conditional { then: step, els });
            }
            ActionLabel::Else { .. } => panic!("Else step without a preceding Then step"),
            _ => out.push(Action::Interaction(step)),
        }
    }
    out
}

fn canonical_key(a: &Action) -> (Vec<ProcessName>, u8, ActionLabel) {
    let label = a.label();
    (
        label.processes().into_iter().cloned().collect(),
        label.constructor_rank(),
        label.clone(),
    )
}

fn largest_involved(a: &Action, an: &AnnotatedNetwork) -> usize {
    a.label()
        .processes()
        .into_iter()
        .filter_map(|p| an.net.get(p))
        .map(|t| t.main.size())
        .max()
        .unwrap_or(0)
}

fn touches_unmarked(a: &Action, an: &AnnotatedNetwork) -> bool {
    a.label()
        .processes()
        .into_iter()
        .any(|p| !an.marking.is_marked(p))
}

fn interactions_rank(a: &Action) -> u8 {
    u8::from(!a.label().is_interaction())
}

fn selections_rank(a: &Action) -> u8 {
    match a.label() {
        ActionLabel::Sel { .. } => 0,
        ActionLabel::Com { .. } => 1,
        _ => 2,
    }
}

/// Orders actions for `an` according to `kind`. Ties keep a canonical order by process names,
/// then constructor.
pub fn order_actions(
    mut actions: Vec<Action>,
    kind: StrategyKind,
    an: &AnnotatedNetwork,
    rng: &mut ChaCha8Rng,
) -> Vec<Action> {
    actions.sort_by_cached_key(canonical_key);
    let unmarked = |a: &Action| u8::from(!touches_unmarked(a, an));
    match kind {
        StrategyKind::Random => actions.shuffle(rng),
        StrategyKind::LongestFirst => {
            actions.sort_by_cached_key(|a| Reverse(largest_involved(a, an)))
        }
        StrategyKind::ShortestFirst => actions.sort_by_cached_key(|a| largest_involved(a, an)),
        StrategyKind::InteractionsFirst => actions.sort_by_key(interactions_rank),
        StrategyKind::ConditionalsFirst => actions.sort_by_key(|a| Reverse(interactions_rank(a))),
        StrategyKind::UnmarkedFirst => actions.sort_by_key(unmarked),
        StrategyKind::UnmarkedThenInteractions => {
            actions.sort_by_key(|a| (unmarked(a), interactions_rank(a)))
        }
        StrategyKind::UnmarkedThenSelections => {
            actions.sort_by_key(|a| (unmarked(a), selections_rank(a)))
        }
        StrategyKind::UnmarkedThenConditionals => {
            actions.sort_by_key(|a| (unmarked(a), Reverse(interactions_rank(a))))
        }
        StrategyKind::UnmarkedThenRandom => {
            actions.shuffle(rng);
            actions.sort_by_key(unmarked);
        }
    }
    actions
}

/// Orders `steps` (as produced by `enabled_steps(an)`); a conditional's Then and Else stay
/// adjacent.
pub fn order_steps(steps: Vec<Step>, strategy: Strategy, an: &AnnotatedNetwork) -> Vec<Step> {
    let mut rng = ChaCha8Rng::seed_from_u64(strategy.seed);
    order_actions(group_actions(steps), strategy.kind, an, &mut rng)
        .into_iter()
        .flat_map(Action::into_steps)
        .collect()
}
