//! Term languages: process behaviours, networks, choreographies and action labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

macro_rules! name_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(text: impl AsRef<str>) -> Self {
                Self(Arc::from(text.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:?}", &*self.0)
            }
        }

        impl From<&str> for $name {
            fn from(text: &str) -> Self {
                Self::new(text)
            }
        }

        impl From<String> for $name {
            fn from(text: String) -> Self {
                Self::new(text)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.0)
            }
        }
    };
}

name_type!(
    /// Name of a process in a network or choreography.
    ProcessName
);
name_type!(
    /// Variable bound by a receive.
    VarName
);
name_type!(
    /// Selection label.
    Label
);
name_type!(
    /// Name of a procedure definition.
    ProcName
);
name_type!(
    /// Opaque expression. Compared by exact text, never evaluated.
    Expr
);

/// True for strings of the form `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("network has no processes")]
    EmptyNetwork,
    #[error("offer from {0} has no branches")]
    EmptyOffer(ProcessName),
    #[error("call to undefined procedure {procedure} in {owner}")]
    UnresolvedCall { owner: String, procedure: ProcName },
    #[error("self-interaction of {0}")]
    SelfInteraction(ProcessName),
    #[error("procedure {0} has an unguarded body")]
    UnguardedBody(ProcName),
    #[error("process {0} occurs in more than one component")]
    OverlappingComponents(ProcessName),
    #[error("program has no components")]
    EmptyProgram,
}

/// Local behaviour of a single process.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Behaviour {
    Nil,
    Call(ProcName),
    Send {
        to: ProcessName,
        expr: Expr,
        cont: Arc<Behaviour>,
    },
    Receive {
        from: ProcessName,
        var: VarName,
        cont: Arc<Behaviour>,
    },
    Select {
        to: ProcessName,
        label: Label,
        cont: Arc<Behaviour>,
    },
    /// Branching on a label received from `from`. The map keeps branches label-sorted.
    Offer {
        from: ProcessName,
        branches: BTreeMap<Label, Arc<Behaviour>>,
    },
    Cond {
        expr: Expr,
        then: Arc<Behaviour>,
        els: Arc<Behaviour>,
    },
}

impl Behaviour {
    pub fn call(name: impl Into<ProcName>) -> Self {
        Behaviour::Call(name.into())
    }

    pub fn send(to: impl Into<ProcessName>, expr: impl Into<Expr>, cont: Behaviour) -> Self {
        Behaviour::Send {
            to: to.into(),
            expr: expr.into(),
            cont: Arc::new(cont),
        }
    }

    pub fn receive(from: impl Into<ProcessName>, var: impl Into<VarName>, cont: Behaviour) -> Self {
        Behaviour::Receive {
            from: from.into(),
            var: var.into(),
            cont: Arc::new(cont),
        }
    }

    pub fn select(to: impl Into<ProcessName>, label: impl Into<Label>, cont: Behaviour) -> Self {
        Behaviour::Select {
            to: to.into(),
            label: label.into(),
            cont: Arc::new(cont),
        }
    }

    /// Builds an offer; rejects an empty branch list. Later duplicates of a label win.
    pub fn offer<L: Into<Label>>(
        from: impl Into<ProcessName>,
        branches: impl IntoIterator<Item = (L, Behaviour)>,
    ) -> Result<Self, CoreError> {
        let from = from.into();
        let branches: BTreeMap<Label, Arc<Behaviour>> = branches
            .into_iter()
            .map(|(l, b)| (l.into(), Arc::new(b)))
            .collect();
        if branches.is_empty() {
            return Err(CoreError::EmptyOffer(from));
        }
        Ok(Behaviour::Offer { from, branches })
    }

    pub fn cond(expr: impl Into<Expr>, then: Behaviour, els: Behaviour) -> Self {
        Behaviour::Cond {
            expr: expr.into(),
            then: Arc::new(then),
            els: Arc::new(els),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Behaviour::Nil | Behaviour::Call(_) => 1,
            Behaviour::Send { cont, .. }
            | Behaviour::Receive { cont, .. }
            | Behaviour::Select { cont, .. } => 1 + cont.size(),
            Behaviour::Offer { branches, .. } => {
                1 + branches.values().map(|b| b.size()).sum::<usize>()
            }
            Behaviour::Cond { then, els, .. } => 1 + then.size() + els.size(),
        }
    }

    /// Number of conditionals.
    pub fn conditionals(&self) -> usize {
        match self {
            Behaviour::Nil | Behaviour::Call(_) => 0,
            Behaviour::Send { cont, .. }
            | Behaviour::Receive { cont, .. }
            | Behaviour::Select { cont, .. } => cont.conditionals(),
            Behaviour::Offer { branches, .. } => branches.values().map(|b| b.conditionals()).sum(),
            Behaviour::Cond { then, els, .. } => 1 + then.conditionals() + els.conditionals(),
        }
    }

    /// Calls every procedure name occurring in this behaviour.
    pub fn for_each_call(&self, f: &mut impl FnMut(&ProcName)) {
        match self {
            Behaviour::Nil => {}
            Behaviour::Call(x) => f(x),
            Behaviour::Send { cont, .. }
            | Behaviour::Receive { cont, .. }
            | Behaviour::Select { cont, .. } => cont.for_each_call(f),
            Behaviour::Offer { branches, .. } => {
                for b in branches.values() {
                    b.for_each_call(f);
                }
            }
            Behaviour::Cond { then, els, .. } => {
                then.for_each_call(f);
                els.for_each_call(f);
            }
        }
    }

    /// Calls `f` with every peer process named by a communication in this behaviour.
    pub fn for_each_peer(&self, f: &mut impl FnMut(&ProcessName)) {
        match self {
            Behaviour::Nil | Behaviour::Call(_) => {}
            Behaviour::Send { to: peer, cont, .. }
            | Behaviour::Receive {
                from: peer, cont, ..
            }
            | Behaviour::Select { to: peer, cont, .. } => {
                f(peer);
                cont.for_each_peer(f);
            }
            Behaviour::Offer { from, branches } => {
                f(from);
                for b in branches.values() {
                    b.for_each_peer(f);
                }
            }
            Behaviour::Cond { then, els, .. } => {
                then.for_each_peer(f);
                els.for_each_peer(f);
            }
        }
    }
}

/// Syntactic equality; offer branches are compared label-sorted.
pub fn behaviour_eq(a: &Behaviour, b: &Behaviour) -> bool {
    a == b
}

pub type Procedures = BTreeMap<ProcName, Arc<Behaviour>>;

/// A process: procedure definitions plus a main behaviour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessTerm {
    pub procedures: Arc<Procedures>,
    pub main: Arc<Behaviour>,
}

impl Hash for ProcessTerm {
    // Procedures never change during execution, so hashing the main behaviour suffices.
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.main.hash(state);
    }
}

impl ProcessTerm {
    /// Builds a term, checking that every call resolves.
    pub fn new(procedures: Procedures, main: Behaviour) -> Result<Self, CoreError> {
        let term = ProcessTerm {
            procedures: Arc::new(procedures),
            main: Arc::new(main),
        };
        if let Some((owner, procedure)) = term.unresolved_calls().into_iter().next() {
            return Err(CoreError::UnresolvedCall { owner, procedure });
        }
        Ok(term)
    }

    pub fn nil() -> Self {
        ProcessTerm {
            procedures: Arc::new(Procedures::new()),
            main: Arc::new(Behaviour::Nil),
        }
    }

    /// Same procedures, different main behaviour.
    pub fn with_main(&self, main: Arc<Behaviour>) -> Self {
        ProcessTerm {
            procedures: Arc::clone(&self.procedures),
            main,
        }
    }

    /// (location, procedure) for every call without a definition.
    pub fn unresolved_calls(&self) -> Vec<(String, ProcName)> {
        let mut out = Vec::new();
        let mut scan = |owner: String, b: &Behaviour| {
            b.for_each_call(&mut |x| {
                if !self.procedures.contains_key(x) {
                    out.push((owner.clone(), x.clone()));
                }
            })
        };
        scan("main".to_string(), &self.main);
        for (name, body) in self.procedures.iter() {
            scan(format!("procedure {name}"), body);
        }
        out
    }

    /// AST size of main plus all procedure bodies.
    pub fn size(&self) -> usize {
        self.main.size() + self.procedures.values().map(|b| b.size()).sum::<usize>()
    }

    pub fn conditionals(&self) -> usize {
        self.main.conditionals()
            + self
                .procedures
                .values()
                .map(|b| b.conditionals())
                .sum::<usize>()
    }

    /// Follows bare calls at the head of `b`. Returns `None` when the chain cycles or a call is
    /// undefined.
    pub fn unfold_head<'a>(&'a self, mut b: &'a Arc<Behaviour>) -> Option<&'a Arc<Behaviour>> {
        let mut steps = 0;
        while let Behaviour::Call(x) = &**b {
            if steps > self.procedures.len() {
                return None;
            }
            b = self.procedures.get(x)?;
            steps += 1;
        }
        Some(b)
    }

    /// True when the main behaviour unfolds to `Nil`.
    pub fn is_terminated(&self) -> bool {
        matches!(self.unfold_head(&self.main).map(|b| &**b), Some(Behaviour::Nil))
    }
}

/// A finite map from process names to processes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Network {
    pub processes: BTreeMap<ProcessName, ProcessTerm>,
}

impl Network {
    /// Builds a network, rejecting empty maps and unresolved calls.
    pub fn new(processes: BTreeMap<ProcessName, ProcessTerm>) -> Result<Self, CoreError> {
        if processes.is_empty() {
            return Err(CoreError::EmptyNetwork);
        }
        for (p, term) in &processes {
            if let Some((owner, procedure)) = term.unresolved_calls().into_iter().next() {
                return Err(CoreError::UnresolvedCall {
                    owner: format!("{p}, {owner}"),
                    procedure,
                });
            }
        }
        Ok(Network { processes })
    }

    pub fn names(&self) -> impl Iterator<Item = &ProcessName> {
        self.processes.keys()
    }

    pub fn get(&self, p: &ProcessName) -> Option<&ProcessTerm> {
        self.processes.get(p)
    }

    pub fn len(&self) -> usize {
        self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }

    /// Every process unfolds to `Nil`.
    pub fn is_terminated(&self) -> bool {
        self.processes.values().all(|t| t.is_terminated())
    }

    pub fn size(&self) -> usize {
        self.processes.values().map(|t| t.size()).sum()
    }

    /// Sub-network over the given names; unknown names are ignored.
    pub fn restrict(&self, names: &BTreeSet<ProcessName>) -> Network {
        Network {
            processes: self
                .processes
                .iter()
                .filter(|(p, _)| names.contains(*p))
                .map(|(p, t)| (p.clone(), t.clone()))
                .collect(),
        }
    }
}

/// Label of an abstract reduction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionLabel {
    Com {
        from: ProcessName,
        expr: Expr,
        to: ProcessName,
        var: VarName,
    },
    Sel {
        from: ProcessName,
        to: ProcessName,
        label: Label,
    },
    Then {
        process: ProcessName,
        expr: Expr,
    },
    Else {
        process: ProcessName,
        expr: Expr,
    },
}

impl ActionLabel {
    pub fn com(
        from: impl Into<ProcessName>,
        expr: impl Into<Expr>,
        to: impl Into<ProcessName>,
        var: impl Into<VarName>,
    ) -> Self {
        ActionLabel::Com {
            from: from.into(),
            expr: expr.into(),
            to: to.into(),
            var: var.into(),
        }
    }

    pub fn sel(
        from: impl Into<ProcessName>,
        to: impl Into<ProcessName>,
        label: impl Into<Label>,
    ) -> Self {
        ActionLabel::Sel {
            from: from.into(),
            to: to.into(),
            label: label.into(),
        }
    }

    /// Processes involved in the action, sorted.
    pub fn processes(&self) -> Vec<&ProcessName> {
        match self {
            ActionLabel::Com { from, to, .. } | ActionLabel::Sel { from, to, .. } => {
                if from <= to {
                    vec![from, to]
                } else {
                    vec![to, from]
                }
            }
            ActionLabel::Then { process, .. } | ActionLabel::Else { process, .. } => vec![process],
        }
    }

    pub fn involves(&self, p: &ProcessName) -> bool {
        self.processes().contains(&p)
    }

    pub fn is_interaction(&self) -> bool {
        matches!(self, ActionLabel::Com { .. } | ActionLabel::Sel { .. })
    }

    /// Rank used for canonical ordering: Com, Sel, Then, Else.
    pub fn constructor_rank(&self) -> u8 {
        match self {
            ActionLabel::Com { .. } => 0,
            ActionLabel::Sel { .. } => 1,
            ActionLabel::Then { .. } => 2,
            ActionLabel::Else { .. } => 3,
        }
    }
}

/// `pn(α)` as a set.
pub fn process_names_of(label: &ActionLabel) -> BTreeSet<ProcessName> {
    label.processes().into_iter().cloned().collect()
}

/// Body of a choreography. `Dlock` stands for a deadlocked group of processes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChorBody {
    Nil,
    Dlock,
    Com {
        from: ProcessName,
        expr: Expr,
        to: ProcessName,
        var: VarName,
        cont: Arc<ChorBody>,
    },
    Sel {
        from: ProcessName,
        to: ProcessName,
        label: Label,
        cont: Arc<ChorBody>,
    },
    Cond {
        process: ProcessName,
        expr: Expr,
        then: Arc<ChorBody>,
        els: Arc<ChorBody>,
    },
    Call(ProcName),
}

impl ChorBody {
    pub fn com(
        from: impl Into<ProcessName>,
        expr: impl Into<Expr>,
        to: impl Into<ProcessName>,
        var: impl Into<VarName>,
        cont: ChorBody,
    ) -> Self {
        ChorBody::Com {
            from: from.into(),
            expr: expr.into(),
            to: to.into(),
            var: var.into(),
            cont: Arc::new(cont),
        }
    }

    pub fn sel(
        from: impl Into<ProcessName>,
        to: impl Into<ProcessName>,
        label: impl Into<Label>,
        cont: ChorBody,
    ) -> Self {
        ChorBody::Sel {
            from: from.into(),
            to: to.into(),
            label: label.into(),
            cont: Arc::new(cont),
        }
    }

    pub fn cond(
        process: impl Into<ProcessName>,
        expr: impl Into<Expr>,
        then: ChorBody,
        els: ChorBody,
    ) -> Self {
        ChorBody::Cond {
            process: process.into(),
            expr: expr.into(),
            then: Arc::new(then),
            els: Arc::new(els),
        }
    }

    pub fn call(name: impl Into<ProcName>) -> Self {
        ChorBody::Call(name.into())
    }

    /// Prefixes `cont` with the interaction described by `label`. Panics on Then/Else.
    pub fn prefix(label: &ActionLabel, cont: Arc<ChorBody>) -> Self {
        match label.clone() {
            ActionLabel::Com {
                from,
                expr,
                to,
                var,
            } => ChorBody::Com {
                from,
                expr,
                to,
                var,
                cont,
            },
            ActionLabel::Sel { from, to, label } => ChorBody::Sel {
                from,
                to,
                label,
                cont,
            },
            other => panic!("{other} is not an interaction"),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ChorBody::Nil | ChorBody::Dlock | ChorBody::Call(_) => 1,
            ChorBody::Com { cont, .. } | ChorBody::Sel { cont, .. } => 1 + cont.size(),
            ChorBody::Cond { then, els, .. } => 1 + then.size() + els.size(),
        }
    }

    pub fn conditionals(&self) -> usize {
        match self {
            ChorBody::Nil | ChorBody::Dlock | ChorBody::Call(_) => 0,
            ChorBody::Com { cont, .. } | ChorBody::Sel { cont, .. } => cont.conditionals(),
            ChorBody::Cond { then, els, .. } => 1 + then.conditionals() + els.conditionals(),
        }
    }

    /// Number of `Dlock` leaves.
    pub fn deadlocks(&self) -> usize {
        match self {
            ChorBody::Dlock => 1,
            ChorBody::Nil | ChorBody::Call(_) => 0,
            ChorBody::Com { cont, .. } | ChorBody::Sel { cont, .. } => cont.deadlocks(),
            ChorBody::Cond { then, els, .. } => then.deadlocks() + els.deadlocks(),
        }
    }

    pub fn for_each_call(&self, f: &mut impl FnMut(&ProcName)) {
        match self {
            ChorBody::Nil | ChorBody::Dlock => {}
            ChorBody::Call(x) => f(x),
            ChorBody::Com { cont, .. } | ChorBody::Sel { cont, .. } => cont.for_each_call(f),
            ChorBody::Cond { then, els, .. } => {
                then.for_each_call(f);
                els.for_each_call(f);
            }
        }
    }

    pub fn collect_processes(&self, out: &mut BTreeSet<ProcessName>) {
        match self {
            ChorBody::Nil | ChorBody::Dlock | ChorBody::Call(_) => {}
            ChorBody::Com { from, to, cont, .. } | ChorBody::Sel { from, to, cont, .. } => {
                out.insert(from.clone());
                out.insert(to.clone());
                cont.collect_processes(out);
            }
            ChorBody::Cond {
                process, then, els, ..
            } => {
                out.insert(process.clone());
                then.collect_processes(out);
                els.collect_processes(out);
            }
        }
    }

    /// First self-interaction, if any.
    pub fn self_interaction(&self) -> Option<&ProcessName> {
        match self {
            ChorBody::Nil | ChorBody::Dlock | ChorBody::Call(_) => None,
            ChorBody::Com { from, to, cont, .. } | ChorBody::Sel { from, to, cont, .. } => {
                if from == to {
                    Some(from)
                } else {
                    cont.self_interaction()
                }
            }
            ChorBody::Cond { then, els, .. } => {
                then.self_interaction().or_else(|| els.self_interaction())
            }
        }
    }
}

/// A choreography: procedure definitions plus a main body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Choreography {
    pub procedures: BTreeMap<ProcName, Arc<ChorBody>>,
    pub main: Arc<ChorBody>,
}

impl Choreography {
    /// Builds a choreography, checking calls resolve, bodies are guarded and no process talks
    /// to itself.
    pub fn new(
        procedures: BTreeMap<ProcName, Arc<ChorBody>>,
        main: ChorBody,
    ) -> Result<Self, CoreError> {
        let c = Choreography {
            procedures,
            main: Arc::new(main),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_main(main: ChorBody) -> Result<Self, CoreError> {
        Self::new(BTreeMap::new(), main)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let mut bodies = vec![("main".to_string(), &self.main)];
        for (name, body) in &self.procedures {
            if matches!(&**body, ChorBody::Call(_)) {
                return Err(CoreError::UnguardedBody(name.clone()));
            }
            bodies.push((format!("procedure {name}"), body));
        }
        for (owner, body) in bodies {
            if let Some(p) = body.self_interaction() {
                return Err(CoreError::SelfInteraction(p.clone()));
            }
            let mut missing = None;
            body.for_each_call(&mut |x| {
                if missing.is_none() && !self.procedures.contains_key(x) {
                    missing = Some(x.clone());
                }
            });
            if let Some(procedure) = missing {
                return Err(CoreError::UnresolvedCall { owner, procedure });
            }
        }
        Ok(())
    }

    /// Every process name occurring in main or a procedure body.
    pub fn processes(&self) -> BTreeSet<ProcessName> {
        let mut out = BTreeSet::new();
        self.main.collect_processes(&mut out);
        for body in self.procedures.values() {
            body.collect_processes(&mut out);
        }
        out
    }

    pub fn size(&self) -> usize {
        self.main.size() + self.procedures.values().map(|b| b.size()).sum::<usize>()
    }

    pub fn conditionals(&self) -> usize {
        self.main.conditionals()
            + self
                .procedures
                .values()
                .map(|b| b.conditionals())
                .sum::<usize>()
    }

    pub fn deadlocks(&self) -> usize {
        self.main.deadlocks() + self.procedures.values().map(|b| b.deadlocks()).sum::<usize>()
    }
}

/// Parallel composition of choreographies over disjoint processes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    pub components: Vec<Choreography>,
}

impl Program {
    pub fn new(components: Vec<Choreography>) -> Result<Self, CoreError> {
        if components.is_empty() {
            return Err(CoreError::EmptyProgram);
        }
        let mut seen = BTreeSet::new();
        for c in &components {
            for p in c.processes() {
                if !seen.insert(p.clone()) {
                    return Err(CoreError::OverlappingComponents(p));
                }
            }
        }
        Ok(Program { components })
    }

    pub fn single(c: Choreography) -> Self {
        Program {
            components: vec![c],
        }
    }

    pub fn deadlocks(&self) -> usize {
        self.components.iter().map(|c| c.deadlocks()).sum()
    }
}

impl From<Choreography> for Program {
    fn from(c: Choreography) -> Self {
        Program::single(c)
    }
}
