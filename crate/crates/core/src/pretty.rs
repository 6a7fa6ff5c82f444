//! Deterministic textual rendering. Output reparses to the same value.

use std::fmt::{self, Display, Formatter};

use crate::ast::{ActionLabel, Behaviour, ChorBody, Choreography, Network, ProcessTerm, Program};

impl Display for Behaviour {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Behaviour::Nil => f.write_str("stop"),
            Behaviour::Call(x) => write!(f, "{x}"),
            Behaviour::Send { to, expr, cont } => write!(f, "{to}!<{expr}>; {cont}"),
            Behaviour::Receive { from, var, cont } => write!(f, "{from}?{var}; {cont}"),
            Behaviour::Select { to, label, cont } => write!(f, "{to}+{label}; {cont}"),
            Behaviour::Offer { from, branches } => {
                write!(f, "{from}&{{")?;
                for (i, (l, b)) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {b}")?;
                }
                f.write_str("}")
            }
            Behaviour::Cond { expr, then, els } => write!(f, "if {expr} then {then} else {els}"),
        }
    }
}

impl Display for ProcessTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (name, body) in self.procedures.iter() {
            write!(f, "def {name} {{ {body} }} ")?;
        }
        write!(f, "main {{ {} }}", self.main)
    }
}

impl Display for Network {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, (p, term)) in self.processes.iter().enumerate() {
            if i > 0 {
                f.write_str("| ")?;
            }
            writeln!(f, "{p} {{")?;
            for (name, body) in term.procedures.iter() {
                writeln!(f, "  def {name} {{ {body} }}")?;
            }
            writeln!(f, "  main {{ {} }}", term.main)?;
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

impl Display for ChorBody {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ChorBody::Nil => f.write_str("stop"),
            ChorBody::Dlock => f.write_str("deadlock"),
            ChorBody::Call(x) => write!(f, "{x}"),
            ChorBody::Com {
                from,
                expr,
                to,
                var,
                cont,
            } => write!(f, "{from}.{expr}->{to}.{var}; {cont}"),
            ChorBody::Sel {
                from,
                to,
                label,
                cont,
            } => write!(f, "{from}->{to}[{label}]; {cont}"),
            ChorBody::Cond {
                process,
                expr,
                then,
                els,
            } => write!(f, "if {process}.{expr} then {then} else {els}"),
        }
    }
}

impl Display for Choreography {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (name, body) in &self.procedures {
            writeln!(f, "def {name} {{ {body} }}")?;
        }
        writeln!(f, "main {{ {} }}", self.main)
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str("||\n")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Display for ActionLabel {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ActionLabel::Com {
                from,
                expr,
                to,
                var,
            } => write!(f, "{from}.{expr}->{to}.{var}"),
            ActionLabel::Sel { from, to, label } => write!(f, "{from}->{to}[{label}]"),
            ActionLabel::Then { process, expr } => write!(f, "then {process}.{expr}"),
            ActionLabel::Else { process, expr } => write!(f, "else {process}.{expr}"),
        }
    }
}
