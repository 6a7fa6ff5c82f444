//! Recursive-descent parsers for `.sp` networks and `.cc` choreographies.
//!
//! Network syntax:
//! ```text
//! network := procdef ('|' procdef)*
//! procdef := NAME '{' ('def' X '{' B '}')* 'main' '{' B '}' '}'
//! B := stop | X | q!<e>; B | p?x; B | q+l; B | p&{l: B, ...} | if e then B else B
//! ```
//! Choreography syntax:
//! ```text
//! program := chor ('||' chor)*
//! chor := ('def' X '{' C '}')* 'main' '{' C '}'
//! C := stop | deadlock | X | p.e->q.x; C | p->q[l]; C | if p.e then C else C
//! ```
//! `#` starts a comment running to the end of the line. Either body form may be parenthesized.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{
    Behaviour, ChorBody, Choreography, Expr, Label, Network, ProcName, ProcessName, ProcessTerm,
    Procedures, Program, VarName,
};

const KEYWORDS: &[&str] = &["stop", "deadlock", "if", "then", "else", "def", "main", "continue"];

/// Location of a term or error in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected {0}")]
    Expected(String),
    #[error("unexpected trailing input")]
    Trailing,
    #[error("`{0}` is a reserved word")]
    Reserved(String),
    #[error("self-communication in process {0}")]
    SelfCommunication(String),
    #[error("duplicate procedure {0}")]
    DuplicateProcedure(String),
    #[error("duplicate process {0}")]
    DuplicateProcess(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("call to undefined procedure {0}")]
    UnresolvedCall(String),
    #[error("procedure {0} has an unguarded body")]
    UnguardedBody(String),
    #[error("process {0} occurs in more than one parallel component")]
    OverlappingComponents(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
}

type Result<T> = std::result::Result<T, ParseError>;

/// Parses a network and rejects self-communication and unresolved calls.
pub fn parse_network(text: &str) -> Result<Network> {
    Parser::new(text, true).network()
}

/// Parses a network checking syntax only. Self-communication and unresolved calls are left for
/// the checks module to report.
pub fn parse_network_unvalidated(text: &str) -> Result<Network> {
    Parser::new(text, false).network()
}

/// Parses a single choreography (no `||`).
pub fn parse_choreography(text: &str) -> Result<Choreography> {
    let mut p = Parser::new(text, true);
    let c = p.choreography()?;
    p.finish()?;
    Ok(c)
}

/// Parses choreographies joined by `||`.
pub fn parse_program(text: &str) -> Result<Program> {
    Parser::new(text, true).program()
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    strict: bool,
    /// Calls seen in the current scope, with their spans.
    calls: Vec<(ProcName, SourceSpan)>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, strict: bool) -> Self {
        Parser {
            src,
            pos: 0,
            strict,
            calls: Vec::new(),
        }
    }

    fn span(&self, start: usize, end: usize) -> SourceSpan {
        let before = &self.src[..start];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        SourceSpan {
            line,
            column: self.src[line_start..start].chars().count() + 1,
            start,
            end,
        }
    }

    fn error_at(&self, start: usize, end: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            span: self.span(start, end),
            kind,
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        let end = self.src[self.pos..]
            .chars()
            .next()
            .map_or(self.pos, |c| self.pos + c.len_utf8());
        self.error_at(self.pos, end, ParseErrorKind::Expected(what.to_string()))
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn at(&mut self, token: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(token)
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.at(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{token}`")))
        }
    }

    fn word_len(&self) -> usize {
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() => {}
            _ => return 0,
        }
        chars
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i)
    }

    fn at_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        self.word_len() == kw.len() && self.rest().starts_with(kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{kw}`")))
        }
    }

    /// Identifier that is not a keyword; returns it with its start offset.
    fn ident(&mut self, what: &str) -> Result<(&'a str, usize)> {
        self.skip_ws();
        let len = self.word_len();
        if len == 0 {
            return Err(self.expected(what));
        }
        let start = self.pos;
        let word = &self.src[start..start + len];
        if KEYWORDS.contains(&word) {
            return Err(self.error_at(
                start,
                start + len,
                ParseErrorKind::Reserved(word.to_string()),
            ));
        }
        self.pos += len;
        Ok((word, start))
    }

    /// Word characters and balanced parenthesized groups, without whitespace.
    fn expr(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                i += 1;
            } else if c == b'(' {
                let mut depth = 0usize;
                let mut j = i;
                loop {
                    match self.src[j..].chars().next() {
                        None => {
                            self.pos = j;
                            return Err(self.expected("`)` closing the expression"));
                        }
                        Some(ch) if ch.is_whitespace() => {
                            self.pos = j;
                            return Err(self.expected("`)` (no whitespace inside expressions)"));
                        }
                        Some(ch) => {
                            if ch == '(' {
                                depth += 1;
                            } else if ch == ')' {
                                depth -= 1;
                            }
                            j += ch.len_utf8();
                            if depth == 0 {
                                break;
                            }
                        }
                    }
                }
                i = j;
            } else {
                break;
            }
        }
        if i == start {
            return Err(self.expected("an expression"));
        }
        self.pos = i;
        Ok(Expr::new(&self.src[start..i]))
    }

    fn finish(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.error_at(self.pos, self.src.len(), ParseErrorKind::Trailing));
        }
        Ok(())
    }

    fn check_calls(&mut self, defined: &BTreeMap<ProcName, impl Sized>) -> Result<()> {
        let calls = std::mem::take(&mut self.calls);
        if !self.strict {
            return Ok(());
        }
        for (x, span) in calls {
            if !defined.contains_key(&x) {
                return Err(ParseError {
                    span,
                    kind: ParseErrorKind::UnresolvedCall(x.to_string()),
                });
            }
        }
        Ok(())
    }

    // ---- networks ----

    fn network(&mut self) -> Result<Network> {
        let mut processes = BTreeMap::new();
        loop {
            let (name, start) = self.ident("a process name")?;
            let name = ProcessName::new(name);
            let term = self.process(&name)?;
            if processes.insert(name.clone(), term).is_some() {
                return Err(self.error_at(
                    start,
                    start + name.as_str().len(),
                    ParseErrorKind::DuplicateProcess(name.to_string()),
                ));
            }
            if !self.eat("|") {
                break;
            }
        }
        self.finish()?;
        Ok(Network { processes })
    }

    fn process(&mut self, me: &ProcessName) -> Result<ProcessTerm> {
        self.expect("{")?;
        let mut procedures = Procedures::new();
        while self.eat_keyword("def") {
            let (x, start) = self.ident("a procedure name")?;
            self.expect("{")?;
            let body = self.behaviour(me)?;
            self.expect("}")?;
            if procedures.insert(ProcName::new(x), Arc::new(body)).is_some() {
                return Err(self.error_at(
                    start,
                    start + x.len(),
                    ParseErrorKind::DuplicateProcedure(x.to_string()),
                ));
            }
        }
        self.expect_keyword("main")?;
        self.expect("{")?;
        let main = self.behaviour(me)?;
        self.expect("}")?;
        self.expect("}")?;
        self.check_calls(&procedures)?;
        Ok(ProcessTerm {
            procedures: Arc::new(procedures),
            main: Arc::new(main),
        })
    }

    fn peer(&mut self, me: &ProcessName, name: &str, start: usize) -> Result<ProcessName> {
        if self.strict && name == me.as_str() {
            return Err(self.error_at(
                start,
                start + name.len(),
                ParseErrorKind::SelfCommunication(name.to_string()),
            ));
        }
        Ok(ProcessName::new(name))
    }

    fn behaviour(&mut self, me: &ProcessName) -> Result<Behaviour> {
        if self.eat("(") {
            let b = self.behaviour(me)?;
            self.expect(")")?;
            return Ok(b);
        }
        if self.eat_keyword("stop") {
            return Ok(Behaviour::Nil);
        }
        if self.eat_keyword("if") {
            let expr = self.expr()?;
            self.expect_keyword("then")?;
            let then = self.behaviour(me)?;
            self.expect_keyword("else")?;
            let els = self.behaviour(me)?;
            self.eat_keyword("continue");
            return Ok(Behaviour::Cond {
                expr,
                then: Arc::new(then),
                els: Arc::new(els),
            });
        }
        let (name, start) = self.ident("a behaviour")?;
        let end = start + name.len();
        match self.peek() {
            Some('!') => {
                let to = self.peer(me, name, start)?;
                self.expect("!")?;
                self.expect("<")?;
                let expr = self.expr()?;
                self.expect(">")?;
                self.expect(";")?;
                let cont = self.behaviour(me)?;
                Ok(Behaviour::Send {
                    to,
                    expr,
                    cont: Arc::new(cont),
                })
            }
            Some('?') => {
                let from = self.peer(me, name, start)?;
                self.expect("?")?;
                let (var, _) = self.ident("a variable")?;
                self.expect(";")?;
                let cont = self.behaviour(me)?;
                Ok(Behaviour::Receive {
                    from,
                    var: VarName::new(var),
                    cont: Arc::new(cont),
                })
            }
            Some('+') => {
                let to = self.peer(me, name, start)?;
                self.expect("+")?;
                let (label, _) = self.ident("a label")?;
                self.expect(";")?;
                let cont = self.behaviour(me)?;
                Ok(Behaviour::Select {
                    to,
                    label: Label::new(label),
                    cont: Arc::new(cont),
                })
            }
            Some('&') => {
                let from = self.peer(me, name, start)?;
                self.expect("&")?;
                self.expect("{")?;
                let mut branches = BTreeMap::new();
                loop {
                    let (label, lstart) = self.ident("a label")?;
                    self.expect(":")?;
                    let b = self.behaviour(me)?;
                    if branches.insert(Label::new(label), Arc::new(b)).is_some() {
                        return Err(self.error_at(
                            lstart,
                            lstart + label.len(),
                            ParseErrorKind::DuplicateLabel(label.to_string()),
                        ));
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect("}")?;
                Ok(Behaviour::Offer { from, branches })
            }
            _ => {
                let x = ProcName::new(name);
                self.calls.push((x.clone(), self.span(start, end)));
                Ok(Behaviour::Call(x))
            }
        }
    }

    // ---- choreographies ----

    fn program(&mut self) -> Result<Program> {
        let mut components: Vec<Choreography> = Vec::new();
        let mut seen = BTreeSet::new();
        loop {
            let start = {
                self.skip_ws();
                self.pos
            };
            let c = self.choreography()?;
            for p in c.processes() {
                if !seen.insert(p.clone()) {
                    return Err(self.error_at(
                        start,
                        self.pos,
                        ParseErrorKind::OverlappingComponents(p.to_string()),
                    ));
                }
            }
            components.push(c);
            if !self.eat("||") {
                break;
            }
        }
        self.finish()?;
        Ok(Program { components })
    }

    fn choreography(&mut self) -> Result<Choreography> {
        let mut procedures = BTreeMap::new();
        while self.eat_keyword("def") {
            let (x, start) = self.ident("a procedure name")?;
            self.expect("{")?;
            let body_start = {
                self.skip_ws();
                self.pos
            };
            let body = self.chor_body()?;
            if let ChorBody::Call(_) = body {
                return Err(self.error_at(
                    body_start,
                    self.pos,
                    ParseErrorKind::UnguardedBody(x.to_string()),
                ));
            }
            self.expect("}")?;
            if procedures.insert(ProcName::new(x), Arc::new(body)).is_some() {
                return Err(self.error_at(
                    start,
                    start + x.len(),
                    ParseErrorKind::DuplicateProcedure(x.to_string()),
                ));
            }
        }
        self.expect_keyword("main")?;
        self.expect("{")?;
        let main = self.chor_body()?;
        self.expect("}")?;
        self.check_calls(&procedures)?;
        Ok(Choreography {
            procedures,
            main: Arc::new(main),
        })
    }

    fn distinct(&self, p: &str, q: &str, start: usize) -> Result<()> {
        if p == q {
            return Err(self.error_at(
                start,
                self.pos,
                ParseErrorKind::SelfCommunication(p.to_string()),
            ));
        }
        Ok(())
    }

    fn chor_body(&mut self) -> Result<ChorBody> {
        if self.eat("(") {
            let c = self.chor_body()?;
            self.expect(")")?;
            return Ok(c);
        }
        if self.eat_keyword("stop") {
            return Ok(ChorBody::Nil);
        }
        if self.eat_keyword("deadlock") {
            return Ok(ChorBody::Dlock);
        }
        if self.eat_keyword("if") {
            let (p, _) = self.ident("a process name")?;
            self.expect(".")?;
            let expr = self.expr()?;
            self.expect_keyword("then")?;
            let then = self.chor_body()?;
            self.expect_keyword("else")?;
            let els = self.chor_body()?;
            return Ok(ChorBody::Cond {
                process: ProcessName::new(p),
                expr,
                then: Arc::new(then),
                els: Arc::new(els),
            });
        }
        let (name, start) = self.ident("a choreography")?;
        let end = start + name.len();
        if self.eat("->") {
            let (q, _) = self.ident("a process name")?;
            self.expect("[")?;
            let (label, _) = self.ident("a label")?;
            self.expect("]")?;
            self.distinct(name, q, start)?;
            self.expect(";")?;
            let cont = self.chor_body()?;
            return Ok(ChorBody::Sel {
                from: ProcessName::new(name),
                to: ProcessName::new(q),
                label: Label::new(label),
                cont: Arc::new(cont),
            });
        }
        if self.eat(".") {
            let expr = self.expr()?;
            self.expect("->")?;
            let (q, _) = self.ident("a process name")?;
            self.expect(".")?;
            let (var, _) = self.ident("a variable")?;
            self.distinct(name, q, start)?;
            self.expect(";")?;
            let cont = self.chor_body()?;
            return Ok(ChorBody::Com {
                from: ProcessName::new(name),
                expr,
                to: ProcessName::new(q),
                var: VarName::new(var),
                cont: Arc::new(cont),
            });
        }
        let x = ProcName::new(name);
        self.calls.push((x.clone(), self.span(start, end)));
        Ok(ChorBody::Call(x))
    }
}
