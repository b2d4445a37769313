//! Canonical text form of strategies and the strategy store file.

use super::{cost, Clause, EAst, Index, Loc, Step, Strategy};
use crate::perturb::EditType;
use crate::syntax::{EdgeType, NodeType};
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("strategy parse error at {line}:{col}: {message}")]
pub struct StrategyParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

fn quote(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn w_loc(l: &Loc, o: &mut String) {
    match l {
        Loc::Source => o.push_str("Source"),
        Loc::Apply(base, steps) => {
            o.push_str("ApplyTraversal(");
            w_loc(base, o);
            for s in steps {
                o.push_str(", ");
                w_step(s, o);
            }
            o.push(')');
        }
    }
}

fn w_step(s: &Step, o: &mut String) {
    match s {
        Step::Edge { kind, index } => {
            let _ = write!(o, "GetEdge({kind}, ");
            w_index(index, o);
            o.push(')');
        }
        Step::Kleene { kind, clauses } => {
            let _ = write!(o, "GetKleeneStar({kind}, ");
            if clauses.len() == 1 {
                w_clause(&clauses[0], o);
            } else {
                o.push_str("And(");
                for (i, c) in clauses.iter().enumerate() {
                    if i > 0 {
                        o.push_str(", ");
                    }
                    w_clause(c, o);
                }
                o.push(')');
            }
            o.push(')');
        }
    }
}

fn w_clause(c: &Clause, o: &mut String) {
    match c {
        Clause::TypeIs(t) => {
            let _ = write!(o, "GetClause({t})");
        }
        Clause::NeighbourTypeIs(s, t) => {
            o.push_str("GetNeighbourClause(");
            w_step(s, o);
            let _ = write!(o, ", {t})");
        }
    }
}

fn w_index(i: &Index, o: &mut String) {
    match i {
        Index::Constant(z) => {
            let _ = write!(o, "GetConstant({z})");
        }
        Index::Offset(l, z) => {
            o.push_str("GetOffsetIndex(");
            w_loc(l, o);
            let _ = write!(o, ", {z})");
        }
    }
}

fn w_east(e: &EAst, o: &mut String) {
    match e {
        EAst::Ref(l) => {
            o.push_str("ReferenceAST(");
            w_loc(l, o);
            o.push(')');
        }
        EAst::Const {
            kind,
            token,
            children,
        } => {
            let _ = write!(o, "ConstantAST({kind}, ");
            quote(token, o);
            for c in children {
                o.push_str(", ");
                w_east(c, o);
            }
            o.push(')');
        }
    }
}

/// Single-line canonical text.
pub fn serialize(s: &Strategy) -> String {
    let mut o = String::new();
    let _ = write!(o, "{}(", s.edit_type);
    w_loc(&s.loc, &mut o);
    o.push_str(", ");
    w_index(&s.index, &mut o);
    o.push_str(", ");
    w_east(&s.out, &mut o);
    o.push(')');
    o
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(char),
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, StrategyParseError> {
        let mut p = Parser {
            src,
            toks: Vec::new(),
            pos: 0,
        };
        let b = src.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i] as char;
            let start = i;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                p.toks.push((start, Tok::Ident(src[start..i].to_string())));
            } else if c.is_ascii_digit() || c == '-' {
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let n = src[start..i]
                    .parse()
                    .map_err(|_| p.err_at(start, "bad integer"))?;
                p.toks.push((start, Tok::Int(n)));
            } else if c == '"' {
                i += 1;
                let mut s = String::new();
                let mut chars = src[i..].char_indices();
                loop {
                    let Some((k, ch)) = chars.next() else {
                        return Err(p.err_at(start, "unterminated string"));
                    };
                    match ch {
                        '"' => {
                            i += k + 1;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 't')) => s.push('\t'),
                            Some((_, 'r')) => s.push('\r'),
                            Some((_, e @ ('"' | '\\'))) => s.push(e),
                            _ => return Err(p.err_at(start + 1 + k, "bad escape")),
                        },
                        ch => s.push(ch),
                    }
                }
                p.toks.push((start, Tok::Str(s)));
            } else if "(),=".contains(c) {
                p.toks.push((start, Tok::Punct(c)));
                i += 1;
            } else {
                return Err(p.err_at(start, &format!("unexpected character `{c}`")));
            }
        }
        Ok(p)
    }

    fn err_at(&self, offset: usize, message: &str) -> StrategyParseError {
        let before = &self.src[..offset.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |k| k + 1) + 1;
        StrategyParseError {
            line,
            col,
            message: message.to_string(),
        }
    }

    fn err(&self, message: &str) -> StrategyParseError {
        let off = self.toks.get(self.pos).map_or(self.src.len(), |t| t.0);
        self.err_at(off, message)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn punct(&mut self, c: char) -> Result<(), StrategyParseError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(&format!("expected `{c}`"))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.punct(c).is_ok()
    }

    fn ident(&mut self) -> Result<String, StrategyParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn int(&mut self) -> Result<i64, StrategyParseError> {
        match self.peek() {
            Some(&Tok::Int(n)) => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err("expected integer")),
        }
    }

    fn string(&mut self) -> Result<String, StrategyParseError> {
        match self.next() {
            Some(Tok::Str(s)) => Ok(s),
            _ => {
                self.pos -= 1;
                Err(self.err("expected string"))
            }
        }
    }

    /// `Head(` with a known head.
    fn head(&mut self, allowed: &[&str]) -> Result<String, StrategyParseError> {
        let save = self.pos;
        let h = self.ident()?;
        if !allowed.contains(&h.as_str()) {
            self.pos = save;
            return Err(self.err(&format!("expected one of {}", allowed.join(", "))));
        }
        Ok(h)
    }

    fn edge_type(&mut self) -> Result<EdgeType, StrategyParseError> {
        let save = self.pos;
        let s = self.ident()?;
        s.parse().map_err(|m: String| {
            self.pos = save;
            self.err(&m)
        })
    }

    fn node_type(&mut self) -> Result<NodeType, StrategyParseError> {
        let save = self.pos;
        let s = self.ident()?;
        s.parse().map_err(|m: String| {
            self.pos = save;
            self.err(&m)
        })
    }

    fn strategy(&mut self) -> Result<Strategy, StrategyParseError> {
        let edit_type = match self.head(&["Insert", "Replace"])?.as_str() {
            "Insert" => EditType::Insert,
            _ => EditType::Replace,
        };
        self.punct('(')?;
        let loc = self.loc()?;
        self.punct(',')?;
        let index = self.index()?;
        self.punct(',')?;
        let out = self.east()?;
        self.punct(')')?;
        Ok(Strategy {
            edit_type,
            loc,
            index,
            out,
        })
    }

    fn loc(&mut self) -> Result<Loc, StrategyParseError> {
        if self.head(&["Source", "ApplyTraversal"])? == "Source" {
            return Ok(Loc::Source);
        }
        self.punct('(')?;
        let base = self.loc()?;
        let mut steps = Vec::new();
        while self.eat(',') {
            steps.push(self.step()?);
        }
        if steps.is_empty() {
            return Err(self.err("ApplyTraversal needs at least one traversal"));
        }
        self.punct(')')?;
        Ok(Loc::Apply(Box::new(base), steps))
    }

    fn step(&mut self) -> Result<Step, StrategyParseError> {
        let h = self.head(&["GetEdge", "GetKleeneStar"])?;
        self.punct('(')?;
        let kind = self.edge_type()?;
        self.punct(',')?;
        let s = if h == "GetEdge" {
            let index = self.index()?;
            if kind == EdgeType::SynParent && index != Index::Constant(-1) {
                return Err(self.err("SynParent edges take GetConstant(-1)"));
            }
            Step::Edge { kind, index }
        } else {
            let clauses = if matches!(self.peek(), Some(Tok::Ident(s)) if s == "And") {
                self.pos += 1;
                self.punct('(')?;
                let mut cs = vec![self.clause()?];
                while self.eat(',') {
                    cs.push(self.clause()?);
                }
                self.punct(')')?;
                cs
            } else {
                vec![self.clause()?]
            };
            Step::Kleene { kind, clauses }
        };
        self.punct(')')?;
        Ok(s)
    }

    fn clause(&mut self) -> Result<Clause, StrategyParseError> {
        let h = self.head(&["GetClause", "GetNeighbourClause"])?;
        self.punct('(')?;
        let c = if h == "GetClause" {
            Clause::TypeIs(self.node_type()?)
        } else {
            let s = self.step()?;
            self.punct(',')?;
            Clause::NeighbourTypeIs(Box::new(s), self.node_type()?)
        };
        self.punct(')')?;
        Ok(c)
    }

    fn index(&mut self) -> Result<Index, StrategyParseError> {
        let h = self.head(&["GetConstant", "GetOffsetIndex"])?;
        self.punct('(')?;
        let i = if h == "GetConstant" {
            Index::Constant(self.int()?)
        } else {
            let l = self.loc()?;
            self.punct(',')?;
            Index::Offset(Box::new(l), self.int()?)
        };
        self.punct(')')?;
        Ok(i)
    }

    fn east(&mut self) -> Result<EAst, StrategyParseError> {
        let h = self.head(&["ConstantAST", "ReferenceAST"])?;
        self.punct('(')?;
        let e = if h == "ReferenceAST" {
            EAst::Ref(self.loc()?)
        } else {
            let kind = self.node_type()?;
            self.punct(',')?;
            let token = self.string()?;
            let mut children = Vec::new();
            while self.eat(',') {
                children.push(self.east()?);
            }
            if !kind.arity_ok(children.len()) {
                return Err(self.err(&format!("{kind} cannot have {} children", children.len())));
            }
            EAst::Const {
                kind,
                token,
                children,
            }
        };
        self.punct(')')?;
        Ok(e)
    }

    fn end(&self) -> Result<(), StrategyParseError> {
        if self.pos < self.toks.len() {
            return Err(self.err("trailing input"));
        }
        Ok(())
    }
}

pub fn parse_strategy(text: &str) -> Result<Strategy, StrategyParseError> {
    let mut p = Parser::new(text)?;
    let s = p.strategy()?;
    p.end()?;
    Ok(s)
}

/// One learned strategy with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreRecord {
    pub spec: String,
    pub cost: u64,
    /// Number of training pairs the strategy was generalized from.
    pub support: usize,
    pub strategy: Strategy,
}

const STORE_HEADER: &str = "# flowmend strategy store v1";

pub fn write_store(records: &[StoreRecord]) -> String {
    let mut o = format!("{STORE_HEADER}\n");
    for r in records {
        o.push_str("\nstrategy spec=");
        quote(&r.spec, &mut o);
        let _ = writeln!(o, " cost={} support={}", r.cost, r.support);
        o.push_str(&serialize(&r.strategy));
        o.push('\n');
    }
    o
}

pub fn parse_store(text: &str) -> Result<Vec<StoreRecord>, StrategyParseError> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    let err = |line: usize, message: String| StrategyParseError {
        line: line + 1,
        col: 1,
        message,
    };
    while let Some((n, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(rest) = line.strip_prefix("strategy ") else {
            return Err(err(n, "expected `strategy` header".into()));
        };
        let mut p = Parser::new(rest).map_err(|e| err(n, e.message))?;
        let mut field = |name: &str| -> Result<Tok, StrategyParseError> {
            if p.ident().ok().as_deref() != Some(name) || !p.eat('=') {
                return Err(err(n, format!("expected `{name}=`")));
            }
            p.next()
                .ok_or_else(|| err(n, format!("missing value for `{name}`")))
        };
        let spec = match field("spec")? {
            Tok::Str(s) => s,
            _ => return Err(err(n, "spec must be a string".into())),
        };
        let Tok::Int(c) = field("cost")? else {
            return Err(err(n, "cost must be an integer".into()));
        };
        let Tok::Int(support) = field("support")? else {
            return Err(err(n, "support must be an integer".into()));
        };
        let Some((m, body)) = lines.next() else {
            return Err(err(n, "header without strategy".into()));
        };
        let strategy = parse_strategy(body).map_err(|e| StrategyParseError { line: m + 1, ..e })?;
        if cost(&strategy) != c as u64 {
            return Err(err(
                n,
                format!("recorded cost {c} != computed {}", cost(&strategy)),
            ));
        }
        out.push(StoreRecord {
            spec,
            cost: c as u64,
            support: support as usize,
            strategy,
        });
    }
    Ok(out)
}
