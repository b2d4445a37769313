use super::spec::{callee_matches, GuardPattern, SinkPattern, SourcePattern, VulnSpec};
use super::{closure, AnnotatedAst, Annotation};
use crate::syntax::{AstDoc, NodeId, NodeType};
use std::collections::{BTreeMap, BTreeSet};

type Binding = (NodeId, String);

struct Analysis<'a> {
    doc: &'a AstDoc,
    spec: &'a VulnSpec,
    lookup_methods: BTreeSet<String>,
    /// Declared names per scope (function literal or root).
    decls: BTreeMap<NodeId, BTreeSet<String>>,
    /// Definition nodes per binding, ascending.
    defs: BTreeMap<Binding, Vec<NodeId>>,
    /// Function literals written under a literal key: (base text, key).
    key_writes: BTreeMap<(String, String), Vec<NodeId>>,
    edges: BTreeSet<(NodeId, NodeId)>,
    annotations: Vec<(NodeId, Annotation)>,
}

pub(super) fn run(doc: &AstDoc, spec: &VulnSpec) -> AnnotatedAst {
    let lookup_methods = spec
        .sinks
        .iter()
        .flat_map(|s| match s {
            SinkPattern::DynamicCall { lookup_methods } => lookup_methods.clone(),
            SinkPattern::CallArg { .. } => Vec::new(),
        })
        .collect();
    let mut a = Analysis {
        doc,
        spec,
        lookup_methods,
        decls: BTreeMap::new(),
        defs: BTreeMap::new(),
        key_writes: BTreeMap::new(),
        edges: BTreeSet::new(),
        annotations: Vec::new(),
    };
    a.collect_declarations();
    a.collect_definitions();
    a.stmt(doc.root());
    a.annotate_sources();
    a.annotate_sinks();
    a.annotate_guards();
    a.interpose_guards();
    a.prune();
    AnnotatedAst::from_parts(doc.clone(), spec.clone(), a.edges, a.annotations)
}

fn unquote(s: &str) -> &str {
    if s.len() >= 2 && (s.starts_with('\'') || s.starts_with('"')) {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

impl Analysis<'_> {
    fn kind(&self, n: NodeId) -> NodeType {
        self.doc.kind(n)
    }

    fn ch(&self, n: NodeId) -> &[NodeId] {
        self.doc.children(n)
    }

    fn scope_of(&self, n: NodeId) -> NodeId {
        self.doc
            .ancestors(n)
            .find(|&a| self.kind(a) == NodeType::FuncExpr)
            .unwrap_or(self.doc.root())
    }

    fn collect_declarations(&mut self) {
        for n in self.doc.ids() {
            match self.kind(n) {
                NodeType::VarDecl => {
                    let s = self.scope_of(n);
                    self.decls
                        .entry(s)
                        .or_default()
                        .insert(self.doc.token(n).to_string());
                }
                NodeType::Param => {
                    let f = self.doc.parent(n).expect("param has a function");
                    self.decls
                        .entry(f)
                        .or_default()
                        .insert(self.doc.token(n).to_string());
                }
                _ => {}
            }
        }
    }

    /// Binding a name refers to at node `n`: innermost declaring scope, else
    /// the root (implicit global).
    fn resolve(&self, n: NodeId, name: &str) -> Binding {
        let mut scopes: Vec<NodeId> = self
            .doc
            .ancestors(n)
            .filter(|&a| self.kind(a) == NodeType::FuncExpr)
            .collect();
        scopes.push(self.doc.root());
        let s = scopes
            .into_iter()
            .find(|s| self.decls.get(s).is_some_and(|d| d.contains(name)))
            .unwrap_or(self.doc.root());
        (s, name.to_string())
    }

    fn collect_definitions(&mut self) {
        for n in self.doc.ids() {
            let def = match self.kind(n) {
                NodeType::VarDecl | NodeType::Param => Some(n),
                NodeType::AssignExpr => {
                    let lhs = self.ch(n)[0];
                    let rhs = self.ch(n)[1];
                    match self.kind(lhs) {
                        NodeType::VarExpr => Some(lhs),
                        NodeType::IndexExpr | NodeType::DotExpr
                            if self.kind(rhs) == NodeType::FuncExpr =>
                        {
                            if let Some(key) = self.member_key(lhs) {
                                self.key_writes.entry(key).or_default().push(rhs);
                            }
                            None
                        }
                        _ => None,
                    }
                }
                _ => None,
            };
            if let Some(d) = def {
                let b = self.resolve(d, self.doc.token(d));
                self.defs.entry(b).or_default().push(d);
            }
        }
    }

    /// (base text, key) for `base.key` or `base["key"]`.
    fn member_key(&self, m: NodeId) -> Option<(String, String)> {
        let [base, key] = self.ch(m) else { return None };
        let base_text = self.doc.value(*base).to_string();
        match self.kind(m) {
            NodeType::DotExpr => Some((base_text, self.doc.token(*key).to_string())),
            NodeType::IndexExpr if self.is_string_literal(*key) => {
                Some((base_text, unquote(self.doc.token(*key)).to_string()))
            }
            _ => None,
        }
    }

    fn is_string_literal(&self, n: NodeId) -> bool {
        self.kind(n) == NodeType::Literal && {
            let t = self.doc.token(n);
            t.starts_with('\'') || t.starts_with('"')
        }
    }

    /// Node whose completion makes definition `d` visible.
    fn def_site(&self, d: NodeId) -> Option<NodeId> {
        match self.kind(d) {
            NodeType::VarDecl => self.doc.parent(d),
            NodeType::VarExpr => self.doc.parent(d),
            _ => None,
        }
    }

    /// The value assigned by a definition, if any.
    fn def_init(&self, d: NodeId) -> Option<NodeId> {
        match self.kind(d) {
            NodeType::VarDecl | NodeType::VarExpr => {
                self.def_site(d).and_then(|s| self.ch(s).get(1).copied())
            }
            _ => None,
        }
    }

    /// Region within which `d` executes unconditionally.
    fn def_block(&self, d: NodeId) -> NodeId {
        if self.kind(d) == NodeType::Param {
            return self.doc.parent(d).expect("param has a function");
        }
        self.doc
            .ancestors(d)
            .find(|&a| self.kind(a).is_statement_list())
            .unwrap_or(self.doc.root())
    }

    /// Reaching definitions for a use: the nearest preceding definition that
    /// dominates it, plus any later conditional ones.
    fn reaching(&self, u: NodeId) -> Vec<NodeId> {
        let b = self.resolve(u, self.doc.token(u));
        let Some(defs) = self.defs.get(&b) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for &d in defs.iter().rev() {
            if d >= u || self.def_site(d).is_some_and(|s| self.doc.is_ancestor(s, u)) {
                continue;
            }
            out.push(d);
            if self.doc.is_ancestor(self.def_block(d), u) {
                break;
            }
        }
        out.sort();
        out
    }

    fn link(&mut self, from: &[NodeId], to: NodeId) {
        for &f in from {
            if f != to {
                self.edges.insert((f, to));
            }
        }
    }

    fn stmt(&mut self, s: NodeId) {
        let ch = self.ch(s).to_vec();
        match self.kind(s) {
            NodeType::Program | NodeType::BlockStmt => ch.into_iter().for_each(|c| self.stmt(c)),
            NodeType::Expr | NodeType::ReturnStmt => {
                for c in ch {
                    self.expr(c, false);
                }
            }
            NodeType::DeclExpr => {
                for d in ch {
                    let parts = self.ch(d).to_vec();
                    if let [var, init] = parts[..] {
                        let h = self.expr(init, false);
                        self.link(&h, var);
                    }
                }
            }
            NodeType::IfStmt => {
                self.expr(ch[0], false);
                for &b in &ch[1..] {
                    self.stmt(b);
                }
            }
            _ => {
                self.expr(s, false);
            }
        }
    }

    fn is_sanitizer_callee(&self, callee: NodeId) -> bool {
        let text = self.doc.value(callee);
        self.spec.sanitizers.iter().any(|p| callee_matches(p, text))
    }

    /// `x.m(k, ...)` where `m` is a configured lookup method.
    fn is_lookup_call(&self, c: NodeId) -> bool {
        if self.kind(c) != NodeType::CallExpr || self.ch(c).len() < 2 {
            return false;
        }
        let callee = self.ch(c)[0];
        self.kind(callee) == NodeType::DotExpr
            && self
                .lookup_methods
                .contains(self.doc.token(self.ch(callee)[1]))
    }

    /// Function literals a call resolves to within the file.
    fn resolve_call(&self, callee: NodeId) -> Vec<NodeId> {
        match self.kind(callee) {
            NodeType::VarExpr => self
                .reaching(callee)
                .into_iter()
                .filter_map(|d| self.def_init(d))
                .filter(|&i| self.kind(i) == NodeType::FuncExpr)
                .collect(),
            NodeType::DotExpr | NodeType::IndexExpr => self
                .member_key(callee)
                .and_then(|k| self.key_writes.get(&k).cloned())
                .unwrap_or_default(),
            _ => Vec::new(),
        }
    }

    /// Process an expression, adding edges inside it, and return the nodes
    /// carrying its value. With `collapse`, a variable use contributes its
    /// reaching definitions directly instead of a use node.
    fn expr(&mut self, e: NodeId, collapse: bool) -> Vec<NodeId> {
        let ch = self.ch(e).to_vec();
        match self.kind(e) {
            NodeType::VarExpr => {
                let defs = self.reaching(e);
                if collapse {
                    defs
                } else {
                    self.link(&defs, e);
                    vec![e]
                }
            }
            NodeType::DotExpr => {
                let h = self.expr(ch[0], true);
                self.link(&h, e);
                vec![e]
            }
            NodeType::IndexExpr => {
                let h = self.expr(ch[0], true);
                self.link(&h, e);
                let mut k = self.expr(ch[1], false);
                let in_callee = self
                    .doc
                    .parent(e)
                    .is_some_and(|p| self.kind(p) == NodeType::CallExpr && self.ch(p)[0] == e);
                if in_callee {
                    self.link(&k, e);
                }
                k.push(e);
                k
            }
            NodeType::CallExpr => self.call(e, &ch),
            NodeType::AssignExpr => {
                let h = self.expr(ch[1], false);
                if self.kind(ch[0]) != NodeType::VarExpr {
                    for &c in self.ch(ch[0]).to_vec().iter() {
                        self.expr(c, true);
                    }
                }
                self.link(&h, ch[0]);
                vec![ch[0]]
            }
            NodeType::BinaryExpr => {
                let l = self.expr(ch[0], false);
                let r = self.expr(ch[2], false);
                if matches!(self.doc.token(e), "+" | "||") {
                    self.link(&l, e);
                    self.link(&r, e);
                    vec![e]
                } else {
                    Vec::new()
                }
            }
            NodeType::UnaryExpr => {
                let h = self.expr(ch[1], false);
                if self.doc.token(e) == "new" {
                    self.link(&h, e);
                    vec![e]
                } else {
                    Vec::new()
                }
            }
            NodeType::FuncExpr => {
                let body = *ch.last().expect("function has a body");
                if self.kind(body) == NodeType::BlockStmt {
                    self.stmt(body);
                } else {
                    self.expr(body, false);
                }
                Vec::new()
            }
            NodeType::ObjectLit => {
                for c in ch {
                    let v = if self.kind(c) == NodeType::PropInit {
                        self.ch(c)[1]
                    } else {
                        c
                    };
                    let h = self.expr(v, false);
                    self.link(&h, e);
                }
                vec![e]
            }
            _ => Vec::new(),
        }
    }

    fn call(&mut self, e: NodeId, ch: &[NodeId]) -> Vec<NodeId> {
        let (callee, args) = (ch[0], &ch[1..]);
        if self.is_sanitizer_callee(callee) {
            self.expr(callee, false);
            for &a in args {
                let h = self.expr(a, false);
                self.link(&h, e);
            }
            self.annotations.push((e, Annotation::Sanitizer));
            return vec![e];
        }
        if self.is_lookup_call(e) {
            self.expr(callee, false);
            let mut k = self.expr(args[0], false);
            for &a in &args[1..] {
                self.expr(a, false);
            }
            k.push(e);
            return k;
        }
        let targets = self.resolve_call(callee);
        if !targets.is_empty() {
            self.expr(callee, false);
            for (i, &a) in args.iter().enumerate() {
                let h = self.expr(a, true);
                for &f in &targets {
                    let params: Vec<NodeId> = self
                        .ch(f)
                        .iter()
                        .copied()
                        .filter(|&p| self.kind(p) == NodeType::Param)
                        .collect();
                    if let Some(&p) = params.get(i) {
                        self.link(&h, p);
                    }
                }
            }
            return vec![e];
        }
        let hc = self.expr(callee, false);
        if self.kind(callee) == NodeType::DotExpr {
            self.link(&hc, e);
        }
        for &a in args {
            let h = self.expr(a, false);
            self.link(&h, e);
        }
        vec![e]
    }

    fn calls(&self) -> Vec<NodeId> {
        self.doc
            .ids()
            .filter(|&n| self.kind(n) == NodeType::CallExpr)
            .collect()
    }

    fn annotate_sources(&mut self) {
        for p in &self.spec.sources {
            match p {
                SourcePattern::NamedParam { name } => {
                    for n in self.doc.ids() {
                        if self.kind(n) == NodeType::Param && self.doc.token(n) == name {
                            self.annotations.push((n, Annotation::Source));
                        }
                    }
                }
                SourcePattern::HandlerParam { registrar, index } => {
                    for c in self.calls() {
                        let ch = self.ch(c).to_vec();
                        if !callee_matches(registrar, self.doc.value(ch[0])) {
                            continue;
                        }
                        for &a in &ch[1..] {
                            if self.kind(a) != NodeType::FuncExpr {
                                continue;
                            }
                            let params: Vec<NodeId> = self
                                .ch(a)
                                .iter()
                                .copied()
                                .filter(|&p| self.kind(p) == NodeType::Param)
                                .collect();
                            if let Some(&p) = params.get(*index) {
                                self.annotations.push((p, Annotation::Source));
                            }
                        }
                    }
                }
                SourcePattern::CallResult { callee } => {
                    for c in self.calls() {
                        if callee_matches(callee, self.doc.value(self.ch(c)[0])) {
                            self.annotations.push((c, Annotation::Source));
                        }
                    }
                }
            }
        }
    }

    /// A keyed lookup with a non-literal key.
    fn is_dynamic_lookup(&self, n: NodeId) -> bool {
        match self.kind(n) {
            NodeType::IndexExpr => self.kind(self.ch(n)[1]) != NodeType::Literal,
            NodeType::CallExpr => {
                self.is_lookup_call(n) && self.kind(self.ch(n)[1]) != NodeType::Literal
            }
            _ => false,
        }
    }

    fn annotate_sinks(&mut self) {
        for p in &self.spec.sinks {
            for c in self.calls() {
                let ch = self.ch(c);
                let callee = ch[0];
                match p {
                    SinkPattern::DynamicCall { .. } => {
                        let dynamic = self.is_dynamic_lookup(callee)
                            || (self.kind(callee) == NodeType::VarExpr
                                && self.reaching(callee).into_iter().any(|d| {
                                    self.def_init(d).is_some_and(|i| self.is_dynamic_lookup(i))
                                }));
                        if dynamic {
                            self.annotations.push((callee, Annotation::Sink));
                        }
                    }
                    SinkPattern::CallArg { callee: pat, index } => {
                        if callee_matches(pat, self.doc.value(callee)) {
                            if let Some(&a) = ch.get(1 + index) {
                                self.annotations.push((a, Annotation::Sink));
                            }
                        }
                    }
                }
            }
        }
    }

    fn guard_matches(&self, n: NodeId, g: &GuardPattern) -> bool {
        let ch = self.ch(n);
        match (self.kind(n), g) {
            (NodeType::CallExpr, GuardPattern::MethodCall { method }) => {
                self.kind(ch[0]) == NodeType::DotExpr && self.doc.token(self.ch(ch[0])[1]) == method
            }
            (NodeType::BinaryExpr, GuardPattern::TypeofCheck { type_name }) => {
                matches!(self.doc.token(n), "===" | "==" | "!==" | "!=")
                    && [(ch[0], ch[2]), (ch[2], ch[0])].iter().any(|&(a, b)| {
                        self.kind(a) == NodeType::UnaryExpr
                            && self.doc.token(a) == "typeof"
                            && self.is_string_literal(b)
                            && unquote(self.doc.token(b)) == type_name
                    })
            }
            (NodeType::BinaryExpr, GuardPattern::InOperator) => self.doc.token(n) == "in",
            _ => false,
        }
    }

    fn annotate_guards(&mut self) {
        for n in self.doc.ids() {
            if self.spec.guards.iter().any(|g| self.guard_matches(n, g)) {
                self.annotations.push((n, Annotation::Guard));
            }
        }
    }

    fn reached(&self) -> BTreeSet<NodeId> {
        let sources: Vec<NodeId> = self
            .annotations
            .iter()
            .filter(|(_, a)| *a == Annotation::Source)
            .map(|&(n, _)| n)
            .collect();
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(x, y) in &self.edges {
            adj.entry(x).or_default().push(y);
        }
        let mut out = BTreeSet::new();
        for s in sources {
            out.extend(closure(s, |n| adj.get(&n).cloned().unwrap_or_default()));
        }
        out
    }

    /// Put each tainted guard on every dataflow edge entering its region.
    fn interpose_guards(&mut self) {
        let mut guards: Vec<NodeId> = self
            .annotations
            .iter()
            .filter(|(_, a)| *a == Annotation::Guard)
            .map(|&(n, _)| n)
            .collect();
        guards.sort();
        guards.dedup();
        for g in guards {
            let reached = self.reached();
            let checked: Vec<NodeId> = self
                .doc
                .descendants(g)
                .into_iter()
                .filter(|n| reached.contains(n))
                .collect();
            if checked.is_empty() {
                continue;
            }
            let region = guard_region(self.doc, g);
            if region.is_empty() {
                continue;
            }
            for n in checked {
                self.link(&[n], g);
            }
            let inside = |doc: &AstDoc, n: NodeId| region.iter().any(|&r| doc.is_within(n, r));
            let crossing: Vec<(NodeId, NodeId)> = self
                .edges
                .iter()
                .copied()
                .filter(|&(x, u)| x != g && inside(self.doc, u) && !inside(self.doc, x))
                .collect();
            for (x, u) in crossing {
                self.edges.remove(&(x, u));
                self.edges.insert((x, g));
                self.edges.insert((g, u));
            }
        }
    }

    fn prune(&mut self) {
        let reached = self.reached();
        self.edges.retain(|(x, _)| reached.contains(x));
    }
}

/// Subtrees whose execution a guard at `g` protects: the then-branch of an
/// enclosing `if`, the right operand of `&&`, or the statements after an
/// early-return `if (!guard) return;`.
pub fn guard_region(doc: &AstDoc, g: NodeId) -> Vec<NodeId> {
    let mut region = Vec::new();
    let mut negated = matches!(doc.token(g), "!==" | "!=") && doc.kind(g) == NodeType::BinaryExpr;
    let mut cur = g;
    while let Some(p) = doc.parent(cur) {
        let pch = doc.children(p);
        match doc.kind(p) {
            NodeType::UnaryExpr if doc.token(p) == "!" => negated = !negated,
            NodeType::BinaryExpr if doc.token(p) == "&&" && !negated => {
                if pch[0] == cur {
                    region.push(pch[2]);
                }
            }
            NodeType::IfStmt if pch[0] == cur => {
                if !negated {
                    region.push(pch[1]);
                } else if is_bare_exit(doc, pch[1]) {
                    if let Some(block) = doc.parent(p) {
                        let at = doc.child_index(block, p).expect("child of parent");
                        region.extend(doc.children(block)[at + 1..].iter().copied());
                    }
                }
                break;
            }
            _ => break,
        }
        cur = p;
    }
    region
}

/// A branch that consists only of a `return`.
pub fn is_bare_exit(doc: &AstDoc, branch: NodeId) -> bool {
    match doc.kind(branch) {
        NodeType::ReturnStmt => true,
        NodeType::BlockStmt => {
            let ch = doc.children(branch);
            ch.len() == 1 && doc.kind(ch[0]) == NodeType::ReturnStmt
        }
        _ => false,
    }
}
