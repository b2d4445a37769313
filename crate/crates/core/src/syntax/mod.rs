//! Syntactic layer: the node arena, owned trees used as edit fragments,
//! the subset parser and the canonical printer.

mod emit;
mod lexer;
mod parser;

use std::fmt;
use std::str::FromStr;

pub use emit::{emit, emit_tree, emit_with_spans, LineSpan};
pub use parser::parse;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("node {child} is not a child of {parent}")]
    NotAChild { parent: NodeId, child: NodeId },
    #[error("index {index} out of range for node {parent} with {arity} children")]
    IndexOutOfRange {
        parent: NodeId,
        index: usize,
        arity: usize,
    },
    #[error("node {0} is not a statement list")]
    NotAStatementList(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

pub type Result<T, E = SyntaxError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

macro_rules! node_types {
    ($($name:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum NodeType { $($name),* }

        impl NodeType {
            pub const ALL: &'static [NodeType] = &[$(NodeType::$name),*];

            pub fn as_str(self) -> &'static str {
                match self { $(NodeType::$name => stringify!($name)),* }
            }
        }

        impl FromStr for NodeType {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $(stringify!($name) => Ok(NodeType::$name),)*
                    _ => Err(format!("unknown node type `{s}`")),
                }
            }
        }
    };
}

node_types!(
    Program, BlockStmt, IfStmt, Expr, CallExpr, IndexExpr, DotExpr, VarExpr, VarDecl, DeclExpr,
    Declarator, AssignExpr, BinaryExpr, BinaryOp, UnaryExpr, ReturnStmt, FuncExpr, Param, Label,
    Literal, ObjectLit, PropInit,
);

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl NodeType {
    /// Allowed child counts as `(min, max)`; `None` means unbounded.
    pub fn arity(self) -> (usize, Option<usize>) {
        use NodeType::*;
        match self {
            Program | BlockStmt | ObjectLit => (0, None),
            IfStmt => (2, Some(3)),
            Expr => (1, Some(1)),
            CallExpr | DeclExpr | FuncExpr => (1, None),
            IndexExpr | DotExpr | AssignExpr | UnaryExpr | PropInit => (2, Some(2)),
            BinaryExpr => (3, Some(3)),
            Declarator => (1, Some(2)),
            ReturnStmt => (0, Some(1)),
            VarExpr | VarDecl | BinaryOp | Param | Label | Literal => (0, Some(0)),
        }
    }

    pub fn arity_ok(self, n: usize) -> bool {
        let (lo, hi) = self.arity();
        n >= lo && hi.is_none_or(|hi| n <= hi)
    }

    pub fn is_statement_list(self) -> bool {
        matches!(self, NodeType::Program | NodeType::BlockStmt)
    }

    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeType::BlockStmt
                | NodeType::IfStmt
                | NodeType::Expr
                | NodeType::DeclExpr
                | NodeType::ReturnStmt
        )
    }

    /// Leaves whose token is the whole code snippet.
    pub fn is_leaf(self) -> bool {
        self.arity() == (0, Some(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeType {
    SynParent,
    SynChild,
    SemParent,
    SemChild,
}

impl EdgeType {
    pub fn is_child(self) -> bool {
        matches!(self, EdgeType::SynChild | EdgeType::SemChild)
    }

    pub fn is_syntactic(self) -> bool {
        matches!(self, EdgeType::SynChild | EdgeType::SynParent)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::SynParent => "SynParent",
            EdgeType::SynChild => "SynChild",
            EdgeType::SemParent => "SemParent",
            EdgeType::SemChild => "SemChild",
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "SynParent" | "Parent" => Ok(EdgeType::SynParent),
            "SynChild" | "Child" => Ok(EdgeType::SynChild),
            "SemParent" => Ok(EdgeType::SemParent),
            "SemChild" => Ok(EdgeType::SemChild),
            _ => Err(format!("unknown edge type `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeType,
    pub index: i64,
}

/// 1-based line/column range in some source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}-{}:{}",
            self.start_line, self.start_col, self.end_line, self.end_col
        )
    }
}

/// An owned syntax tree. Used for parse results and as the fragment type
/// for edits. Equality ignores spans, so `==` is tree isomorphism.
#[derive(Debug, Clone, Eq)]
pub struct Tree {
    pub kind: NodeType,
    /// Head token: identifier, literal text, operator, keyword, or empty.
    pub token: String,
    pub children: Vec<Tree>,
    pub span: Option<Span>,
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.token == other.token && self.children == other.children
    }
}

impl std::hash::Hash for Tree {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.token.hash(state);
        self.children.hash(state);
    }
}

impl Tree {
    pub fn new(kind: NodeType, token: impl Into<String>, children: Vec<Tree>) -> Self {
        Tree {
            kind,
            token: token.into(),
            children,
            span: None,
        }
    }

    pub fn leaf(kind: NodeType, token: impl Into<String>) -> Self {
        Tree::new(kind, token, Vec::new())
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    pub fn strip_spans(mut self) -> Self {
        self.span = None;
        self.children = self.children.into_iter().map(Tree::strip_spans).collect();
        self
    }

    pub fn check_arity(&self) -> Result<()> {
        if !self.kind.arity_ok(self.children.len()) {
            return Err(SyntaxError::MalformedTree(format!(
                "{} cannot have {} children",
                self.kind,
                self.children.len()
            )));
        }
        self.children.iter().try_for_each(Tree::check_arity)
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeType,
    pub token: String,
    /// Canonical code snippet for the subtree rooted here.
    pub value: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    /// Position in the text this document was parsed from, if any.
    pub span: Option<Span>,
}

/// The syntactic skeleton of an annotated program: a node arena in preorder,
/// root at id 0. Immutable; edits return new documents with ids reassigned.
#[derive(Debug, Clone)]
pub struct AstDoc {
    nodes: Vec<Node>,
}

impl PartialEq for AstDoc {
    fn eq(&self, other: &Self) -> bool {
        self.to_tree() == other.to_tree()
    }
}

impl AstDoc {
    pub fn from_tree(tree: Tree) -> Result<Self> {
        tree.check_arity()?;
        let mut nodes = Vec::with_capacity(tree.size());
        build(&tree, None, &mut nodes);
        Ok(AstDoc { nodes })
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Result<&Node> {
        self.nodes
            .get(id.index())
            .ok_or(SyntaxError::UnknownNode(id))
    }

    pub fn kind(&self, id: NodeId) -> NodeType {
        self.node(id).kind
    }

    pub fn value(&self, id: NodeId) -> &str {
        &self.node(id).value
    }

    pub fn token(&self, id: NodeId) -> &str {
        &self.node(id).token
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.node(id).children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    pub fn child(&self, id: NodeId, index: usize) -> Option<NodeId> {
        self.children(id).get(index).copied()
    }

    pub fn child_index(&self, parent: NodeId, child: NodeId) -> Result<usize> {
        self.children(parent)
            .iter()
            .position(|&c| c == child)
            .ok_or(SyntaxError::NotAChild { parent, child })
    }

    /// Index of the child of `at` that is `node` or a syntactic ancestor of it.
    pub fn child_containing(&self, at: NodeId, node: NodeId) -> Option<usize> {
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            if p == at {
                return self.child_index(at, cur).ok();
            }
            cur = p;
        }
        None
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |&p| self.parent(p))
    }

    pub fn is_ancestor(&self, ancestor: NodeId, node: NodeId) -> bool {
        self.ancestors(node).any(|a| a == ancestor)
    }

    pub fn is_within(&self, node: NodeId, root: NodeId) -> bool {
        node == root || self.is_ancestor(root, node)
    }

    /// Child-index path from the root to `id`.
    pub fn path_from_root(&self, id: NodeId) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            path.push(self.child_index(p, cur).expect("parent link is consistent"));
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn node_at_path(&self, path: &[usize]) -> Option<NodeId> {
        path.iter()
            .try_fold(self.root(), |cur, &i| self.child(cur, i))
    }

    /// Syntactic edges of the five-tuple view: one SynChild edge carrying the
    /// child ordinal plus its inverse SynParent edge with index -1.
    pub fn syntactic_edges(&self) -> Vec<Edge> {
        let mut edges = Vec::with_capacity(self.nodes.len() * 2);
        for id in self.ids() {
            for (i, &c) in self.children(id).iter().enumerate() {
                edges.push(Edge {
                    src: id,
                    dst: c,
                    kind: EdgeType::SynChild,
                    index: i as i64,
                });
                edges.push(Edge {
                    src: c,
                    dst: id,
                    kind: EdgeType::SynParent,
                    index: -1,
                });
            }
        }
        edges
    }

    pub fn subtree(&self, id: NodeId) -> Tree {
        let n = self.node(id);
        Tree {
            kind: n.kind,
            token: n.token.clone(),
            children: n.children.iter().map(|&c| self.subtree(c)).collect(),
            span: n.span,
        }
    }

    pub fn to_tree(&self) -> Tree {
        self.subtree(self.root())
    }

    fn rebuild(
        &self,
        parent: NodeId,
        f: impl FnOnce(&mut Vec<Tree>) -> Result<()>,
    ) -> Result<AstDoc> {
        self.get(parent)?;
        let path = self.path_from_root(parent);
        let mut tree = self.to_tree().strip_spans();
        let mut cur = &mut tree;
        for i in path {
            cur = &mut cur.children[i];
        }
        f(&mut cur.children)?;
        AstDoc::from_tree(tree)
    }

    pub fn replace_child(&self, parent: NodeId, index: usize, subtree: Tree) -> Result<AstDoc> {
        let arity = self.get(parent)?.children.len();
        if index >= arity {
            return Err(SyntaxError::IndexOutOfRange {
                parent,
                index,
                arity,
            });
        }
        self.rebuild(parent, |children| {
            children[index] = subtree.strip_spans();
            Ok(())
        })
    }

    pub fn insert_child(&self, parent: NodeId, index: usize, subtree: Tree) -> Result<AstDoc> {
        let node = self.get(parent)?;
        if !node.kind.is_statement_list() {
            return Err(SyntaxError::NotAStatementList(parent));
        }
        let arity = node.children.len();
        if index > arity {
            return Err(SyntaxError::IndexOutOfRange {
                parent,
                index,
                arity,
            });
        }
        self.rebuild(parent, |children| {
            children.insert(index, subtree.strip_spans());
            Ok(())
        })
    }

    pub fn delete_child(&self, parent: NodeId, index: usize) -> Result<AstDoc> {
        let arity = self.get(parent)?.children.len();
        if index >= arity {
            return Err(SyntaxError::IndexOutOfRange {
                parent,
                index,
                arity,
            });
        }
        self.rebuild(parent, |children| {
            children.remove(index);
            Ok(())
        })
    }

    /// Nodes of the subtree at `id` in preorder.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev());
        }
        out
    }
}

fn build(tree: &Tree, parent: Option<NodeId>, nodes: &mut Vec<Node>) -> NodeId {
    let id = NodeId(nodes.len() as u32);
    nodes.push(Node {
        kind: tree.kind,
        token: tree.token.clone(),
        value: emit_tree(tree),
        children: Vec::new(),
        parent,
        span: tree.span,
    });
    let children: Vec<NodeId> = tree
        .children
        .iter()
        .map(|c| build(c, Some(id), nodes))
        .collect();
    nodes[id.index()].children = children;
    id
}
