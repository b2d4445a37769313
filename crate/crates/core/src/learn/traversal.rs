//! Concrete traversals over one flow: edit-location paths, reference paths
//! and their compression into Kleene edges.

use crate::dataflow::FlowTriple;
use crate::strategy::{neighbours, Clause, Interp, Step};
use crate::syntax::{emit_tree, AstDoc, EdgeType, NodeId, NodeType, Tree};
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CEdge {
    Edge {
        kind: EdgeType,
        index: i64,
        src: NodeId,
        dst: NodeId,
    },
    Kleene {
        kind: EdgeType,
        clauses: Vec<Clause>,
        src: NodeId,
        dst: NodeId,
    },
}

impl CEdge {
    pub fn kind(&self) -> EdgeType {
        match self {
            CEdge::Edge { kind, .. } | CEdge::Kleene { kind, .. } => *kind,
        }
    }

    pub fn src(&self) -> NodeId {
        match self {
            CEdge::Edge { src, .. } | CEdge::Kleene { src, .. } => *src,
        }
    }

    pub fn dst(&self) -> NodeId {
        match self {
            CEdge::Edge { dst, .. } | CEdge::Kleene { dst, .. } => *dst,
        }
    }

    /// The equivalent step with constant indices.
    pub fn step(&self) -> Step {
        match self {
            CEdge::Edge { kind, index, .. } => Step::edge(*kind, *index),
            CEdge::Kleene { kind, clauses, .. } => Step::Kleene {
                kind: *kind,
                clauses: clauses.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteTraversal {
    pub start: NodeId,
    pub edges: Vec<CEdge>,
    /// Last node of the leading semantic edges.
    pub sem_loc: NodeId,
}

impl ConcreteTraversal {
    pub fn new(start: NodeId, edges: Vec<CEdge>) -> Self {
        let sem_loc = edges
            .iter()
            .take_while(|e| !e.kind().is_syntactic())
            .last()
            .map_or(start, CEdge::dst);
        ConcreteTraversal {
            start,
            edges,
            sem_loc,
        }
    }

    pub fn end(&self) -> NodeId {
        self.edges.last().map_or(self.start, CEdge::dst)
    }

    /// Number of leading semantic edges.
    pub fn sem_len(&self) -> usize {
        self.edges
            .iter()
            .take_while(|e| !e.kind().is_syntactic())
            .count()
    }

    pub fn steps(&self) -> Vec<Step> {
        self.edges.iter().map(CEdge::step).collect()
    }
}

/// One concrete edge from `src` to `dst` over `kind`, with its ordinal.
pub fn concrete_edge(t: &FlowTriple, src: NodeId, dst: NodeId, kind: EdgeType) -> CEdge {
    let index = if kind == EdgeType::SynParent {
        -1
    } else {
        neighbours(t, src, kind)
            .iter()
            .position(|&n| n == dst)
            .expect("edge exists") as i64
    };
    CEdge::Edge {
        kind,
        index,
        src,
        dst,
    }
}

/// Syntactic edges from `from` to `to` through their lowest common ancestor.
pub fn tree_path(t: &FlowTriple, from: NodeId, to: NodeId) -> Vec<CEdge> {
    let doc = t.doc();
    let mut up = vec![from];
    up.extend(doc.ancestors(from));
    let mut down = vec![to];
    while !up.contains(down.last().unwrap()) {
        down.push(doc.parent(*down.last().unwrap()).expect("shared root"));
    }
    let lca = *down.last().unwrap();
    let mut edges = Vec::new();
    for w in up.windows(2).take_while(|w| w[0] != lca) {
        edges.push(concrete_edge(t, w[0], w[1], EdgeType::SynParent));
    }
    for w in down.windows(2).rev() {
        edges.push(concrete_edge(t, w[1], w[0], EdgeType::SynChild));
    }
    edges
}

/// First-found predecessor and edge kind of each reached node.
type Preds = BTreeMap<NodeId, (NodeId, EdgeType)>;

/// BFS from `start` over the given edge kinds (in order), recording the
/// first-found predecessor edge of each node. Returns nodes in BFS order.
fn bfs(
    t: &FlowTriple,
    start: NodeId,
    kinds: &[EdgeType],
    max_depth: usize,
) -> (Vec<NodeId>, Preds) {
    let mut order = vec![start];
    let mut pred = Preds::new();
    let mut depth = BTreeMap::from([(start, 0usize)]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        let d = depth[&n];
        if d == max_depth {
            continue;
        }
        for &k in kinds {
            for m in neighbours(t, n, k) {
                if let std::collections::btree_map::Entry::Vacant(e) = depth.entry(m) {
                    e.insert(d + 1);
                    pred.insert(m, (n, k));
                    order.push(m);
                    queue.push_back(m);
                }
            }
        }
    }
    (order, pred)
}

fn path_to(t: &FlowTriple, start: NodeId, end: NodeId, pred: &Preds) -> Vec<CEdge> {
    let mut edges = Vec::new();
    let mut cur = end;
    while cur != start {
        let (p, k) = pred[&cur];
        edges.push(concrete_edge(t, p, cur, k));
        cur = p;
    }
    edges.reverse();
    edges
}

/// Uncompressed source-to-editloc traversals of shape
/// `SemChild* (SynParent|SynChild)*`: one per semantic join node, using
/// the BFS-shortest semantic prefix and the tree path to `editloc`.
/// Ordered by syntactic length, then total length, then join BFS order.
pub fn raw_edit_loc_traversals(
    t: &FlowTriple,
    editloc: NodeId,
    max_paths: usize,
    max_edges: usize,
) -> Vec<ConcreteTraversal> {
    let (order, pred) = bfs(t, t.source, &[EdgeType::SemChild], usize::MAX);
    let mut cands: Vec<(usize, usize, usize, Vec<CEdge>)> = order
        .iter()
        .enumerate()
        .map(|(rank, &join)| {
            let mut edges = path_to(t, t.source, join, &pred);
            let syn = tree_path(t, join, editloc);
            let syn_len = syn.len();
            edges.extend(syn);
            (syn_len, edges.len(), rank, edges)
        })
        .filter(|c| c.1 <= max_edges)
        .collect();
    cands.sort_by_key(|c| (c.0, c.1, c.2));
    cands
        .into_iter()
        .take(max_paths)
        .map(|c| ConcreteTraversal::new(t.source, c.3))
        .collect()
}

/// TypeIs(type(n)) and, below the root, NeighbourTypeIs(SynParent, type(parent)).
pub fn get_clauses(doc: &AstDoc, n: NodeId) -> Vec<Clause> {
    let mut c = vec![Clause::TypeIs(doc.kind(n))];
    if let Some(p) = doc.parent(n) {
        c.push(Clause::NeighbourTypeIs(
            Box::new(Step::syn_parent()),
            doc.kind(p),
        ));
    }
    c
}

/// Replace maximal runs (length >= 2) of same-kind edges, other than
/// SynChild, by Kleene edges whose clauses describe the run's last node.
/// A run stays concrete when the Kleene search would stop elsewhere.
pub fn compress(t: &FlowTriple, tr: &ConcreteTraversal) -> ConcreteTraversal {
    let interp = Interp::new(t);
    let mut out = Vec::new();
    let mut i = 0;
    while i < tr.edges.len() {
        let kind = tr.edges[i].kind();
        let mut j = i + 1;
        while j < tr.edges.len() && tr.edges[j].kind() == kind {
            j += 1;
        }
        let run = &tr.edges[i..j];
        let (src, dst) = (run[0].src(), run[run.len() - 1].dst());
        let all_concrete = run.iter().all(|e| matches!(e, CEdge::Edge { .. }));
        if run.len() >= 2 && kind != EdgeType::SynChild && all_concrete {
            let k = CEdge::Kleene {
                kind,
                clauses: get_clauses(t.doc(), dst),
                src,
                dst,
            };
            if interp.eval_step(&k.step(), src) == Ok(dst) {
                out.push(k);
                i = j;
                continue;
            }
        }
        out.extend_from_slice(run);
        i = j;
    }
    ConcreteTraversal {
        start: tr.start,
        edges: out,
        sem_loc: tr.sem_loc,
    }
}

/// Compressed edit-location traversals.
pub fn edit_loc_traversals(
    t: &FlowTriple,
    editloc: NodeId,
    max_paths: usize,
    max_edges: usize,
) -> Vec<ConcreteTraversal> {
    raw_edit_loc_traversals(t, editloc, max_paths, max_edges)
        .iter()
        .map(|tr| compress(t, tr))
        .collect()
}

/// Order of edge kinds explored when looking for reference targets.
pub const REF_KINDS: [EdgeType; 4] = [
    EdgeType::SemParent,
    EdgeType::SemChild,
    EdgeType::SynParent,
    EdgeType::SynChild,
];

/// Paths (at most `max_paths`, shortest first) from `start` to nodes of the
/// same kind and value as `target`, over all edge kinds within `max_depth`.
pub fn max_level_bfs(
    t: &FlowTriple,
    start: NodeId,
    target: &Tree,
    max_depth: usize,
    max_paths: usize,
) -> Vec<ConcreteTraversal> {
    max_level_bfs_all(t, start, &[target], max_depth, max_paths).remove(0)
}

/// `max_level_bfs` for several targets sharing one search.
pub fn max_level_bfs_all(
    t: &FlowTriple,
    start: NodeId,
    targets: &[&Tree],
    max_depth: usize,
    max_paths: usize,
) -> Vec<Vec<ConcreteTraversal>> {
    let doc = t.doc();
    let (order, pred) = bfs(t, start, &REF_KINDS, max_depth);
    targets
        .iter()
        .map(|target| {
            if !referenceable(target) {
                return Vec::new();
            }
            let value = emit_tree(target);
            order
                .iter()
                .filter(|&&n| doc.kind(n) == target.kind && doc.value(n) == value)
                .take(max_paths)
                .map(|&n| ConcreteTraversal::new(start, path_to(t, start, n, &pred)))
                .collect()
        })
        .collect()
}

/// Nodes of a tree in preorder.
pub fn preorder(t: &Tree) -> Vec<&Tree> {
    let mut out = vec![t];
    for c in &t.children {
        out.extend(preorder(c));
    }
    out
}

/// True if `t` can be the target of a reference (not a bare label or operator).
pub fn referenceable(t: &Tree) -> bool {
    !matches!(t.kind, NodeType::Label | NodeType::BinaryOp)
}
