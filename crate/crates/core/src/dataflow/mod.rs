//! Taint propagation over a parsed document: semantic (dataflow) edges,
//! source/sink/sanitizer/guard annotations, and per-flow slices.

mod analysis;
pub mod spec;

pub use analysis::{guard_region, is_bare_exit};

pub use spec::{
    callee_matches, load_spec, parse_spec, GuardPattern, SinkPattern, SourcePattern, SpecError,
    VulnSpec,
};

use crate::syntax::{AstDoc, Edge, EdgeType, NodeId};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Annotation {
    Source,
    Sink,
    Sanitizer,
    Guard,
    Witness,
}

impl Annotation {
    pub fn as_str(self) -> &'static str {
        match self {
            Annotation::Source => "source",
            Annotation::Sink => "sink",
            Annotation::Sanitizer => "sanitizer",
            Annotation::Guard => "guard",
            Annotation::Witness => "witness",
        }
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A document with dataflow edges and annotations. SemChild edges are stored
/// once; SemParent edges are their inverses.
#[derive(Debug, Clone)]
pub struct AnnotatedAst {
    pub doc: AstDoc,
    pub spec: VulnSpec,
    children: BTreeMap<NodeId, BTreeSet<NodeId>>,
    parents: BTreeMap<NodeId, BTreeSet<NodeId>>,
    annotations: BTreeMap<NodeId, BTreeSet<Annotation>>,
}

impl AnnotatedAst {
    /// Assemble from explicit parts (used by analysis and by tests that build
    /// synthetic graphs).
    pub fn from_parts(
        doc: AstDoc,
        spec: VulnSpec,
        sem_edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        annotations: impl IntoIterator<Item = (NodeId, Annotation)>,
    ) -> Self {
        let mut a = AnnotatedAst {
            doc,
            spec,
            children: BTreeMap::new(),
            parents: BTreeMap::new(),
            annotations: BTreeMap::new(),
        };
        for (x, y) in sem_edges {
            a.children.entry(x).or_default().insert(y);
            a.parents.entry(y).or_default().insert(x);
        }
        for (n, tag) in annotations {
            a.annotations.entry(n).or_default().insert(tag);
        }
        a
    }

    pub fn sem_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.children
            .iter()
            .flat_map(|(&x, ys)| ys.iter().map(move |&y| (x, y)))
            .collect()
    }

    pub fn sem_children(&self, n: NodeId) -> Vec<NodeId> {
        self.children
            .get(&n)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn sem_parents(&self, n: NodeId) -> Vec<NodeId> {
        self.parents
            .get(&n)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn annotations(&self, n: NodeId) -> Vec<Annotation> {
        self.annotations
            .get(&n)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn has(&self, n: NodeId, tag: Annotation) -> bool {
        self.annotations.get(&n).is_some_and(|s| s.contains(&tag))
    }

    /// Nodes carrying `tag`, ascending.
    pub fn nodes_with(&self, tag: Annotation) -> Vec<NodeId> {
        self.annotations
            .iter()
            .filter(|(_, s)| s.contains(&tag))
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn is_witness_kind(&self, n: NodeId) -> bool {
        self.has(n, Annotation::Sanitizer) || self.has(n, Annotation::Guard)
    }

    /// The full five-tuple edge set: syntactic edges followed by semantic
    /// edges whose index is the ordinal among same-kind neighbours.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = self.doc.syntactic_edges();
        out.extend(semantic_edges(&self.children, &self.parents));
        out
    }

    /// Nodes reachable from `from` over SemChild edges (including `from`).
    pub fn reachable(&self, from: NodeId) -> BTreeSet<NodeId> {
        closure(from, |n| self.sem_children(n))
    }
}

fn semantic_edges(
    children: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    parents: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> Vec<Edge> {
    let mut out = Vec::new();
    for (&x, ys) in children {
        for (i, &y) in ys.iter().enumerate() {
            out.push(Edge {
                src: x,
                dst: y,
                kind: EdgeType::SemChild,
                index: i as i64,
            });
        }
    }
    for (&y, xs) in parents {
        for (i, &x) in xs.iter().enumerate() {
            out.push(Edge {
                src: y,
                dst: x,
                kind: EdgeType::SemParent,
                index: i as i64,
            });
        }
    }
    out
}

fn closure(from: NodeId, next: impl Fn(NodeId) -> Vec<NodeId>) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        for m in next(n) {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen
}

/// Add dataflow edges and annotations for `spec`.
pub fn annotate(doc: &AstDoc, spec: &VulnSpec) -> AnnotatedAst {
    analysis::run(doc, spec)
}

/// One (source, witness?, sink) view of an annotated document. Semantic
/// queries on a triple see only the edges lying on some source-to-sink path.
#[derive(Debug, Clone)]
pub struct FlowTriple {
    pub source: NodeId,
    pub sink: NodeId,
    pub witness: Option<NodeId>,
    pub aast: Arc<AnnotatedAst>,
    children: BTreeMap<NodeId, BTreeSet<NodeId>>,
    parents: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl FlowTriple {
    /// Build the slice for (source, sink); `None` when no path connects them.
    pub fn new(aast: Arc<AnnotatedAst>, source: NodeId, sink: NodeId) -> Option<Self> {
        let fwd = aast.reachable(source);
        if !fwd.contains(&sink) {
            return None;
        }
        let bwd = closure(sink, |n| aast.sem_parents(n));
        let mut children: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut parents: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for (x, y) in aast.sem_edges() {
            if fwd.contains(&x) && bwd.contains(&y) {
                children.entry(x).or_default().insert(y);
                parents.entry(y).or_default().insert(x);
            }
        }
        let mut t = FlowTriple {
            source,
            sink,
            witness: None,
            aast,
            children,
            parents,
        };
        t.witness = t.find_cut_witness();
        Some(t)
    }

    pub fn doc(&self) -> &AstDoc {
        &self.aast.doc
    }

    pub fn sem_children(&self, n: NodeId) -> Vec<NodeId> {
        self.children
            .get(&n)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn sem_parents(&self, n: NodeId) -> Vec<NodeId> {
        self.parents
            .get(&n)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn slice_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.children
            .iter()
            .flat_map(|(&x, ys)| ys.iter().map(move |&y| (x, y)))
            .collect()
    }

    pub fn slice_nodes(&self) -> BTreeSet<NodeId> {
        let mut s = BTreeSet::from([self.source, self.sink]);
        for (x, y) in self.slice_edges() {
            s.insert(x);
            s.insert(y);
        }
        s
    }

    /// Edges of the slice in five-tuple form (syntactic edges of the whole
    /// document plus the slice's semantic edges).
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = self.aast.doc.syntactic_edges();
        out.extend(semantic_edges(&self.children, &self.parents));
        out
    }

    /// First sanitizer/guard (by id) whose removal disconnects sink from source.
    fn find_cut_witness(&self) -> Option<NodeId> {
        self.slice_nodes().into_iter().find(|&w| {
            w != self.source
                && self.aast.is_witness_kind(w)
                && !closure(self.source, |n| {
                    if n == w {
                        Vec::new()
                    } else {
                        self.sem_children(n)
                    }
                })
                .into_iter()
                .any(|n| n == self.sink && n != w)
        })
    }
}

/// One triple per connected (source, sink) pair, ordered by source then sink.
pub fn slice(aast: &Arc<AnnotatedAst>) -> Vec<FlowTriple> {
    let sinks = aast.nodes_with(Annotation::Sink);
    let mut out = Vec::new();
    for s in aast.nodes_with(Annotation::Source) {
        for &t in &sinks {
            if let Some(tr) = FlowTriple::new(Arc::clone(aast), s, t) {
                out.push(tr);
            }
        }
    }
    out
}
