//! Repair strategies: edit type, a location traversal, a child-index
//! expression and an output template with references into the program.

mod text;

pub use text::{parse_store, parse_strategy, write_store, StoreRecord, StrategyParseError};

use crate::dataflow::FlowTriple;
use crate::perturb::{apply_edit, Edit, EditType};
use crate::syntax::{AstDoc, EdgeType, NodeId, NodeType, Tree};
use std::collections::{BTreeSet, VecDeque};

/// A location: the flow's source, or a traversal applied to another location.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Loc {
    Source,
    /// Steps run first to last starting from the base location.
    Apply(Box<Loc>, Vec<Step>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Edge {
        kind: EdgeType,
        index: Index,
    },
    Kleene {
        kind: EdgeType,
        clauses: Vec<Clause>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Clause {
    TypeIs(NodeType),
    NeighbourTypeIs(Box<Step>, NodeType),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Index {
    Constant(i64),
    /// Slot of the child (of the node being indexed) containing the anchor, plus z.
    Offset(Box<Loc>, i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EAst {
    Const {
        kind: NodeType,
        token: String,
        children: Vec<EAst>,
    },
    Ref(Loc),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    pub edit_type: EditType,
    pub loc: Loc,
    pub index: Index,
    pub out: EAst,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("traversal stuck at node {0}")]
    TraversalStuck(NodeId),
    #[error("index {index} out of range at node {at}")]
    IndexOutOfRange { at: NodeId, index: i64 },
    #[error("node {at} is not an ancestor of {anchor}")]
    NotAnAncestor { at: NodeId, anchor: NodeId },
    #[error("strategy inapplicable: {0}")]
    Inapplicable(String),
}

impl Loc {
    pub fn then(self, steps: Vec<Step>) -> Loc {
        if steps.is_empty() {
            return self;
        }
        Loc::Apply(Box::new(self), steps)
    }

    /// Base location and full step list from the source.
    pub fn flatten(&self) -> Vec<&Step> {
        match self {
            Loc::Source => Vec::new(),
            Loc::Apply(base, steps) => {
                let mut v = base.flatten();
                v.extend(steps.iter());
                v
            }
        }
    }
}

impl Step {
    pub fn edge(kind: EdgeType, index: i64) -> Step {
        Step::Edge {
            kind,
            index: Index::Constant(index),
        }
    }

    pub fn syn_parent() -> Step {
        Step::edge(EdgeType::SynParent, -1)
    }

    pub fn kind(&self) -> EdgeType {
        match self {
            Step::Edge { kind, .. } | Step::Kleene { kind, .. } => *kind,
        }
    }
}

/// Neighbours of `n` over `kind` edges, in edge-index order.
pub fn neighbours(t: &FlowTriple, n: NodeId, kind: EdgeType) -> Vec<NodeId> {
    let doc = t.doc();
    match kind {
        EdgeType::SynChild => doc.children(n).to_vec(),
        EdgeType::SynParent => doc.parent(n).into_iter().collect(),
        EdgeType::SemChild => t.sem_children(n),
        EdgeType::SemParent => t.sem_parents(n),
    }
}

/// Evaluates strategy parts against one flow. Location results are
/// memoized, so repeated references to a shared location are cheap.
pub struct Interp<'a> {
    pub triple: &'a FlowTriple,
    memo: std::cell::RefCell<std::collections::HashMap<Loc, Result<NodeId, StrategyError>>>,
}

impl<'a> Interp<'a> {
    pub fn new(triple: &'a FlowTriple) -> Self {
        Interp {
            triple,
            memo: Default::default(),
        }
    }

    fn doc(&self) -> &AstDoc {
        self.triple.doc()
    }

    pub fn eval_loc(&self, loc: &Loc) -> Result<NodeId, StrategyError> {
        if let Some(r) = self.memo.borrow().get(loc) {
            return r.clone();
        }
        let r = match loc {
            Loc::Source => Ok(self.triple.source),
            Loc::Apply(base, steps) => {
                let mut cur = self.eval_loc(base);
                for s in steps {
                    cur = cur.and_then(|n| self.eval_step(s, n));
                }
                cur
            }
        };
        self.memo.borrow_mut().insert(loc.clone(), r.clone());
        r
    }

    pub fn eval_step(&self, step: &Step, n: NodeId) -> Result<NodeId, StrategyError> {
        match step {
            Step::Edge { kind, index } => {
                let ns = neighbours(self.triple, n, *kind);
                if *kind == EdgeType::SynParent {
                    return ns.first().copied().ok_or(StrategyError::TraversalStuck(n));
                }
                let i = self.eval_index(index, n)?;
                usize::try_from(i)
                    .ok()
                    .and_then(|i| ns.get(i).copied())
                    .ok_or(StrategyError::IndexOutOfRange { at: n, index: i })
            }
            Step::Kleene { kind, clauses } => {
                let mut seen = BTreeSet::from([n]);
                let mut queue = VecDeque::from([n]);
                while let Some(m) = queue.pop_front() {
                    if self.satisfies(m, clauses) {
                        return Ok(m);
                    }
                    for x in neighbours(self.triple, m, *kind) {
                        if seen.insert(x) {
                            queue.push_back(x);
                        }
                    }
                }
                Err(StrategyError::TraversalStuck(n))
            }
        }
    }

    pub fn satisfies(&self, n: NodeId, clauses: &[Clause]) -> bool {
        clauses.iter().all(|c| match c {
            Clause::TypeIs(t) => self.doc().kind(n) == *t,
            Clause::NeighbourTypeIs(step, t) => self
                .eval_step(step, n)
                .is_ok_and(|m| self.doc().kind(m) == *t),
        })
    }

    pub fn eval_index(&self, ix: &Index, at: NodeId) -> Result<i64, StrategyError> {
        match ix {
            Index::Constant(z) => Ok(*z),
            Index::Offset(anchor, z) => {
                let a = self.eval_loc(anchor)?;
                let i = self
                    .doc()
                    .child_containing(at, a)
                    .ok_or(StrategyError::NotAnAncestor { at, anchor: a })?;
                Ok(i as i64 + z)
            }
        }
    }

    pub fn materialize(&self, out: &EAst) -> Result<Tree, StrategyError> {
        match out {
            EAst::Ref(loc) => Ok(self.doc().subtree(self.eval_loc(loc)?).strip_spans()),
            EAst::Const {
                kind,
                token,
                children,
            } => {
                let children = children
                    .iter()
                    .map(|c| self.materialize(c))
                    .collect::<Result<Vec<_>, _>>()?;
                if !kind.arity_ok(children.len()) {
                    return Err(StrategyError::Inapplicable(format!(
                        "{kind} cannot have {} children",
                        children.len()
                    )));
                }
                Ok(Tree::new(*kind, token.clone(), children))
            }
        }
    }

    /// Edit location, slot and materialized program.
    pub fn resolve(&self, s: &Strategy) -> Result<(NodeId, usize, Tree), StrategyError> {
        let at = self.eval_loc(&s.loc)?;
        let i = self.eval_index(&s.index, at)?;
        let slot =
            usize::try_from(i).map_err(|_| StrategyError::IndexOutOfRange { at, index: i })?;
        Ok((at, slot, self.materialize(&s.out)?))
    }
}

pub fn eval_loc(loc: &Loc, triple: &FlowTriple) -> Result<NodeId, StrategyError> {
    Interp::new(triple).eval_loc(loc)
}

pub fn eval_index(ix: &Index, at: NodeId, triple: &FlowTriple) -> Result<i64, StrategyError> {
    Interp::new(triple).eval_index(ix, at)
}

pub fn materialize(out: &EAst, triple: &FlowTriple) -> Result<Tree, StrategyError> {
    Interp::new(triple).materialize(out)
}

/// Run a strategy on a flow. The result is not re-analysed.
pub fn apply_strategy(s: &Strategy, triple: &FlowTriple) -> Result<AstDoc, StrategyError> {
    let (at, slot, prog) = Interp::new(triple).resolve(s)?;
    apply_edit(triple.doc(), s.edit_type, at, slot, prog)
        .map_err(|e| StrategyError::Inapplicable(e.to_string()))
}

pub fn step_cost(s: &Step) -> u64 {
    match s {
        Step::Edge { index, .. } => 2 + index_cost(index),
        Step::Kleene { clauses, .. } => {
            1 + clauses
                .iter()
                .map(|c| match c {
                    Clause::TypeIs(_) => 0,
                    Clause::NeighbourTypeIs(step, _) => step_cost(step),
                })
                .sum::<u64>()
        }
    }
}

pub fn loc_cost(l: &Loc) -> u64 {
    l.flatten().into_iter().map(step_cost).sum()
}

pub fn index_cost(i: &Index) -> u64 {
    match i {
        Index::Constant(z) => z.unsigned_abs(),
        Index::Offset(a, z) => loc_cost(a) + z.unsigned_abs(),
    }
}

pub fn east_cost(o: &EAst) -> u64 {
    match o {
        EAst::Ref(l) => loc_cost(l),
        EAst::Const { children, .. } => 1 + children.iter().map(east_cost).sum::<u64>(),
    }
}

/// Lower is better: 1 per Kleene step, 2 per edge step, |z| per constant or
/// offset, 1 per constant node. Shared locations count at every use.
pub fn cost(s: &Strategy) -> u64 {
    loc_cost(&s.loc) + index_cost(&s.index) + east_cost(&s.out)
}

impl EAst {
    pub fn constant(t: &Tree) -> EAst {
        EAst::Const {
            kind: t.kind,
            token: t.token.clone(),
            children: t.children.iter().map(EAst::constant).collect(),
        }
    }

    pub fn refs(&self) -> Vec<&Loc> {
        match self {
            EAst::Ref(l) => vec![l],
            EAst::Const { children, .. } => children.iter().flat_map(EAst::refs).collect(),
        }
    }
}

/// Constant syntactic steps from `from` to `to`: up to the lowest common
/// ancestor, then down.
pub fn syntactic_path(doc: &AstDoc, from: NodeId, to: NodeId) -> Vec<Step> {
    let up: Vec<NodeId> = std::iter::once(from).chain(doc.ancestors(from)).collect();
    let lca = std::iter::once(to)
        .chain(doc.ancestors(to))
        .find(|a| up.contains(a))
        .expect("shared root");
    let climbs = up.iter().position(|&a| a == lca).unwrap();
    let mut steps: Vec<Step> = (0..climbs).map(|_| Step::syn_parent()).collect();
    let (pl, pt) = (doc.path_from_root(lca), doc.path_from_root(to));
    steps.extend(
        pt[pl.len()..]
            .iter()
            .map(|&i| Step::edge(EdgeType::SynChild, i as i64)),
    );
    steps
}

/// The strategy that replays `edit` verbatim: constant traversals to the
/// edit location and a constant output tree.
pub fn lift(edit: &Edit) -> Strategy {
    let doc = edit.triple.doc();
    Strategy {
        edit_type: edit.edit_type,
        loc: Loc::Source.then(syntactic_path(doc, edit.triple.source, edit.editloc)),
        index: Index::Constant(edit.index as i64),
        out: EAst::constant(&edit.editprog),
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&text::serialize(self))
    }
}

#[cfg(test)]
pub(crate) mod tests;
