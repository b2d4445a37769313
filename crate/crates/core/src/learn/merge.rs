//! Pairwise anti-unification of edits into strategies.

use super::traversal::{preorder, referenceable, CEdge};
use super::{EditMeta, LearnConfig};
use crate::strategy::{east_cost, Clause, EAst, Index, Interp, Loc, Step, Strategy};
use crate::syntax::{AstDoc, EdgeType, NodeId, Tree};
use std::collections::{BTreeMap, BTreeSet};

/// Shared semantic prefix of a merged location and where it lands on each side.
#[derive(Debug, Clone)]
pub struct MergeCtx {
    pub ts: Loc,
    pub sem_locs: [NodeId; 2],
}

/// Index candidates for two concrete indices taken at `nodes`. Equal
/// indices give a constant; equal offsets from the child containing each
/// side's semantic location give an offset anchored at the shared prefix.
pub fn merge_index(
    idx: [i64; 2],
    nodes: [NodeId; 2],
    docs: [&AstDoc; 2],
    ctx: Option<&MergeCtx>,
) -> Vec<Index> {
    let mut out = Vec::new();
    if idx[0] == idx[1] {
        out.push(Index::Constant(idx[0]));
    }
    if let Some(ctx) = ctx {
        let offs: Vec<Option<i64>> = (0..2)
            .map(|k| {
                docs[k]
                    .child_containing(nodes[k], ctx.sem_locs[k])
                    .map(|c| idx[k] - c as i64)
            })
            .collect();
        if let (Some(a), Some(b)) = (offs[0], offs[1]) {
            if a == b {
                out.push(Index::Offset(Box::new(ctx.ts.clone()), a));
            }
        }
    }
    out
}

fn intersect(a: &[Clause], b: &[Clause]) -> Vec<Clause> {
    a.iter().filter(|c| b.contains(c)).cloned().collect()
}

pub fn merge_edge(e: [&CEdge; 2], docs: [&AstDoc; 2], ctx: Option<&MergeCtx>) -> Vec<Step> {
    if e[0].kind() != e[1].kind() {
        return Vec::new();
    }
    let kind = e[0].kind();
    match (e[0], e[1]) {
        (CEdge::Kleene { clauses: c1, .. }, CEdge::Kleene { clauses: c2, .. }) => {
            let clauses = intersect(c1, c2);
            if clauses.is_empty() {
                return Vec::new();
            }
            vec![Step::Kleene { kind, clauses }]
        }
        (
            CEdge::Edge {
                index: i1, src: s1, ..
            },
            CEdge::Edge {
                index: i2, src: s2, ..
            },
        ) => {
            if kind == EdgeType::SynParent {
                return vec![Step::syn_parent()];
            }
            let ctx = ctx.filter(|_| kind == EdgeType::SynChild);
            merge_index([*i1, *i2], [*s1, *s2], docs, ctx)
                .into_iter()
                .map(|index| Step::Edge { kind, index })
                .collect()
        }
        _ => Vec::new(),
    }
}

/// Position-wise merge of two equally long edge lists; the Cartesian
/// product of per-position options, at most `cap` results.
pub fn merge_traversal(
    t1: &[CEdge],
    t2: &[CEdge],
    docs: [&AstDoc; 2],
    ctx: Option<&MergeCtx>,
    cap: usize,
) -> Vec<Vec<Step>> {
    if t1.len() != t2.len() {
        return Vec::new();
    }
    let mut acc: Vec<Vec<Step>> = vec![Vec::new()];
    for (a, b) in t1.iter().zip(t2) {
        let opts = merge_edge([a, b], docs, ctx);
        if opts.is_empty() {
            return Vec::new();
        }
        let mut next = Vec::new();
        'outer: for prefix in &acc {
            for o in &opts {
                if next.len() == cap {
                    break 'outer;
                }
                let mut p = prefix.clone();
                p.push(o.clone());
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// One side of a merge: its preprocessed edit and an interpreter over its flow.
pub struct Side<'m, 'a> {
    pub meta: &'m EditMeta<'a>,
    pub interp: Interp<'a>,
    pub prog: Vec<&'a Tree>,
}

impl<'m, 'a> Side<'m, 'a> {
    pub fn new(meta: &'m EditMeta<'a>) -> Self {
        Side {
            meta,
            interp: Interp::new(&meta.ex.edit.triple),
            prog: preorder(&meta.ex.edit.editprog),
        }
    }

    fn doc(&self) -> &'a AstDoc {
        self.meta.ex.edit.triple.doc()
    }
}

fn sorted_capped(mut v: Vec<EAst>, cap: usize) -> Vec<EAst> {
    let mut keyed: Vec<(u64, EAst)> = v.drain(..).map(|e| (east_cost(&e), e)).collect();
    keyed.sort();
    keyed.dedup();
    keyed.into_iter().take(cap).map(|(_, e)| e).collect()
}

/// Candidate templates producing `x` (preorder position `px`) on side a and
/// `y` (`py`) on side b: constant copies, constant heads over merged
/// children, and merged references from both semantic locations.
pub fn merge_prog(
    sides: [&Side; 2],
    pos: [usize; 2],
    ctx: &MergeCtx,
    cfg: &LearnConfig,
) -> Vec<EAst> {
    let (x, y) = (sides[0].prog[pos[0]], sides[1].prog[pos[1]]);
    let mut cands = Vec::new();
    if x == y {
        cands.push(EAst::constant(x));
    }
    if x.kind == y.kind && x.token == y.token && x.children.len() == y.children.len() {
        let mut combos: Vec<(u64, Vec<EAst>)> = vec![(1, Vec::new())];
        let (mut ca, mut cb) = (pos[0] + 1, pos[1] + 1);
        for (cx, cy) in x.children.iter().zip(&y.children) {
            let opts = merge_prog(sides, [ca, cb], ctx, cfg);
            ca += cx.size();
            cb += cy.size();
            let mut next: Vec<(u64, Vec<EAst>)> = Vec::new();
            for (c, combo) in &combos {
                for o in &opts {
                    let mut v = combo.clone();
                    v.push(o.clone());
                    next.push((c + east_cost(o), v));
                }
            }
            next.sort();
            next.truncate(cfg.max_east);
            combos = next;
        }
        cands.extend(combos.into_iter().map(|(_, children)| EAst::Const {
            kind: x.kind,
            token: x.token.clone(),
            children,
        }));
    }
    if referenceable(x) && referenceable(y) {
        let refs = |k: usize| {
            sides[k]
                .meta
                .refs
                .get(&ctx.sem_locs[k])
                .map(|r| r[pos[k]].as_slice())
                .unwrap_or_default()
        };
        let docs = [sides[0].doc(), sides[1].doc()];
        for ra in refs(0) {
            for rb in refs(1) {
                for steps in merge_traversal(&ra.edges, &rb.edges, docs, Some(ctx), cfg.max_east) {
                    let e = EAst::Ref(ctx.ts.clone().then(steps));
                    let ok = |k: usize, want: &Tree| {
                        sides[k].interp.materialize(&e).is_ok_and(|t| t == *want)
                    };
                    if ok(0, x) && ok(1, y) {
                        cands.push(e);
                    }
                }
            }
        }
    }
    sorted_capped(cands, cfg.max_east)
}

/// True when `s` run on the side's flow performs exactly the side's edit.
pub fn performs_edit(s: &Strategy, side: &Side) -> bool {
    let e = &side.meta.ex.edit;
    s.edit_type == e.edit_type
        && side
            .interp
            .resolve(s)
            .is_ok_and(|(at, slot, prog)| at == e.editloc && slot == e.index && prog == e.editprog)
}

/// All strategies generalizing both edits, cheapest first, at most
/// `cfg.max_east`. Every returned strategy reproduces both edits.
pub fn merge_edits(a: &EditMeta, b: &EditMeta, cfg: &LearnConfig) -> Vec<Strategy> {
    let (ea, eb) = (&a.ex.edit, &b.ex.edit);
    if ea.edit_type != eb.edit_type {
        return Vec::new();
    }
    let sa = Side::new(a);
    let sb = Side::new(b);
    let sides = [&sa, &sb];
    let docs = [sa.doc(), sb.doc()];
    let mut progs: BTreeMap<Loc, Vec<EAst>> = BTreeMap::new();
    let mut out = BTreeSet::new();
    for ta in &a.traversals {
        for tb in &b.traversals {
            let sl = ta.sem_len();
            if sl != tb.sem_len() || ta.edges.len() != tb.edges.len() {
                continue;
            }
            for prefix in
                merge_traversal(&ta.edges[..sl], &tb.edges[..sl], docs, None, cfg.max_east)
            {
                let ts = Loc::Source.then(prefix);
                let sem_locs = [ta.sem_loc, tb.sem_loc];
                if sa.interp.eval_loc(&ts) != Ok(sem_locs[0])
                    || sb.interp.eval_loc(&ts) != Ok(sem_locs[1])
                {
                    continue;
                }
                let ctx = MergeCtx { ts, sem_locs };
                let suffixes = merge_traversal(
                    &ta.edges[sl..],
                    &tb.edges[sl..],
                    docs,
                    Some(&ctx),
                    cfg.max_east,
                );
                for suffix in suffixes {
                    let loc = ctx.ts.clone().then(suffix);
                    if sa.interp.eval_loc(&loc) != Ok(ea.editloc)
                        || sb.interp.eval_loc(&loc) != Ok(eb.editloc)
                    {
                        continue;
                    }
                    let indices: Vec<Index> = merge_index(
                        [ea.index as i64, eb.index as i64],
                        [ea.editloc, eb.editloc],
                        docs,
                        Some(&ctx),
                    )
                    .into_iter()
                    .filter(|ix| {
                        sa.interp.eval_index(ix, ea.editloc) == Ok(ea.index as i64)
                            && sb.interp.eval_index(ix, eb.editloc) == Ok(eb.index as i64)
                    })
                    .collect();
                    if indices.is_empty() {
                        continue;
                    }
                    let easts = progs
                        .entry(ctx.ts.clone())
                        .or_insert_with(|| merge_prog(sides, [0, 0], &ctx, cfg));
                    for index in &indices {
                        for east in easts.iter() {
                            let s = Strategy {
                                edit_type: ea.edit_type,
                                loc: loc.clone(),
                                index: index.clone(),
                                out: east.clone(),
                            };
                            if performs_edit(&s, &sa) && performs_edit(&s, &sb) {
                                out.insert((crate::strategy::cost(&s), s.to_string(), s));
                            }
                        }
                    }
                }
            }
        }
    }
    out.into_iter()
        .take(cfg.max_east)
        .map(|(_, _, s)| s)
        .collect()
}
