//! Learning repair strategies from paired examples by merging similar edits.

pub mod merge;
pub mod traversal;

use crate::perturb::{EditType, PairedExample};
use crate::strategy::{cost, lift, Interp, Strategy};
use crate::syntax::{NodeId, NodeType, Tree};
use std::collections::{BTreeMap, BTreeSet};
use traversal::{compress, edit_loc_traversals, max_level_bfs_all, preorder, ConcreteTraversal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearnConfig {
    /// Depth bound of the reference search.
    pub max_depth: usize,
    pub max_loc_paths: usize,
    pub max_ref_paths: usize,
    /// Candidates kept per merged sub-template and per merged pair.
    pub max_east: usize,
    /// Pairs merged per group.
    pub max_pairs: usize,
    pub max_edges: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            max_depth: 6,
            max_loc_paths: 8,
            max_ref_paths: 4,
            max_east: 16,
            max_pairs: 64,
            max_edges: 64,
        }
    }
}

/// A paired example with the traversals its edit can be generalized from.
pub struct EditMeta<'a> {
    pub ex: &'a PairedExample,
    pub traversals: Vec<ConcreteTraversal>,
    /// For each semantic location of a traversal, reference paths to every
    /// node of the edit program, indexed by preorder position.
    pub refs: BTreeMap<NodeId, Vec<Vec<ConcreteTraversal>>>,
}

pub fn preprocess<'a>(ex: &'a PairedExample, cfg: &LearnConfig) -> EditMeta<'a> {
    let t = &ex.edit.triple;
    let traversals = edit_loc_traversals(t, ex.edit.editloc, cfg.max_loc_paths, cfg.max_edges);
    let prog = preorder(&ex.edit.editprog);
    let sem_locs: BTreeSet<NodeId> = traversals.iter().map(|tr| tr.sem_loc).collect();
    let refs = sem_locs
        .into_iter()
        .map(|sl| {
            let found = max_level_bfs_all(t, sl, &prog, cfg.max_depth, cfg.max_ref_paths);
            let compressed = found
                .iter()
                .map(|paths| paths.iter().map(|p| compress(t, p)).collect())
                .collect();
            (sl, compressed)
        })
        .collect();
    EditMeta {
        ex,
        traversals,
        refs,
    }
}

/// Preorder (depth, type) entries of a tree.
fn skeleton(t: &Tree) -> BTreeMap<(usize, NodeType), usize> {
    fn go(t: &Tree, d: usize, out: &mut BTreeMap<(usize, NodeType), usize>) {
        *out.entry((d, t.kind)).or_default() += 1;
        for c in &t.children {
            go(c, d + 1, out);
        }
    }
    let mut out = BTreeMap::new();
    go(t, 0, &mut out);
    out
}

/// Shared skeleton entries of two edit programs.
pub fn similarity(a: &Tree, b: &Tree) -> usize {
    let (sa, sb) = (skeleton(a), skeleton(b));
    sa.iter()
        .map(|(k, n)| (*n).min(sb.get(k).copied().unwrap_or(0)))
        .sum()
}

/// Group key: edit type and the root type of the edit program.
pub fn group_key(ex: &PairedExample) -> (EditType, NodeType) {
    (ex.edit.edit_type, ex.edit.editprog.kind)
}

/// Pairs `(i, j)`, `i < j`, of examples in the same group, most similar
/// first, at most `max_pairs` per group; groups in key order.
pub fn rank_similar(pairs: &[PairedExample], max_pairs: usize) -> Vec<(usize, usize)> {
    let mut groups: BTreeMap<(EditType, NodeType), Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        groups.entry(group_key(p)).or_default().push(i);
    }
    let mut out = Vec::new();
    for members in groups.values() {
        let mut ranked = Vec::new();
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                let s = similarity(&pairs[i].edit.editprog, &pairs[j].edit.editprog);
                ranked.push((std::cmp::Reverse(s), i, j));
            }
        }
        ranked.sort();
        out.extend(ranked.into_iter().take(max_pairs).map(|(_, i, j)| (i, j)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Learned {
    pub strategy: Strategy,
    pub cost: u64,
    /// Indices of the examples this strategy was merged from.
    pub parents: BTreeSet<usize>,
}

/// True when `s` applied to the example's unsafe flow yields its safe program.
pub fn is_self_consistent(s: &Strategy, ex: &PairedExample) -> bool {
    crate::strategy::apply_strategy(s, &ex.edit.triple).is_ok_and(|d| d == ex.safe)
}

/// True when `s` resolves to exactly the example's recorded edit.
pub fn performs_edit(s: &Strategy, ex: &PairedExample) -> bool {
    let e = &ex.edit;
    s.edit_type == e.edit_type
        && Interp::new(&e.triple)
            .resolve(s)
            .is_ok_and(|(at, slot, prog)| at == e.editloc && slot == e.index && prog == e.editprog)
}

/// Learn strategies from paired examples. Similar pairs in each group are
/// merged; any example not covered by a merged strategy contributes its
/// lifted edit. Results are sorted by cost, then text.
pub fn learn(pairs: &[PairedExample], cfg: &LearnConfig) -> Vec<Learned> {
    let metas: Vec<EditMeta> = pairs.iter().map(|p| preprocess(p, cfg)).collect();
    let ranked = rank_similar(pairs, cfg.max_pairs);
    let results = parallel_map(&ranked, |&(i, j)| {
        merge::merge_edits(&metas[i], &metas[j], cfg)
    });
    let mut found: BTreeMap<String, Learned> = BTreeMap::new();
    let mut add = |s: Strategy, parents: &[usize]| {
        found
            .entry(s.to_string())
            .or_insert_with(|| Learned {
                cost: cost(&s),
                strategy: s,
                parents: BTreeSet::new(),
            })
            .parents
            .extend(parents);
    };
    let mut covered = BTreeSet::new();
    for (&(i, j), strategies) in ranked.iter().zip(results) {
        if !strategies.is_empty() {
            covered.extend([i, j]);
        }
        for s in strategies {
            add(s, &[i, j]);
        }
    }
    for (i, p) in pairs.iter().enumerate() {
        if !covered.contains(&i) {
            let s = lift(&p.edit);
            if performs_edit(&s, p) {
                add(s, &[i]);
            }
        }
    }
    let mut out: Vec<Learned> = found.into_values().collect();
    out.sort_by_key(|l| (l.cost, l.strategy.to_string()));
    out
}

/// Order-preserving map over a slice on all available cores.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let n = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len().max(1));
    let chunk = items.len().div_ceil(n).max(1);
    std::thread::scope(|sc| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| sc.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}
