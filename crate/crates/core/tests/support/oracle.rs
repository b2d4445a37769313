//! Brute-force all-paths oracle for the Vulnerability / Witness judgements
//! over random annotated graphs.

use flowmend::dataflow::{AnnotatedAst, Annotation, SinkPattern, SourcePattern, VulnSpec};
use flowmend::syntax::{AstDoc, NodeId, NodeType, Tree};
use flowmend::witnessing::{find_vulnerabilities, find_witnesses, path_is_valid, san_guard_free};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub tags: Vec<(usize, Annotation)>,
}

pub fn graph() -> impl Strategy<Value = Graph> {
    (1usize..=12).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::bool::weighted(0.18), n * n),
            prop::collection::vec(0u8..20, n),
        )
            .prop_map(move |(adj, tags)| {
                let edges = (0..n * n)
                    .filter(|&k| adj[k])
                    .map(|k| (k / n, k % n))
                    .collect();
                let mut t = Vec::new();
                for (i, &x) in tags.iter().enumerate() {
                    // Independent-ish bits so nodes can carry several tags.
                    if x % 4 == 0 {
                        t.push((i, Annotation::Source));
                    }
                    if x % 5 == 1 {
                        t.push((i, Annotation::Sink));
                    }
                    if x % 7 == 2 {
                        t.push((i, Annotation::Sanitizer));
                    }
                    if x % 6 == 3 {
                        t.push((i, Annotation::Guard));
                    }
                }
                Graph { n, edges, tags: t }
            })
    })
}

fn dummy_spec() -> VulnSpec {
    VulnSpec {
        name: "random".into(),
        sources: vec![SourcePattern::NamedParam { name: "x".into() }],
        sinks: vec![SinkPattern::DynamicCall {
            lookup_methods: vec![],
        }],
        sanitizers: vec![],
        guards: vec![],
    }
}

pub fn to_aast(g: &Graph) -> AnnotatedAst {
    let stmts = (1..g.n)
        .map(|_| Tree::leaf(NodeType::ReturnStmt, "return"))
        .collect();
    let doc = AstDoc::from_tree(Tree::new(NodeType::Program, "", stmts)).unwrap();
    let id = |i: usize| NodeId(i as u32);
    AnnotatedAst::from_parts(
        doc,
        dummy_spec(),
        g.edges.iter().map(|&(a, b)| (id(a), id(b))),
        g.tags.iter().map(|&(i, t)| (id(i), t)),
    )
}

/// Every simple path from `from`, reported as its end node, restricted to
/// edges accepted by `ok`. The empty path counts.
fn simple_path_ends(g: &Graph, from: usize, ok: &dyn Fn(usize, usize) -> bool) -> BTreeSet<usize> {
    fn go(
        g: &Graph,
        cur: usize,
        on_path: &mut Vec<bool>,
        ok: &dyn Fn(usize, usize) -> bool,
        out: &mut BTreeSet<usize>,
    ) {
        out.insert(cur);
        for &(a, b) in &g.edges {
            if a == cur && !on_path[b] && ok(a, b) {
                on_path[b] = true;
                go(g, b, on_path, ok, out);
                on_path[b] = false;
            }
        }
    }
    let mut on_path = vec![false; g.n];
    on_path[from] = true;
    let mut out = BTreeSet::new();
    go(g, from, &mut on_path, ok, &mut out);
    out
}

fn tagged(g: &Graph, i: usize, t: Annotation) -> bool {
    g.tags.contains(&(i, t))
}

pub fn oracle_pairs(g: &Graph) -> BTreeSet<(usize, usize)> {
    let blocked = |i| tagged(g, i, Annotation::Sanitizer) || tagged(g, i, Annotation::Guard);
    let mut out = BTreeSet::new();
    for s in (0..g.n).filter(|&i| tagged(g, i, Annotation::Source)) {
        for t in simple_path_ends(g, s, &|a, b| !blocked(a) && !blocked(b)) {
            if tagged(g, t, Annotation::Sink) {
                out.insert((s, t));
            }
        }
    }
    out
}

pub fn oracle_triples(g: &Graph) -> BTreeSet<(usize, usize, usize)> {
    let blocked = |i| tagged(g, i, Annotation::Sanitizer) || tagged(g, i, Annotation::Guard);
    let mut out = BTreeSet::new();
    for s in (0..g.n).filter(|&i| tagged(g, i, Annotation::Source)) {
        for w in simple_path_ends(g, s, &|_, _| true) {
            if !blocked(w) {
                continue;
            }
            for t in simple_path_ends(g, w, &|_, _| true) {
                if tagged(g, t, Annotation::Sink) {
                    out.insert((s, w, t));
                }
            }
        }
    }
    out
}

/// Compare the judgements with the oracle on one graph.
pub fn check(g: &Graph) -> Result<(), String> {
    let a = to_aast(g);
    let v = find_vulnerabilities(&a);
    let w = find_witnesses(&a);
    let got: BTreeSet<(usize, usize)> = v
        .pairs
        .iter()
        .map(|p| (p.source.index(), p.sink.index()))
        .collect();
    if got.len() != v.pairs.len() {
        return Err("duplicate vulnerability pairs".into());
    }
    if got != oracle_pairs(g) {
        return Err(format!(
            "pairs {got:?} != oracle {:?} on {g:?}",
            oracle_pairs(g)
        ));
    }
    for p in &v.pairs {
        if !path_is_valid(&a, &p.path)
            || p.path.first() != Some(&p.source)
            || p.path.last() != Some(&p.sink)
            || !p.path.windows(2).all(|e| san_guard_free(&a, e[0], e[1]))
        {
            return Err(format!("bad evidence {:?} on {g:?}", p.path));
        }
    }
    let got: BTreeSet<(usize, usize, usize)> = w
        .triples
        .iter()
        .map(|t| (t.source.index(), t.witness.index(), t.sink.index()))
        .collect();
    if got != oracle_triples(g) {
        return Err(format!(
            "triples {got:?} != oracle {:?} on {g:?}",
            oracle_triples(g)
        ));
    }
    for t in &w.triples {
        if !path_is_valid(&a, &t.to_witness) || !path_is_valid(&a, &t.to_sink) {
            return Err(format!("bad witness evidence on {g:?}"));
        }
    }
    Ok(())
}

/// Run `cases` deterministic random graphs through `check`.
pub fn run(cases: u32) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&graph(), |g| check(&g).map_err(TestCaseError::fail))
        .map_err(|e| e.to_string())
}
