//! Vulnerability and Witness judgements over an annotated document.

use crate::dataflow::{AnnotatedAst, Annotation};
use crate::syntax::NodeId;
use std::collections::{BTreeMap, VecDeque};

/// A (source, sink) pair joined by a sanitizer/guard-free path. `path` lists
/// the nodes from source to sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vulnerability {
    pub source: NodeId,
    pub sink: NodeId,
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VulnerabilityReport {
    pub pairs: Vec<Vulnerability>,
}

impl VulnerabilityReport {
    pub fn contains(&self, source: NodeId, sink: NodeId) -> bool {
        self.pairs
            .iter()
            .any(|p| p.source == source && p.sink == sink)
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// A (source, witness, sink) triple with both path halves as evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub source: NodeId,
    pub witness: NodeId,
    pub sink: NodeId,
    pub to_witness: Vec<NodeId>,
    pub to_sink: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WitnessReport {
    pub triples: Vec<Witness>,
}

/// BFS from `from` over edges accepted by `step`; returns each reached node
/// with its first-found path.
fn bfs_paths(
    aast: &AnnotatedAst,
    from: NodeId,
    step: impl Fn(NodeId, NodeId) -> bool,
) -> BTreeMap<NodeId, Vec<NodeId>> {
    let mut prev: BTreeMap<NodeId, Option<NodeId>> = BTreeMap::from([(from, None)]);
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        for m in aast.sem_children(n) {
            if step(n, m) && !prev.contains_key(&m) {
                prev.insert(m, Some(n));
                queue.push_back(m);
            }
        }
    }
    prev.keys()
        .map(|&n| {
            let mut path = vec![n];
            let mut cur = n;
            while let Some(Some(p)) = prev.get(&cur) {
                path.push(*p);
                cur = *p;
            }
            path.reverse();
            (n, path)
        })
        .collect()
}

/// An edge is free when neither endpoint is a sanitizer or guard.
pub fn san_guard_free(aast: &AnnotatedAst, a: NodeId, b: NodeId) -> bool {
    !aast.is_witness_kind(a) && !aast.is_witness_kind(b)
}

pub fn find_vulnerabilities(aast: &AnnotatedAst) -> VulnerabilityReport {
    let mut pairs = Vec::new();
    for s in aast.nodes_with(Annotation::Source) {
        let reached = bfs_paths(aast, s, |a, b| san_guard_free(aast, a, b));
        for (t, path) in reached {
            if aast.has(t, Annotation::Sink) {
                pairs.push(Vulnerability {
                    source: s,
                    sink: t,
                    path,
                });
            }
        }
    }
    VulnerabilityReport { pairs }
}

pub fn find_witnesses(aast: &AnnotatedAst) -> WitnessReport {
    let mut triples = Vec::new();
    for s in aast.nodes_with(Annotation::Source) {
        for (w, to_witness) in bfs_paths(aast, s, |_, _| true) {
            if !aast.is_witness_kind(w) {
                continue;
            }
            for (t, to_sink) in bfs_paths(aast, w, |_, _| true) {
                if aast.has(t, Annotation::Sink) {
                    triples.push(Witness {
                        source: s,
                        witness: w,
                        sink: t,
                        to_witness: to_witness.clone(),
                        to_sink,
                    });
                }
            }
        }
    }
    WitnessReport { triples }
}

/// Replay a node path against the semantic edge set.
pub fn path_is_valid(aast: &AnnotatedAst, path: &[NodeId]) -> bool {
    !path.is_empty()
        && path
            .windows(2)
            .all(|w| aast.sem_children(w[0]).contains(&w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::{annotate, tests::bundled};
    use crate::syntax::parse;

    fn scan(src: &str, spec: &str) -> (AnnotatedAst, VulnerabilityReport, WitnessReport) {
        let a = annotate(&parse(src).unwrap(), &bundled(spec));
        let v = find_vulnerabilities(&a);
        let w = find_witnesses(&a);
        (a, v, w)
    }

    #[test]
    fn typeof_guard_is_reported_as_witness() {
        let src = "var actions = new Map();\napp.get('/run', (req, res) => {\n  var action = actions.get(req.action);\n  if (action && typeof action === 'function') {\n    action(req.inp);\n  }\n});\n";
        let (a, v, w) = scan(src, "udc");
        assert!(v.is_empty());
        assert_eq!(w.triples.len(), 1);
        assert_eq!(
            a.doc.value(w.triples[0].witness),
            "typeof action === 'function'"
        );
        assert!(path_is_valid(&a, &w.triples[0].to_witness));
        assert!(path_is_valid(&a, &w.triples[0].to_sink));
    }

    #[test]
    fn unguarded_call_is_vulnerable_with_valid_evidence() {
        let src = "var actions = new Map();\napp.get('/run', (req, res) => {\n  var action = actions.get(req.action);\n  action(req.inp);\n});\n";
        let (a, v, w) = scan(src, "udc");
        assert_eq!(v.pairs.len(), 1);
        assert!(w.triples.is_empty());
        let p = &v.pairs[0].path;
        assert!(path_is_valid(&a, p));
        assert!(p.windows(2).all(|e| san_guard_free(&a, e[0], e[1])));
        assert_eq!(p.first(), Some(&v.pairs[0].source));
        assert_eq!(p.last(), Some(&v.pairs[0].sink));
    }

    #[test]
    fn escape_is_reported_as_witness() {
        let src = "const h = function (req, res) {\n  var userId = req.id;\n  userId = escape(userId);\n  res.send(userId);\n};\n";
        let (a, v, w) = scan(src, "xss");
        assert!(v.is_empty());
        assert_eq!(w.triples.len(), 1);
        assert_eq!(a.doc.value(w.triples[0].witness), "escape(userId)");
    }

    #[test]
    fn disconnected_source_and_sink_give_nothing() {
        let src = "const h = function (req, res) {\n  var m = 'hi';\n  res.send(m);\n};\n";
        let (_, v, w) = scan(src, "xss");
        assert!(v.is_empty());
        assert!(w.triples.is_empty());
    }

    #[test]
    fn partially_guarded_flow_is_both_vulnerable_and_witnessed() {
        let src =
            "const h = function (req, res) {\n  var m = req.q;\n  res.send(escape(m) + m);\n};\n";
        let (_, v, w) = scan(src, "xss");
        assert_eq!(v.pairs.len(), 1);
        assert_eq!(w.triples.len(), 1);
    }
}
