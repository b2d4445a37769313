//! Applying stored strategies to flagged flows and validating the results.

use crate::dataflow::{annotate, slice, AnnotatedAst, FlowTriple, VulnSpec};
use crate::perturb::{apply_edit, EditType};
use crate::strategy::{cost, Interp, Strategy};
use crate::syntax::{emit, emit_with_spans, parse, AstDoc, NodeId};
use crate::witnessing::find_vulnerabilities;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixCandidate {
    /// Position of the strategy in the store, `s<k>`.
    pub strategy_id: String,
    pub cost: u64,
    pub patched_source: String,
    /// Parses, and re-annotation shows fewer vulnerabilities for the
    /// targeted flow and no new ones elsewhere.
    pub validated: bool,
    /// Text changes stay within the edited slot's lines.
    pub confined: bool,
    pub diff: String,
}

/// Vulnerable flows of a document as triples, in (source, sink) order.
pub fn flagged_triples(aast: &Arc<AnnotatedAst>) -> Vec<FlowTriple> {
    find_vulnerabilities(aast)
        .pairs
        .iter()
        .map(|v| (v.source, v.sink))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter_map(|(a, b)| FlowTriple::new(aast.clone(), a, b))
        .collect()
}

type FlowKey = (String, String);

fn flow_key(doc: &AstDoc, source: NodeId, sink: NodeId) -> FlowKey {
    (
        format!("{}:{}", doc.kind(source), doc.value(source)),
        format!("{}:{}", doc.kind(sink), doc.value(sink)),
    )
}

/// Vulnerable flows counted by the text of their endpoints; node ids do
/// not survive an edit, endpoint text does.
fn vuln_counts(aast: &AnnotatedAst) -> BTreeMap<FlowKey, usize> {
    let mut out = BTreeMap::new();
    for v in find_vulnerabilities(aast).pairs {
        *out.entry(flow_key(&aast.doc, v.source, v.sink))
            .or_default() += 1;
    }
    out
}

/// Connected (source, sink) flows counted by endpoint text.
fn flow_counts(aast: &Arc<AnnotatedAst>) -> BTreeMap<FlowKey, usize> {
    let mut out = BTreeMap::new();
    for t in slice(aast) {
        *out.entry(flow_key(&aast.doc, t.source, t.sink))
            .or_default() += 1;
    }
    out
}

/// Whether `patched` parses and repairs the flow without opening another.
/// The flow itself must survive: cutting the source off from the sink
/// (say, by overwriting the call) is not a repair.
pub fn validate(triple: &FlowTriple, patched: &str, spec: &VulnSpec) -> bool {
    let Ok(doc) = parse(patched) else {
        return false;
    };
    let aast = Arc::new(annotate(&doc, spec));
    let target = flow_key(triple.doc(), triple.source, triple.sink);
    let n = |m: &BTreeMap<FlowKey, usize>, k: &FlowKey| m.get(k).copied().unwrap_or(0);
    let (before, after) = (vuln_counts(&triple.aast), vuln_counts(&aast));
    n(&after, &target) < n(&before, &target)
        && after
            .iter()
            .all(|(k, &c)| k == &target || c <= n(&before, k))
        && n(&flow_counts(&aast), &target) >= n(&flow_counts(&triple.aast), &target)
}

/// Lines of the emitted document before and after the text an edit at
/// (`at`, `slot`) may touch.
pub fn edit_region(doc: &AstDoc, edit_type: EditType, at: NodeId, slot: usize) -> (usize, usize) {
    let (text, spans) = emit_with_spans(doc);
    let total = text.lines().count();
    let kids = doc.children(at);
    let (first, last) = match (edit_type, kids.get(slot)) {
        (EditType::Replace, Some(c)) => {
            let s = spans[c.index()];
            (s.start, s.end)
        }
        (EditType::Insert, Some(c)) => {
            let s = spans[c.index()].start;
            (s, s - 1)
        }
        _ => {
            let s = kids
                .last()
                .map_or(spans[at.index()].start, |c| spans[c.index()].end);
            (s + 1, s)
        }
    };
    (first - 1, total - last)
}

/// Whether `new` differs from `old` only between the given line margins.
pub fn confined(old: &str, new: &str, region: (usize, usize)) -> bool {
    let (a, b): (Vec<&str>, Vec<&str>) = (old.lines().collect(), new.lines().collect());
    let (pre, suf) = region;
    b.len() >= pre + suf
        && a.len() >= pre + suf
        && a[..pre] == b[..pre]
        && a[a.len() - suf..] == b[b.len() - suf..]
}

pub fn unified_diff(old: &str, new: &str, name: &str) -> String {
    similar::TextDiff::from_lines(old, new)
        .unified_diff()
        .context_radius(2)
        .header(&format!("a/{name}"), &format!("b/{name}"))
        .to_string()
}

/// Try `strategies` (ascending cost) on one flagged flow; keep up to `k`
/// distinct validated candidates. Unvalidated distinct outputs are kept too,
/// so callers can report them, but do not count toward `k`.
pub fn fix_triple(
    triple: &FlowTriple,
    strategies: &[Strategy],
    spec: &VulnSpec,
    k: usize,
    name: &str,
) -> Vec<FixCandidate> {
    let mut order: Vec<usize> = (0..strategies.len()).collect();
    order.sort_by_key(|&i| (cost(&strategies[i]), i));
    let doc = triple.doc();
    let old = emit(doc);
    let interp = Interp::new(triple);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut good = 0;
    for i in order {
        if good == k {
            break;
        }
        let s = &strategies[i];
        let Ok((at, slot, prog)) = interp.resolve(s) else {
            continue;
        };
        let Ok(new_doc) = apply_edit(doc, s.edit_type, at, slot, prog) else {
            continue;
        };
        let patched = emit(&new_doc);
        if patched == old || !seen.insert(patched.clone()) {
            continue;
        }
        let validated = validate(triple, &patched, spec);
        good += usize::from(validated);
        out.push(FixCandidate {
            strategy_id: format!("s{i}"),
            cost: cost(s),
            confined: confined(&old, &patched, edit_region(doc, s.edit_type, at, slot)),
            diff: unified_diff(&old, &patched, name),
            patched_source: patched,
            validated,
        });
    }
    out
}
