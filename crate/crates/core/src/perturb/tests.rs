use super::store::{fragment_text, parse_fragment, read_pair, write_pair};
use super::*;
use crate::dataflow::{slice, tests::bundled};
use crate::syntax::{emit, parse};

pub(crate) fn fixture(rel: &str) -> String {
    let path = format!("{}/../../fixtures/{rel}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn aast(src: &str, spec: &str) -> Arc<AnnotatedAst> {
    Arc::new(annotate(&parse(src).unwrap(), &bundled(spec)))
}

fn only_pair(src: &str, spec: &str) -> PairedExample {
    let m = make_pairs(&[aast(src, spec)]);
    assert!(m.skipped.is_empty(), "{:?}", m.skipped);
    assert_eq!(m.pairs.len(), 1);
    m.pairs.into_iter().next().unwrap()
}

#[test]
fn guarded_call_becomes_worked_unsafe_program() {
    let p = only_pair(&fixture("udc/fig4b.js"), "udc");
    assert_eq!(p.edit.edit_type, EditType::Replace);
    assert_eq!(p.edit.index, 13);
    let doc = p.edit.triple.doc();
    assert_eq!(doc.kind(p.edit.editloc), NodeType::BlockStmt);
    assert_eq!(
        emit_tree(&p.edit.editprog),
        "if (handlers.hasOwnProperty(data.id)) {\n  foo(data);\n}"
    );
    assert_eq!(
        emit(doc),
        emit(&parse(&fixture("unsafe/fig4a.js")).unwrap())
    );
    assert_eq!(p.safe, parse(&fixture("udc/fig4b.js")).unwrap());
}

#[test]
fn conjunction_guard_splices_other_operand() {
    let p = only_pair(&fixture("udc/fig1c.js"), "udc");
    assert_eq!(p.edit.edit_type, EditType::Replace);
    assert_eq!(
        *p.edit.triple.doc(),
        parse(&fixture("unsafe/fig1d.js")).unwrap()
    );
    assert_eq!(doc_kind(&p), NodeType::Expr);
}

fn doc_kind(p: &PairedExample) -> NodeType {
    p.edit.triple.doc().kind(p.edit.editloc)
}

#[test]
fn early_return_guard_becomes_insert() {
    let p = only_pair(&fixture("udc/fig1b.js"), "udc");
    assert_eq!(p.edit.edit_type, EditType::Insert);
    assert_eq!(
        *p.edit.triple.doc(),
        parse(&fixture("unsafe/fig1d.js")).unwrap()
    );
    assert_eq!(
        emit_tree(&p.edit.editprog),
        "if (typeof action !== 'function') {\n  return;\n}"
    );
}

#[test]
fn return_values_are_stripped_from_captured_guard() {
    let src = fixture("udc/fig1b.js").replace("return;", "return res.status(400);");
    let p = only_pair(&src, "udc");
    assert!(emit_tree(&p.edit.editprog).contains("  return;\n"));
    assert!(emit(&p.safe).contains("  return;\n"));
    assert_eq!(p.edit.apply().unwrap(), p.safe);
}

#[test]
fn three_guard_shapes_give_three_pairs() {
    let corpus: Vec<_> = ["udc/fig1a.js", "udc/fig1b.js", "udc/fig1c.js"]
        .iter()
        .map(|f| aast(&fixture(f), "udc"))
        .collect();
    let m = make_pairs(&corpus);
    assert_eq!(m.pairs.len(), 3);
    let fig1d = parse(&fixture("unsafe/fig1d.js")).unwrap();
    assert_eq!(*m.pairs[1].edit.triple.doc(), fig1d);
    assert_eq!(*m.pairs[2].edit.triple.doc(), fig1d);
    // The guard is the right operand of `&&`; its left operand stays.
    assert!(emit(m.pairs[0].edit.triple.doc()).contains("  if (action) {\n    action(req.inp);"));
}

#[test]
fn unwitnessed_program_gives_no_pairs() {
    let m = make_pairs(&[aast(&fixture("unsafe/fig1d.js"), "udc")]);
    assert_eq!(m.witnessed, 0);
    assert!(m.pairs.is_empty() && m.skipped.is_empty());
}

#[test]
fn self_assigned_sanitizer_becomes_insert() {
    let p = only_pair(&fixture("xss/fig6b.js"), "xss");
    assert_eq!(p.edit.edit_type, EditType::Insert);
    assert_eq!(p.edit.index, 1);
    assert_eq!(emit_tree(&p.edit.editprog), "userId = escape(userId);");
    assert_eq!(
        *p.edit.triple.doc(),
        parse(&fixture("unsafe/fig6a.js")).unwrap()
    );
}

#[test]
fn inline_sanitizer_is_replaced_by_argument() {
    let src = "const h = function (req, res) {\n  var message = req.body;\n  res.send(escape(message));\n};\n";
    let p = only_pair(src, "xss");
    assert_eq!(p.edit.edit_type, EditType::Replace);
    assert_eq!(emit_tree(&p.edit.editprog), "escape(message)");
    assert!(emit(p.edit.triple.doc()).contains("res.send(message);"));
}

#[test]
fn sanitizer_on_untainted_value_is_skipped_not_fatal() {
    let src =
        "const h = function (req, res) {\n  var m = 'x';\n  res.send(escape(m) + req.q);\n};\n";
    let m = make_pairs(&[aast(src, "xss")]);
    assert_eq!(m.pairs.len() + m.skipped.len(), m.witnessed);
}

#[test]
fn bookkeeping_matches_witnessed_triples() {
    let mut corpus = vec![];
    for f in [
        "udc/fig1a.js",
        "udc/fig1b.js",
        "udc/fig1c.js",
        "udc/fig4b.js",
    ] {
        corpus.push(aast(&fixture(f), "udc"));
    }
    corpus.push(aast(
        "var m = new Map();\napp.get('/x', (req, res) => {\n  var f = m.get(req.a);\n  if (typeof f === 'function') {\n    f(1);\n    f(2);\n  }\n});\n",
        "udc",
    ));
    let witnessed: usize = corpus
        .iter()
        .map(|a| slice(a).iter().filter(|t| t.witness.is_some()).count())
        .sum();
    let m = make_pairs(&corpus);
    assert_eq!(m.witnessed, witnessed);
    assert_eq!(m.pairs.len(), witnessed - m.skipped.len());
    assert!(m
        .skipped
        .iter()
        .any(|s| matches!(s.reason, PerturbError::UnsupportedGuardShape(_))));
}

fn empty_blocks(doc: &crate::syntax::AstDoc) -> usize {
    doc.ids()
        .filter(|&n| doc.kind(n) == NodeType::BlockStmt && doc.children(n).is_empty())
        .count()
}

#[test]
fn every_pair_round_trips_and_is_natural() {
    for (f, spec) in [
        ("udc/fig4b.js", "udc"),
        ("udc/fig1a.js", "udc"),
        ("xss/fig6b.js", "xss"),
    ] {
        let p = only_pair(&fixture(f), spec);
        assert_eq!(p.edit.apply().unwrap(), p.safe);
        let text = emit(p.edit.triple.doc());
        assert!(
            empty_blocks(p.edit.triple.doc()) <= empty_blocks(&p.safe),
            "{text}"
        );
        assert_eq!(parse(&text).unwrap(), *p.edit.triple.doc());
    }
}

#[test]
fn edit_meta_round_trips_through_disk() {
    let p = only_pair(&fixture("udc/fig4b.js"), "udc");
    let dir = tempfile::tempdir().unwrap();
    write_pair(dir.path(), &p, "fig4b").unwrap();
    let q = read_pair(dir.path(), &bundled("udc")).unwrap();
    assert_eq!(q.edit.edit_type, p.edit.edit_type);
    assert_eq!(q.edit.index, p.edit.index);
    assert_eq!(q.edit.editprog, p.edit.editprog);
    assert_eq!(q.edit.triple.source, p.edit.triple.source);
    assert_eq!(q.edit.triple.sink, p.edit.triple.sink);
    assert_eq!(q.edit.apply().unwrap(), q.safe);
}

#[test]
fn expression_fragments_round_trip() {
    for src in ["escape(m)", "function () {\n  return 1;\n}", "a && b(c)"] {
        let doc = parse(&format!("x({src});")).unwrap();
        let t = doc
            .subtree(doc.node_at_path(&[0, 0, 1]).unwrap())
            .strip_spans();
        let (form, text) = fragment_text(&t);
        assert_eq!(parse_fragment(form, &text).unwrap(), t);
    }
}
