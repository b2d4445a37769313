use super::*;
use crate::dataflow::{annotate, slice, tests::bundled};
use crate::perturb::{make_pairs, tests::fixture};
use crate::syntax::{emit, parse};
use proptest::prelude::{any, prop, prop_assert_eq, prop_oneof, proptest, Just, ProptestConfig};
use proptest::strategy::Strategy as Gen;
use std::sync::Arc;
use Strategy;

pub(crate) fn golden(name: &str) -> String {
    let path = format!(
        "{}/tests/golden/{name}.strategy",
        env!("CARGO_MANIFEST_DIR")
    );
    std::fs::read_to_string(path).unwrap()
}

pub(crate) fn flow(rel: &str, spec: &str) -> FlowTriple {
    let doc = parse(&fixture(rel)).unwrap();
    let mut ts = slice(&Arc::new(annotate(&doc, &bundled(spec))));
    assert_eq!(ts.len(), 1);
    ts.remove(0)
}

fn sc(i: i64) -> Step {
    Step::edge(EdgeType::SynChild, i)
}

fn s1() -> (Strategy, [Loc; 5]) {
    let ls = Loc::Source.then(vec![Step::Kleene {
        kind: EdgeType::SemChild,
        clauses: vec![
            Clause::TypeIs(NodeType::VarExpr),
            Clause::NeighbourTypeIs(Box::new(Step::syn_parent()), NodeType::CallExpr),
        ],
    }]);
    let le = ls.clone().then(vec![Step::Kleene {
        kind: EdgeType::SynParent,
        clauses: vec![Clause::TypeIs(NodeType::BlockStmt)],
    }]);
    let i = Index::Offset(Box::new(ls.clone()), 0);
    let lr2 = ls.clone().then(vec![
        Step::edge(EdgeType::SemParent, 0),
        Step::edge(EdgeType::SemParent, 0),
    ]);
    let lr1 = lr2.clone().then(vec![Step::syn_parent(), sc(0)]);
    let lr3 = le.clone().then(vec![Step::Edge {
        kind: EdgeType::SynChild,
        index: i.clone(),
    }]);
    let c = |kind, token: &str, children| EAst::Const {
        kind,
        token: token.into(),
        children,
    };
    let out = c(
        NodeType::IfStmt,
        "if",
        vec![
            c(
                NodeType::CallExpr,
                "",
                vec![
                    c(
                        NodeType::DotExpr,
                        ".",
                        vec![
                            EAst::Ref(lr1.clone()),
                            c(NodeType::Label, "hasOwnProperty", vec![]),
                        ],
                    ),
                    EAst::Ref(lr2.clone()),
                ],
            ),
            c(NodeType::BlockStmt, "", vec![EAst::Ref(lr3.clone())]),
        ],
    );
    let s = Strategy {
        edit_type: EditType::Replace,
        loc: le.clone(),
        index: i,
        out,
    };
    (s, [ls, le, lr1, lr2, lr3])
}

#[test]
fn s1_serializes_to_golden_text() {
    let (s, _) = s1();
    assert_eq!(s.to_string(), golden("s1").trim_end());
    assert_eq!(parse_strategy(&golden("s1")).unwrap(), s);
}

#[test]
fn s1_intermediate_values() {
    let t = flow("unsafe/fig4a.js", "udc");
    let (s, [ls, le, lr1, lr2, lr3]) = s1();
    let it = Interp::new(&t);
    let v = |l: &Loc| t.doc().value(it.eval_loc(l).unwrap()).to_string();
    let foo = it.eval_loc(&ls).unwrap();
    assert_eq!(v(&ls), "foo");
    assert_eq!(t.doc().kind(foo), NodeType::VarExpr);
    assert_eq!(t.doc().kind(it.eval_loc(&le).unwrap()), NodeType::BlockStmt);
    assert_eq!(
        it.eval_index(&s.index, it.eval_loc(&le).unwrap()).unwrap(),
        13
    );
    assert_eq!(v(&lr1), "handlers");
    assert_eq!(v(&lr2), "data.id");
    assert_eq!(v(&lr3), "foo(data);");
    assert_eq!(
        emit_tree(&it.materialize(&s.out).unwrap()),
        "if (handlers.hasOwnProperty(data.id)) {\n  foo(data);\n}"
    );
}

use crate::syntax::emit_tree;

#[test]
fn s1_and_s2_repair_worked_example() {
    let t = flow("unsafe/fig4a.js", "udc");
    let want = parse(&fixture("udc/fig4b.js")).unwrap();
    for name in ["s1", "s2"] {
        let s = parse_strategy(&golden(name)).unwrap();
        let got = apply_strategy(&s, &t).unwrap();
        assert_eq!(emit(&got), emit(&want), "{name}");
    }
}

#[test]
fn s1_is_cheaper_than_s2() {
    let c1 = cost(&parse_strategy(&golden("s1")).unwrap());
    let c2 = cost(&parse_strategy(&golden("s2")).unwrap());
    // Hand-computed from the cost definition.
    assert_eq!((c1, c2), (46, 158));
}

#[test]
fn kleene_step_is_cheaper_than_explicit_chain() {
    let out = EAst::Const {
        kind: NodeType::Literal,
        token: "1".into(),
        children: vec![],
    };
    let mk = |steps| Strategy {
        edit_type: EditType::Insert,
        loc: Loc::Source.then(steps),
        index: Index::Constant(0),
        out: out.clone(),
    };
    let kleene = mk(vec![Step::Kleene {
        kind: EdgeType::SemChild,
        clauses: vec![Clause::TypeIs(NodeType::VarExpr)],
    }]);
    let chain = mk((0..7).map(|_| Step::edge(EdgeType::SemChild, 0)).collect());
    assert!(cost(&kleene) < cost(&chain));
    assert_eq!(cost(&kleene), cost(&kleene.clone()));
}

#[test]
fn empty_traversal_is_the_start_node() {
    let t = flow("unsafe/fig4a.js", "udc");
    assert_eq!(eval_loc(&Loc::Source, &t).unwrap(), t.source);
    assert_eq!(eval_loc(&Loc::Source.then(vec![]), &t).unwrap(), t.source);
}

#[test]
fn s1_is_inapplicable_to_a_non_call_sink() {
    let doc = parse("var h = function (req, res) {\n  res.send('hi ' + req.q);\n};\n").unwrap();
    let ts = slice(&Arc::new(annotate(&doc, &bundled("xss"))));
    assert_eq!(ts[0].doc().kind(ts[0].sink), NodeType::BinaryExpr);
    let (s, _) = s1();
    assert!(matches!(
        apply_strategy(&s, &ts[0]),
        Err(StrategyError::TraversalStuck(_))
    ));
}

#[test]
fn offset_index_of_direct_child_is_its_slot() {
    let t = flow("unsafe/fig4a.js", "udc");
    let doc = t.doc();
    let block = doc
        .parent(doc.parent(doc.parent(t.sink).unwrap()).unwrap())
        .unwrap();
    let anchor = Loc::Source.then(syntactic_path(doc, t.source, doc.children(block)[4]));
    for z in [-2, 0, 3] {
        let ix = Index::Offset(Box::new(anchor.clone()), z);
        assert_eq!(eval_index(&ix, block, &t).unwrap(), 4 + z);
    }
}

#[test]
fn kleene_result_is_first_satisfying_node_in_bfs_order() {
    let t = flow("unsafe/fig4a.js", "udc");
    let it = Interp::new(&t);
    let clauses = vec![Clause::TypeIs(NodeType::VarDecl)];
    let got = it
        .eval_step(
            &Step::Kleene {
                kind: EdgeType::SemChild,
                clauses: clauses.clone(),
            },
            t.source,
        )
        .unwrap();
    // Independent BFS listing.
    let mut order = vec![t.source];
    let mut k = 0;
    while k < order.len() {
        for m in t.sem_children(order[k]) {
            if !order.contains(&m) {
                order.push(m);
            }
        }
        k += 1;
    }
    let first = order.iter().find(|&&n| it.satisfies(n, &clauses)).copied();
    assert_eq!(Some(got), first);
    assert_eq!(t.doc().value(got), "data");
}

#[test]
fn lifted_strategy_reproduces_each_pair() {
    let corpus: Vec<_> = [
        ("udc/fig4b.js", "udc"),
        ("udc/fig1a.js", "udc"),
        ("udc/fig1b.js", "udc"),
        ("udc/fig1c.js", "udc"),
        ("xss/fig6b.js", "xss"),
    ]
    .iter()
    .map(|(f, s)| Arc::new(annotate(&parse(&fixture(f)).unwrap(), &bundled(s))))
    .collect();
    let m = make_pairs(&corpus);
    assert_eq!(m.pairs.len(), 5);
    for p in &m.pairs {
        let s = lift(&p.edit);
        assert_eq!(apply_strategy(&s, &p.edit.triple).unwrap(), p.safe);
        assert_eq!(parse_strategy(&s.to_string()).unwrap(), s);
    }
}

#[test]
fn truncated_and_malformed_text_is_rejected() {
    let g = golden("s1");
    for cut in [10, g.len() / 2, g.trim_end().len() - 1] {
        let e = parse_strategy(&g[..cut]).unwrap_err();
        assert_eq!(e.line, 1);
    }
    let e = parse_strategy("Replace(Source, GetConstant(x), ReferenceAST(Source))").unwrap_err();
    assert_eq!((e.line, e.col), (1, 29));
    assert!(parse_strategy("Insert(Source, GetConstant(0), ConstantAST(IfStmt, \"if\"))").is_err());
    assert!(parse_strategy("Insert(Source, GetConstant(0), ReferenceAST(ApplyTraversal(Source, GetEdge(SynParent, GetConstant(0)))))").is_err());
}

#[test]
fn store_round_trips_and_checks_cost() {
    let (s, _) = s1();
    let rec = StoreRecord {
        spec: "udc-membership".into(),
        cost: cost(&s),
        support: 2,
        strategy: s,
    };
    let text = write_store(std::slice::from_ref(&rec));
    assert!(text.contains("strategy spec=\"udc-membership\" cost=46 support=2\nReplace("));
    assert_eq!(parse_store(&text).unwrap(), vec![rec]);
    let bad = text.replace("cost=46", "cost=45");
    assert!(parse_store(&bad).is_err());
}

fn arb_loc() -> impl Gen<Value = Loc> {
    let kind = prop_oneof![
        Just(EdgeType::SynChild),
        Just(EdgeType::SemChild),
        Just(EdgeType::SemParent),
    ];
    let ntype = prop::sample::select(NodeType::ALL.to_vec());
    let step = (kind, 0i64..20, ntype.clone(), any::<bool>(), any::<bool>()).prop_map(
        |(kind, z, t, kleene, neighbour)| {
            if kleene {
                let mut clauses = vec![Clause::TypeIs(t)];
                if neighbour {
                    clauses.push(Clause::NeighbourTypeIs(Box::new(Step::syn_parent()), t));
                }
                Step::Kleene { kind, clauses }
            } else if neighbour {
                Step::syn_parent()
            } else {
                Step::edge(kind, z)
            }
        },
    );
    prop::collection::vec(prop::collection::vec(step, 1..4), 0..3).prop_map(|chunks| {
        chunks
            .into_iter()
            .fold(Loc::Source, |l, steps| Loc::Apply(Box::new(l), steps))
    })
}

fn arb_east() -> impl Gen<Value = EAst> {
    let leaf = prop_oneof![
        arb_loc().prop_map(EAst::Ref),
        "[a-z\"\\\\ ]{0,6}".prop_map(|t| EAst::Const {
            kind: NodeType::Literal,
            token: t,
            children: vec![],
        }),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop::collection::vec(inner, 0..4).prop_map(|children| EAst::Const {
            kind: NodeType::BlockStmt,
            token: String::new(),
            children,
        })
    })
}

fn arb_strategy() -> impl Gen<Value = Strategy> {
    (
        any::<bool>(),
        arb_loc(),
        arb_loc(),
        -5i64..30,
        any::<bool>(),
        arb_east(),
    )
        .prop_map(|(ins, loc, anchor, z, offset, out)| Strategy {
            edit_type: if ins {
                EditType::Insert
            } else {
                EditType::Replace
            },
            loc,
            index: if offset {
                Index::Offset(Box::new(anchor), z)
            } else {
                Index::Constant(z)
            },
            out,
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn random_strategies_round_trip(s in arb_strategy()) {
        prop_assert_eq!(parse_strategy(&s.to_string()).unwrap(), s);
    }
}
