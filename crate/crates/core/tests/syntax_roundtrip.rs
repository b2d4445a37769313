use flowmend::syntax::{emit_tree, parse, AstDoc, NodeType, Tree};
use proptest::prelude::*;

fn var() -> impl Strategy<Value = Tree> {
    prop::sample::select(vec!["a", "b", "data", "foo"])
        .prop_map(|n| Tree::leaf(NodeType::VarExpr, n))
}

fn lit() -> impl Strategy<Value = Tree> {
    prop::sample::select(vec!["1", "'x'", "true", "null"])
        .prop_map(|n| Tree::leaf(NodeType::Literal, n))
}

fn expr() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![var(), lit()];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let ops = prop::sample::select(vec!["+", "-", "*", "&&", "||", "===", "!==", "<", "in"]);
        prop_oneof![
            (inner.clone(), ops, inner.clone()).prop_map(|(l, op, r)| Tree::new(
                NodeType::BinaryExpr,
                op,
                vec![l, Tree::leaf(NodeType::BinaryOp, op), r]
            )),
            (
                prop::sample::select(vec!["!", "-", "typeof"]),
                inner.clone()
            )
                .prop_map(|(op, x)| {
                    Tree::new(
                        NodeType::UnaryExpr,
                        op,
                        vec![Tree::leaf(NodeType::BinaryOp, op), x],
                    )
                }),
            (inner.clone(), prop::sample::select(vec!["id", "get"])).prop_map(|(o, l)| {
                Tree::new(
                    NodeType::DotExpr,
                    ".",
                    vec![o, Tree::leaf(NodeType::Label, l)],
                )
            }),
            (inner.clone(), inner.clone()).prop_map(|(o, k)| Tree::new(
                NodeType::IndexExpr,
                "[]",
                vec![o, k]
            )),
            (inner.clone(), prop::collection::vec(inner.clone(), 0..3)).prop_map(
                |(c, mut args)| {
                    args.insert(0, c);
                    Tree::new(NodeType::CallExpr, "", args)
                }
            ),
            (var(), inner.clone()).prop_map(|(t, v)| Tree::new(
                NodeType::AssignExpr,
                "=",
                vec![t, v]
            )),
        ]
    })
}

fn stmt() -> impl Strategy<Value = Tree> {
    let simple = prop_oneof![
        expr().prop_map(|e| Tree::new(NodeType::Expr, "", vec![e])),
        expr().prop_map(|e| Tree::new(
            NodeType::DeclExpr,
            "var",
            vec![Tree::new(
                NodeType::Declarator,
                "",
                vec![Tree::leaf(NodeType::VarDecl, "x"), e]
            )]
        )),
        Just(Tree::leaf(NodeType::ReturnStmt, "return")),
    ];
    simple.prop_recursive(2, 12, 3, |inner| {
        (expr(), prop::collection::vec(inner, 0..3)).prop_map(|(c, body)| {
            Tree::new(
                NodeType::IfStmt,
                "if",
                vec![c, Tree::new(NodeType::BlockStmt, "", body)],
            )
        })
    })
}

proptest! {
    #[test]
    fn emit_then_parse_is_identity(stmts in prop::collection::vec(stmt(), 0..5)) {
        let tree = Tree::new(NodeType::Program, "", stmts);
        let text = emit_tree(&tree);
        let doc = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        prop_assert_eq!(doc.to_tree(), tree.clone());
        prop_assert_eq!(emit_tree(&doc.to_tree()), text);
        let rebuilt = AstDoc::from_tree(tree).unwrap();
        prop_assert_eq!(rebuilt, doc);
    }
}
