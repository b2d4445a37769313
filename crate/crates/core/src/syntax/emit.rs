//! Canonical printer: one statement per line, two-space indentation, braces
//! always emitted, minimal parentheses.

use super::{AstDoc, NodeType, Tree};

/// 1-based inclusive line range of a node in emitted text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

pub fn emit(doc: &AstDoc) -> String {
    emit_tree(&doc.to_tree())
}

pub fn emit_tree(tree: &Tree) -> String {
    let mut p = Printer::new(false);
    p.node(tree, 0);
    let mut out = p.out;
    if tree.kind == NodeType::Program && !tree.children.is_empty() {
        out.push('\n');
    }
    out
}

/// Emit a document and record each node's line range (indexed by node id).
pub fn emit_with_spans(doc: &AstDoc) -> (String, Vec<LineSpan>) {
    let tree = doc.to_tree();
    let mut p = Printer::new(true);
    p.node(&tree, 0);
    let mut out = p.out;
    if !tree.children.is_empty() {
        out.push('\n');
    }
    (out, p.spans)
}

struct Printer {
    out: String,
    indent: usize,
    line: usize,
    track: bool,
    counter: usize,
    spans: Vec<LineSpan>,
    /// Set at statement start: a leading `function` or `{` must be parenthesized.
    lead: bool,
}

const PREC_ASSIGN: u8 = 1;
const PREC_UNARY: u8 = 8;
const PREC_POSTFIX: u8 = 9;
const PREC_PRIMARY: u8 = 10;

fn binary_prec(op: &str) -> u8 {
    match op {
        "||" => 2,
        "&&" => 3,
        "==" | "!=" | "===" | "!==" => 4,
        "<" | ">" | "<=" | ">=" | "in" | "instanceof" => 5,
        "+" | "-" => 6,
        _ => 7,
    }
}

fn prec(t: &Tree) -> u8 {
    match t.kind {
        NodeType::AssignExpr => PREC_ASSIGN,
        NodeType::FuncExpr if t.token == "=>" => PREC_ASSIGN,
        NodeType::BinaryExpr => binary_prec(&t.token),
        NodeType::UnaryExpr if t.token == "new" => PREC_POSTFIX,
        NodeType::UnaryExpr => PREC_UNARY,
        NodeType::CallExpr | NodeType::DotExpr | NodeType::IndexExpr => PREC_POSTFIX,
        _ => PREC_PRIMARY,
    }
}

fn starts_with_brace(t: &Tree) -> bool {
    match t.kind {
        NodeType::ObjectLit => t.token == "{}",
        NodeType::CallExpr
        | NodeType::DotExpr
        | NodeType::IndexExpr
        | NodeType::AssignExpr
        | NodeType::BinaryExpr => t.children.first().is_some_and(starts_with_brace),
        _ => false,
    }
}

impl Printer {
    fn new(track: bool) -> Self {
        Printer {
            out: String::new(),
            indent: 0,
            line: 1,
            track,
            counter: 0,
            spans: Vec::new(),
            lead: false,
        }
    }

    fn push(&mut self, s: &str) {
        self.lead = false;
        self.line += s.matches('\n').count();
        self.out.push_str(s);
    }

    fn newline(&mut self) {
        self.push("\n");
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    /// Print `t` (whose preorder index is taken from the counter), recording
    /// its line span.
    fn node(&mut self, t: &Tree, min_prec: u8) {
        let idx = self.counter;
        self.counter += 1;
        if self.track {
            self.spans.push(LineSpan {
                start: self.line,
                end: self.line,
            });
        }
        let start = self.line;
        let leading = self.lead
            && ((t.kind == NodeType::FuncExpr && t.token == "function")
                || (t.kind == NodeType::ObjectLit && t.token == "{}"));
        let paren = leading
            || (t.kind != NodeType::Program && !t.kind.is_statement() && prec(t) < min_prec);
        if paren {
            self.push("(");
        }
        self.body(t);
        if paren {
            self.push(")");
        }
        if self.track {
            self.spans[idx] = LineSpan {
                start,
                end: self.line,
            };
        }
    }

    fn skip(&mut self, t: &Tree) {
        // Keep the preorder counter aligned for subtrees printed implicitly.
        self.counter += 1;
        if self.track {
            self.spans.push(LineSpan {
                start: self.line,
                end: self.line,
            });
        }
        for c in &t.children {
            self.skip(c);
        }
    }

    fn statements(&mut self, stmts: &[Tree]) {
        for (i, s) in stmts.iter().enumerate() {
            if i > 0 {
                self.newline();
            }
            self.node(s, 0);
        }
    }

    fn block_like(&mut self, t: &Tree) {
        if t.kind == NodeType::BlockStmt {
            self.node(t, 0);
        } else {
            // Non-block branch: braces are emitted around it.
            self.push("{");
            self.indent += 1;
            self.newline();
            self.node(t, 0);
            self.indent -= 1;
            self.newline();
            self.push("}");
        }
    }

    fn list(&mut self, items: &[Tree], sep: &str, min_prec: u8) {
        for (i, c) in items.iter().enumerate() {
            if i > 0 {
                self.push(sep);
            }
            self.node(c, min_prec);
        }
    }

    fn body(&mut self, t: &Tree) {
        let ch = &t.children;
        match t.kind {
            NodeType::Program => self.statements(ch),
            NodeType::BlockStmt => {
                if ch.is_empty() {
                    self.push("{}");
                    return;
                }
                self.push("{");
                self.indent += 1;
                self.newline();
                self.statements(ch);
                self.indent -= 1;
                self.newline();
                self.push("}");
            }
            NodeType::IfStmt => {
                self.push("if (");
                self.node(&ch[0], 0);
                self.push(") ");
                self.block_like(&ch[1]);
                if let Some(e) = ch.get(2) {
                    self.push(" else ");
                    self.block_like(e);
                }
            }
            NodeType::Expr => {
                self.lead = true;
                self.node(&ch[0], 0);
                self.push(";");
            }
            NodeType::DeclExpr => {
                self.push(&t.token);
                self.push(" ");
                self.list(ch, ", ", 0);
                self.push(";");
            }
            NodeType::Declarator => {
                self.node(&ch[0], 0);
                if let Some(init) = ch.get(1) {
                    self.push(" = ");
                    self.node(init, PREC_ASSIGN);
                }
            }
            NodeType::ReturnStmt => {
                self.push("return");
                if let Some(e) = ch.first() {
                    self.push(" ");
                    self.node(e, 0);
                }
                self.push(";");
            }
            NodeType::AssignExpr => {
                self.node(&ch[0], PREC_POSTFIX);
                self.push(" = ");
                self.node(&ch[1], PREC_ASSIGN);
            }
            NodeType::BinaryExpr => {
                let p = binary_prec(&ch[1].token);
                self.node(&ch[0], p);
                self.push(" ");
                self.node(&ch[1], 0);
                self.push(" ");
                self.node(&ch[2], p + 1);
            }
            NodeType::UnaryExpr => {
                let op = &ch[0].token;
                self.node(&ch[0], 0);
                match op.as_str() {
                    "typeof" | "new" => self.push(" "),
                    _ => {}
                }
                let need = if op == "new" {
                    PREC_PRIMARY
                } else {
                    PREC_UNARY
                };
                if op == "new" && ch[1].kind == NodeType::CallExpr {
                    // `new C(args)`: the call is printed in place.
                    let idx = self.counter;
                    self.counter += 1;
                    if self.track {
                        self.spans.push(LineSpan {
                            start: self.line,
                            end: self.line,
                        });
                    }
                    let start = self.line;
                    self.call(&ch[1]);
                    if self.track {
                        self.spans[idx] = LineSpan {
                            start,
                            end: self.line,
                        };
                    }
                } else {
                    self.node(&ch[1], need);
                }
            }
            NodeType::CallExpr => self.call(t),
            NodeType::DotExpr => {
                let int_lit = ch[0].kind == NodeType::Literal
                    && ch[0].token.starts_with(|c: char| c.is_ascii_digit())
                    && !ch[0].token.contains('.');
                self.node(
                    &ch[0],
                    if int_lit {
                        PREC_PRIMARY + 1
                    } else {
                        PREC_POSTFIX
                    },
                );
                self.push(".");
                self.node(&ch[1], 0);
            }
            NodeType::IndexExpr => {
                self.node(&ch[0], PREC_POSTFIX);
                self.push("[");
                self.node(&ch[1], 0);
                self.push("]");
            }
            NodeType::FuncExpr => {
                let (params, body) = ch.split_at(ch.len() - 1);
                if t.token == "function" {
                    self.push("function (");
                } else {
                    self.push("(");
                }
                self.list(params, ", ", 0);
                if t.token == "function" {
                    self.push(") ");
                } else {
                    self.push(") => ");
                }
                let body = &body[0];
                if body.kind == NodeType::BlockStmt {
                    self.node(body, 0);
                } else if starts_with_brace(body) {
                    self.push("(");
                    self.node(body, 0);
                    self.push(")");
                } else {
                    self.node(body, PREC_ASSIGN);
                }
            }
            NodeType::ObjectLit => {
                let (open, close) = if t.token == "[]" {
                    ("[", "]")
                } else {
                    ("{", "}")
                };
                self.push(open);
                self.list(ch, ", ", PREC_ASSIGN);
                self.push(close);
            }
            NodeType::PropInit => {
                self.node(&ch[0], 0);
                self.push(": ");
                self.node(&ch[1], PREC_ASSIGN);
            }
            NodeType::VarExpr
            | NodeType::VarDecl
            | NodeType::BinaryOp
            | NodeType::Param
            | NodeType::Label
            | NodeType::Literal => {
                let tok = t.token.clone();
                self.push(&tok);
                for c in ch {
                    self.skip(c);
                }
            }
        }
    }

    fn call(&mut self, t: &Tree) {
        let ch = &t.children;
        self.node(&ch[0], PREC_POSTFIX);
        self.push("(");
        self.list(&ch[1..], ", ", PREC_ASSIGN);
        self.push(")");
    }
}

#[cfg(test)]
mod tests {
    use crate::syntax::{emit, emit_with_spans, parse};

    fn canon(src: &str) -> String {
        emit(&parse(src).unwrap())
    }

    #[test]
    fn round_trip_simple() {
        assert_eq!(canon("foo(data);"), "foo(data);\n");
    }

    #[test]
    fn braces_always_emitted() {
        assert_eq!(
            canon("if (typeof a !== 'function') return;"),
            "if (typeof a !== 'function') {\n  return;\n}\n"
        );
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(canon("(a + b) * c;"), "(a + b) * c;\n");
        assert_eq!(canon("a + (b * c);"), "a + b * c;\n");
        assert_eq!(canon("a - (b - c);"), "a - (b - c);\n");
        assert_eq!(
            canon("(typeof x === 'function') && x(y);"),
            "typeof x === 'function' && x(y);\n"
        );
        assert_eq!(canon("!(a && b);"), "!(a && b);\n");
        assert_eq!(canon("(function () {})();"), "(function () {})();\n");
        assert_eq!(canon("({a: 1}).a;"), "({a: 1}).a;\n");
    }

    #[test]
    fn functions_and_new() {
        let src = "app.get('/run', (req, res) => { var a = new Map(); a.get(req.x)(1); });";
        assert_eq!(
            canon(src),
            "app.get('/run', (req, res) => {\n  var a = new Map();\n  a.get(req.x)(1);\n});\n"
        );
    }

    #[test]
    fn spans_line_ranges() {
        let doc = parse("a();\nif (b) { c(); }\n").unwrap();
        let (text, spans) = emit_with_spans(&doc);
        assert_eq!(text, "a();\nif (b) {\n  c();\n}\n");
        assert_eq!(spans.len(), doc.len());
        let if_stmt = doc.children(doc.root())[1];
        assert_eq!(
            (spans[if_stmt.index()].start, spans[if_stmt.index()].end),
            (2, 4)
        );
        let inner = doc.node_at_path(&[1, 1, 0]).unwrap();
        assert_eq!(spans[inner.index()].start, 3);
    }
}
