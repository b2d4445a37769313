use super::lexer::{tokenize, TokKind, Token};
use super::{AstDoc, NodeType, Span, SyntaxError, Tree};

const RESERVED: &[&str] = &[
    "var",
    "let",
    "const",
    "if",
    "else",
    "return",
    "function",
    "typeof",
    "new",
    "in",
    "true",
    "false",
    "null",
    "instanceof",
];

const UNSUPPORTED: &[&str] = &[
    "class", "for", "while", "do", "throw", "try", "catch", "finally", "switch", "case", "async",
    "await", "yield", "import", "export", "break", "continue", "delete", "void", "with", "super",
];

/// Parse source text of the supported subset into a document with
/// syntactic structure only.
pub fn parse(source: &str) -> Result<AstDoc, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut stmts = Vec::new();
    while p.peek().kind != TokKind::Eof {
        if let Some(s) = p.statement()? {
            stmts.push(s);
        }
    }
    let mut program = Tree::new(NodeType::Program, "", stmts);
    program.span = Some(Span {
        start_line: 1,
        start_col: 1,
        end_line: p.peek().line,
        end_col: p.peek().col,
    });
    AstDoc::from_tree(program)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn binary_prec(tok: &Token) -> Option<u8> {
    let prec = match (tok.kind.clone(), tok.text.as_str()) {
        (TokKind::Punct, "||") => 2,
        (TokKind::Punct, "&&") => 3,
        (TokKind::Punct, "==" | "!=" | "===" | "!==") => 4,
        (TokKind::Punct, "<" | ">" | "<=" | ">=") => 5,
        (TokKind::Ident, "in" | "instanceof") => 5,
        (TokKind::Punct, "+" | "-") => 6,
        (TokKind::Punct, "*" | "/" | "%") => 7,
        _ => return None,
    };
    Some(prec)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != TokKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn prev(&self) -> &Token {
        &self.tokens[self.pos.saturating_sub(1)]
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        let t = self.peek();
        Err(SyntaxError::Parse {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, punct: &str) -> Result<Token, SyntaxError> {
        if self.peek().is(punct) {
            Ok(self.bump())
        } else {
            let found = if self.peek().kind == TokKind::Eof {
                "end of input".to_string()
            } else {
                format!("`{}`", self.peek().text)
            };
            self.error(format!("expected `{punct}`, found {found}"))
        }
    }

    fn eat(&mut self, punct: &str) -> bool {
        if self.peek().is(punct) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn finish(&self, mut tree: Tree, start: &Token) -> Tree {
        let end = self.prev();
        tree.span = Some(Span {
            start_line: start.line,
            start_col: start.col,
            end_line: end.end_line,
            end_col: end.end_col,
        });
        tree
    }

    fn check_supported(&self) -> Result<(), SyntaxError> {
        let t = self.peek();
        if t.kind == TokKind::Ident && UNSUPPORTED.contains(&t.text.as_str()) {
            return self.error(format!("unsupported construct `{}`", t.text));
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<Option<Tree>, SyntaxError> {
        self.check_supported()?;
        let start = self.peek().clone();
        if self.eat(";") {
            return Ok(None);
        }
        let tree = if start.is("{") {
            self.block()?
        } else if start.is_word("var") || start.is_word("let") || start.is_word("const") {
            self.bump();
            let mut decls = vec![self.declarator()?];
            while self.eat(",") {
                decls.push(self.declarator()?);
            }
            self.end_statement()?;
            Tree::new(NodeType::DeclExpr, start.text.clone(), decls)
        } else if start.is_word("if") {
            self.bump();
            self.expect("(")?;
            let cond = self.expression()?;
            self.expect(")")?;
            let then = self.branch()?;
            let mut children = vec![cond, then];
            if self.peek().is_word("else") {
                self.bump();
                children.push(self.branch()?);
            }
            Tree::new(NodeType::IfStmt, "if", children)
        } else if start.is_word("return") {
            self.bump();
            let t = self.peek();
            let mut children = Vec::new();
            if !(t.is(";") || t.is("}") || t.kind == TokKind::Eof) {
                children.push(self.expression()?);
            }
            self.end_statement()?;
            Tree::new(NodeType::ReturnStmt, "return", children)
        } else if start.is_word("function") && self.peek_at(1).kind == TokKind::Ident {
            return self.error(
                "function declarations are not supported; use `var f = function (...) {...}`",
            );
        } else {
            let e = self.expression()?;
            self.end_statement()?;
            Tree::new(NodeType::Expr, "", vec![e])
        };
        Ok(Some(self.finish(tree, &start)))
    }

    fn end_statement(&mut self) -> Result<(), SyntaxError> {
        if self.eat(";") || self.peek().is("}") || self.peek().kind == TokKind::Eof {
            Ok(())
        } else {
            self.error(format!("expected `;`, found `{}`", self.peek().text))
        }
    }

    /// If/else branches are always blocks in the tree.
    fn branch(&mut self) -> Result<Tree, SyntaxError> {
        if self.peek().is("{") {
            return self.block();
        }
        let start = self.peek().clone();
        let stmt = self.statement()?;
        Ok(self.finish(
            Tree::new(NodeType::BlockStmt, "", stmt.into_iter().collect()),
            &start,
        ))
    }

    fn block(&mut self) -> Result<Tree, SyntaxError> {
        let start = self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.peek().is("}") {
            if self.peek().kind == TokKind::Eof {
                return self.error("unterminated block");
            }
            if let Some(s) = self.statement()? {
                stmts.push(s);
            }
        }
        self.bump();
        Ok(self.finish(Tree::new(NodeType::BlockStmt, "", stmts), &start))
    }

    fn declarator(&mut self) -> Result<Tree, SyntaxError> {
        let start = self.peek().clone();
        let name = self.identifier()?;
        let var = self.finish(Tree::leaf(NodeType::VarDecl, name), &start);
        let mut children = vec![var];
        if self.eat("=") {
            children.push(self.assignment()?);
        }
        Ok(self.finish(Tree::new(NodeType::Declarator, "", children), &start))
    }

    fn identifier(&mut self) -> Result<String, SyntaxError> {
        self.check_supported()?;
        let t = self.peek();
        if t.kind != TokKind::Ident || RESERVED.contains(&t.text.as_str()) {
            return self.error(format!("expected identifier, found `{}`", t.text));
        }
        Ok(self.bump().text)
    }

    fn expression(&mut self) -> Result<Tree, SyntaxError> {
        self.assignment()
    }

    fn arrow_ahead(&self) -> bool {
        let t = self.peek();
        if t.kind == TokKind::Ident && !RESERVED.contains(&t.text.as_str()) {
            return self.peek_at(1).is("=>");
        }
        if !t.is("(") {
            return false;
        }
        let mut depth = 0usize;
        for i in self.pos..self.tokens.len() {
            let tok = &self.tokens[i];
            if tok.is("(") {
                depth += 1;
            } else if tok.is(")") {
                depth -= 1;
                if depth == 0 {
                    return self.tokens.get(i + 1).is_some_and(|n| n.is("=>"));
                }
            } else if tok.kind == TokKind::Eof {
                return false;
            }
        }
        false
    }

    fn assignment(&mut self) -> Result<Tree, SyntaxError> {
        if self.arrow_ahead() {
            return self.arrow();
        }
        let start = self.peek().clone();
        let lhs = self.binary(0)?;
        if self.peek().is("=") {
            if !matches!(
                lhs.kind,
                NodeType::VarExpr | NodeType::DotExpr | NodeType::IndexExpr
            ) {
                return self.error("invalid assignment target");
            }
            self.bump();
            let rhs = self.assignment()?;
            return Ok(self.finish(Tree::new(NodeType::AssignExpr, "=", vec![lhs, rhs]), &start));
        }
        Ok(lhs)
    }

    fn arrow(&mut self) -> Result<Tree, SyntaxError> {
        let start = self.peek().clone();
        let mut params = Vec::new();
        if self.eat("(") {
            params = self.params_until_close()?;
        } else {
            let t = self.peek().clone();
            let name = self.identifier()?;
            params.push(self.finish(Tree::leaf(NodeType::Param, name), &t));
        }
        self.expect("=>")?;
        let body = if self.peek().is("{") {
            self.block()?
        } else {
            self.assignment()?
        };
        params.push(body);
        Ok(self.finish(Tree::new(NodeType::FuncExpr, "=>", params), &start))
    }

    /// Parameters after an opening paren, consuming the closing paren.
    fn params_until_close(&mut self) -> Result<Vec<Tree>, SyntaxError> {
        let mut params = Vec::new();
        if !self.eat(")") {
            loop {
                let t = self.peek().clone();
                let name = self.identifier()?;
                params.push(self.finish(Tree::leaf(NodeType::Param, name), &t));
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(params)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Tree, SyntaxError> {
        let start = self.peek().clone();
        let mut lhs = self.unary()?;
        while let Some(prec) = binary_prec(self.peek()) {
            if prec < min_prec {
                break;
            }
            let op_tok = self.bump();
            let op = self.finish(Tree::leaf(NodeType::BinaryOp, op_tok.text.clone()), &op_tok);
            let rhs = self.binary(prec + 1)?;
            lhs = self.finish(
                Tree::new(NodeType::BinaryExpr, op_tok.text, vec![lhs, op, rhs]),
                &start,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Tree, SyntaxError> {
        let start = self.peek().clone();
        if start.is("!") || start.is("-") || start.is_word("typeof") {
            self.bump();
            let op = self.finish(Tree::leaf(NodeType::BinaryOp, start.text.clone()), &start);
            let operand = self.unary()?;
            return Ok(self.finish(
                Tree::new(NodeType::UnaryExpr, start.text.clone(), vec![op, operand]),
                &start,
            ));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Tree, SyntaxError> {
        let start = self.peek().clone();
        let mut e = self.primary()?;
        loop {
            if self.eat(".") {
                let t = self.peek().clone();
                if t.kind != TokKind::Ident {
                    return self.error("expected property name");
                }
                self.bump();
                let label = self.finish(Tree::leaf(NodeType::Label, t.text.clone()), &t);
                e = self.finish(Tree::new(NodeType::DotExpr, ".", vec![e, label]), &start);
            } else if self.eat("[") {
                let idx = self.expression()?;
                self.expect("]")?;
                e = self.finish(Tree::new(NodeType::IndexExpr, "[]", vec![e, idx]), &start);
            } else if self.peek().is("(") {
                let args = self.arguments()?;
                let mut children = vec![e];
                children.extend(args);
                e = self.finish(Tree::new(NodeType::CallExpr, "", children), &start);
            } else {
                return Ok(e);
            }
        }
    }

    fn arguments(&mut self) -> Result<Vec<Tree>, SyntaxError> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.eat(")") {
            loop {
                args.push(self.assignment()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(args)
    }

    fn primary(&mut self) -> Result<Tree, SyntaxError> {
        self.check_supported()?;
        let t = self.peek().clone();
        let tree = match t.kind {
            TokKind::Num | TokKind::Str => {
                self.bump();
                Tree::leaf(NodeType::Literal, t.text.clone())
            }
            TokKind::Ident if matches!(t.text.as_str(), "true" | "false" | "null") => {
                self.bump();
                Tree::leaf(NodeType::Literal, t.text.clone())
            }
            TokKind::Ident if t.text == "function" => {
                self.bump();
                if self.peek().kind == TokKind::Ident {
                    return self.error("named function expressions are not supported");
                }
                self.expect("(")?;
                let mut children = self.params_until_close()?;
                children.push(self.block()?);
                Tree::new(NodeType::FuncExpr, "function", children)
            }
            TokKind::Ident if t.text == "new" => {
                self.bump();
                let cstart = self.peek().clone();
                let mut callee = Tree::leaf(NodeType::VarExpr, self.identifier()?);
                callee = self.finish(callee, &cstart);
                while self.eat(".") {
                    let lt = self.peek().clone();
                    if lt.kind != TokKind::Ident {
                        return self.error("expected property name");
                    }
                    self.bump();
                    let label = self.finish(Tree::leaf(NodeType::Label, lt.text.clone()), &lt);
                    callee = self.finish(
                        Tree::new(NodeType::DotExpr, ".", vec![callee, label]),
                        &cstart,
                    );
                }
                if !self.peek().is("(") {
                    return self.error("`new` requires an argument list");
                }
                let mut children = vec![callee];
                children.extend(self.arguments()?);
                let call = self.finish(Tree::new(NodeType::CallExpr, "", children), &cstart);
                let op = self.finish(Tree::leaf(NodeType::BinaryOp, "new"), &t);
                Tree::new(NodeType::UnaryExpr, "new", vec![op, call])
            }
            TokKind::Ident => Tree::leaf(NodeType::VarExpr, self.identifier()?),
            TokKind::Punct if t.text == "(" => {
                self.bump();
                let e = self.expression()?;
                self.expect(")")?;
                return Ok(e);
            }
            TokKind::Punct if t.text == "{" => {
                self.bump();
                let mut props = Vec::new();
                if !self.eat("}") {
                    loop {
                        let kt = self.peek().clone();
                        let key = match kt.kind {
                            TokKind::Ident => Tree::leaf(NodeType::Label, kt.text.clone()),
                            TokKind::Str | TokKind::Num => {
                                Tree::leaf(NodeType::Literal, kt.text.clone())
                            }
                            _ => return self.error("expected property key"),
                        };
                        self.bump();
                        let key = self.finish(key, &kt);
                        self.expect(":")?;
                        let value = self.assignment()?;
                        props.push(
                            self.finish(Tree::new(NodeType::PropInit, ":", vec![key, value]), &kt),
                        );
                        if self.eat("}") {
                            break;
                        }
                        self.expect(",")?;
                        if self.eat("}") {
                            break;
                        }
                    }
                }
                Tree::new(NodeType::ObjectLit, "{}", props)
            }
            TokKind::Punct if t.text == "[" => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat("]") {
                    loop {
                        items.push(self.assignment()?);
                        if self.eat("]") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                Tree::new(NodeType::ObjectLit, "[]", items)
            }
            TokKind::Eof => return self.error("unexpected end of input"),
            _ => return self.error(format!("unexpected token `{}`", t.text)),
        };
        Ok(self.finish(tree, &t))
    }
}
