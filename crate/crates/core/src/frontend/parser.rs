//! Recursive-descent parser for the supported C subset.

use std::collections::HashMap;

use super::ast::{Ast, AstNode, NodeKind};
use super::lexer::{Token, TokenKind};
use super::omp::Directive;
use super::FrontendError;

#[derive(Debug)]
struct RawNode {
    kind: NodeKind,
    children: Vec<usize>,
    text: String,
    label: Option<String>,
    decl_ref: Option<usize>,
    directive: Option<Directive>,
    /// Source position used to order terminals.
    pos: (usize, usize),
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    arena: Vec<RawNode>,
    scopes: Vec<HashMap<String, usize>>,
    functions: HashMap<String, usize>,
}

type PResult<T> = Result<T, FrontendError>;

const TYPE_WORDS: &[&str] = &["int", "float", "double", "void", "char", "long", "short", "unsigned", "signed", "const"];

/// Parses a token stream into an [`Ast`].
pub fn parse(tokens: &[Token]) -> Result<Ast, FrontendError> {
    let mut p = Parser { tokens, pos: 0, arena: Vec::new(), scopes: vec![HashMap::new()], functions: HashMap::new() };
    let root = p.translation_unit()?;
    Ok(p.finish(root))
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text && t.kind != TokenKind::PragmaLine)
    }

    fn peek2_is(&self, text: &str) -> bool {
        self.tokens.get(self.pos + 1).is_some_and(|t| t.text == text)
    }

    fn here(&self) -> (usize, usize) {
        match self.peek().or(self.tokens.last()) {
            Some(t) => (t.line, t.column),
            None => (1, 1),
        }
    }

    fn error(&self, expected: &str) -> FrontendError {
        let (line, column) = self.here();
        let found = match self.peek() {
            Some(t) => format!("`{}`", t.text),
            None => "end of input".to_string(),
        };
        FrontendError::Parse { expected: expected.to_string(), found, line, column }
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn expect(&mut self, text: &str) -> PResult<&'t Token> {
        if self.peek_is(text) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("`{text}`")))
        }
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek_is(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<&'t Token> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.bump()),
            _ => Err(self.error("identifier")),
        }
    }

    fn node(&mut self, kind: NodeKind, children: Vec<usize>, pos: (usize, usize)) -> usize {
        self.arena.push(RawNode { kind, children, text: String::new(), label: None, decl_ref: None, directive: None, pos });
        self.arena.len() - 1
    }

    fn labeled(&mut self, kind: NodeKind, children: Vec<usize>, label: &str, pos: (usize, usize)) -> usize {
        let id = self.node(kind, children, pos);
        self.arena[id].label = Some(label.to_string());
        id
    }

    fn at_type(&self) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Keyword && TYPE_WORDS.contains(&t.text.as_str()))
    }

    fn type_spec(&mut self) -> PResult<()> {
        if !self.at_type() {
            return Err(self.error("type specifier"));
        }
        while self.at_type() {
            self.bump();
        }
        if self.peek_is("*") {
            return Err(self.error("declarator (pointers are not supported)"));
        }
        Ok(())
    }

    fn declare(&mut self, name: &Token, id: usize) -> PResult<()> {
        let scope = self.scopes.last_mut().expect("scope stack is never empty");
        if scope.insert(name.text.clone(), id).is_some() {
            return Err(FrontendError::Parse {
                expected: "a fresh name".into(),
                found: format!("redeclaration of `{}`", name.text),
                line: name.line,
                column: name.column,
            });
        }
        Ok(())
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    // ---- declarations -------------------------------------------------

    fn translation_unit(&mut self) -> PResult<usize> {
        let mut items = Vec::new();
        while let Some(t) = self.peek() {
            if t.kind == TokenKind::PragmaLine {
                return Err(self.error("function or declaration (directives must appear inside a function)"));
            }
            self.type_spec()?;
            let name = self.ident()?;
            if self.peek_is("(") {
                items.push(self.function(name)?);
            } else {
                items.extend(self.declarators_after_type(Some(name))?);
                self.expect(";")?;
            }
        }
        Ok(self.node(NodeKind::TranslationUnit, items, (0, 0)))
    }

    fn function(&mut self, name: &'t Token) -> PResult<usize> {
        let pos = (name.line, name.column);
        self.expect("(")?;
        self.scopes.push(HashMap::new());
        let mut params = Vec::new();
        if self.peek_is("void") && self.peek2_is(")") {
            self.bump();
        }
        if !self.peek_is(")") {
            loop {
                self.type_spec()?;
                let pname = self.ident()?;
                self.array_dims()?;
                let id = self.labeled(NodeKind::ParmVarDecl, vec![], &pname.text, (pname.line, pname.column));
                self.declare(pname, id)?;
                params.push(id);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let mut children = params;
        if self.peek_is(";") {
            self.bump();
        } else {
            // Parameters share the body's scope, as in C.
            children.push(self.compound_in_current_scope()?);
        }
        self.scopes.pop();
        let id = self.labeled(NodeKind::FunctionDecl, children, &name.text, pos);
        self.functions.insert(name.text.clone(), id);
        Ok(id)
    }

    /// Array extents are part of the declared type; they are checked but not
    /// kept as AST children.
    fn array_dims(&mut self) -> PResult<()> {
        while self.eat("[") {
            if !self.peek_is("]") {
                let mark = self.arena.len();
                self.expr()?;
                self.arena.truncate(mark);
            }
            self.expect("]")?;
        }
        Ok(())
    }

    fn declarators_after_type(&mut self, first: Option<&'t Token>) -> PResult<Vec<usize>> {
        let mut decls = Vec::new();
        let mut name = match first {
            Some(n) => n,
            None => self.ident()?,
        };
        loop {
            self.array_dims()?;
            let mut children = Vec::new();
            if self.eat("=") {
                if self.peek_is("{") {
                    return Err(self.error("scalar initializer (brace initializers are not supported)"));
                }
                let init = self.assignment()?;
                children.push(self.rvalue(init));
            }
            let id = self.labeled(NodeKind::VarDecl, children, &name.text, (name.line, name.column));
            self.declare(name, id)?;
            decls.push(id);
            if !self.eat(",") {
                break;
            }
            name = self.ident()?;
        }
        Ok(decls)
    }

    // ---- statements ---------------------------------------------------

    fn compound(&mut self) -> PResult<usize> {
        self.scopes.push(HashMap::new());
        let r = self.compound_in_current_scope();
        self.scopes.pop();
        r
    }

    fn compound_in_current_scope(&mut self) -> PResult<usize> {
        let open = self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.peek_is("}") {
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            stmts.push(self.statement()?);
        }
        self.bump();
        Ok(self.node(NodeKind::CompoundStmt, stmts, (open.line, open.column)))
    }

    fn statement(&mut self) -> PResult<usize> {
        let Some(t) = self.peek() else { return Err(self.error("statement")) };
        if t.kind == TokenKind::PragmaLine {
            return self.directive();
        }
        if self.at_type() {
            let pos = (t.line, t.column);
            self.type_spec()?;
            let decls = self.declarators_after_type(None)?;
            self.expect(";")?;
            return Ok(self.node(NodeKind::DeclStmt, decls, pos));
        }
        match t.text.as_str() {
            "{" => self.compound(),
            "for" => self.for_stmt(),
            "while" => self.while_stmt(),
            "if" => self.if_stmt(),
            "return" => {
                let kw = self.bump();
                let mut children = Vec::new();
                if !self.peek_is(";") {
                    let e = self.expr()?;
                    children.push(self.rvalue(e));
                }
                self.expect(";")?;
                let id = self.node(NodeKind::ReturnStmt, children, (kw.line, kw.column));
                if self.arena[id].children.is_empty() {
                    self.arena[id].text = "return".into();
                }
                Ok(id)
            }
            "do" | "break" | "continue" | "struct" | "static" | "else" => {
                Err(self.error("supported statement"))
            }
            ";" => Err(self.error("statement (empty statements are not supported)")),
            _ => {
                let e = self.expr()?;
                self.expect(";")?;
                Ok(e)
            }
        }
    }

    fn directive(&mut self) -> PResult<usize> {
        let tok = self.bump();
        let directive = Directive::parse(&tok.text).map_err(|e| FrontendError::Parse {
            expected: "well-formed OpenMP directive".into(),
            found: e.reason,
            line: tok.line,
            column: tok.column,
        })?;
        if !(self.peek_is("for") || self.peek_is("{")) {
            return Err(self.error("`for` loop or compound statement after OpenMP directive"));
        }
        let child = self.statement()?;
        let id = self.node(NodeKind::OmpDirective, vec![child], (tok.line, tok.column));
        self.arena[id].directive = Some(directive);
        Ok(id)
    }

    fn for_stmt(&mut self) -> PResult<usize> {
        let kw = self.bump();
        self.expect("(")?;
        self.scopes.push(HashMap::new());
        let r = (|| {
            if self.peek_is(";") {
                return Err(self.error("for-loop initializer"));
            }
            let init = if self.at_type() {
                let t = self.peek().unwrap();
                let pos = (t.line, t.column);
                self.type_spec()?;
                let decls = self.declarators_after_type(None)?;
                self.node(NodeKind::DeclStmt, decls, pos)
            } else {
                self.expr()?
            };
            self.expect(";")?;
            if self.peek_is(";") {
                return Err(self.error("for-loop condition"));
            }
            let c = self.expr()?;
            let cond = self.rvalue(c);
            self.expect(";")?;
            if self.peek_is(")") {
                return Err(self.error("for-loop increment"));
            }
            let inc = self.expr()?;
            self.expect(")")?;
            let body = self.statement()?;
            Ok(self.node(NodeKind::ForStmt, vec![init, cond, body, inc], (kw.line, kw.column)))
        })();
        self.scopes.pop();
        r
    }

    fn while_stmt(&mut self) -> PResult<usize> {
        let kw = self.bump();
        self.expect("(")?;
        let c = self.expr()?;
        let cond = self.rvalue(c);
        self.expect(")")?;
        let body = self.statement()?;
        Ok(self.node(NodeKind::WhileStmt, vec![cond, body], (kw.line, kw.column)))
    }

    fn if_stmt(&mut self) -> PResult<usize> {
        let kw = self.bump();
        self.expect("(")?;
        let c = self.expr()?;
        let cond = self.rvalue(c);
        self.expect(")")?;
        let then = self.statement()?;
        let mut children = vec![cond, then];
        if self.eat("else") {
            children.push(self.statement()?);
        }
        Ok(self.node(NodeKind::IfStmt, children, (kw.line, kw.column)))
    }

    // ---- expressions --------------------------------------------------

    /// Wraps variable and element accesses in an lvalue-to-rvalue cast.
    fn rvalue(&mut self, id: usize) -> usize {
        match self.arena[id].kind {
            NodeKind::DeclRefExpr | NodeKind::ArraySubscriptExpr => {
                let pos = self.arena[id].pos;
                self.node(NodeKind::ImplicitCastExpr, vec![id], pos)
            }
            _ => id,
        }
    }

    fn expr(&mut self) -> PResult<usize> {
        if self.peek().is_some_and(|t| t.kind == TokenKind::PragmaLine) {
            return Err(self.error("expression"));
        }
        let e = self.assignment()?;
        if self.peek_is(",") {
            return Err(self.error("`;` (comma expressions are not supported)"));
        }
        Ok(e)
    }

    fn assignment(&mut self) -> PResult<usize> {
        let start = self.here();
        let lhs = self.logical_or()?;
        const OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%="];
        if let Some(op) = OPS.iter().find(|op| self.peek_is(op)) {
            if !matches!(self.arena[lhs].kind, NodeKind::DeclRefExpr | NodeKind::ArraySubscriptExpr) {
                let (line, column) = start;
                return Err(FrontendError::Parse {
                    expected: "assignable expression".into(),
                    found: format!("{} on the left of `{op}`", self.arena[lhs].kind),
                    line,
                    column,
                });
            }
            self.bump();
            let rhs = self.assignment()?;
            let l = self.rvalue(lhs);
            let r = self.rvalue(rhs);
            return Ok(self.labeled(NodeKind::BinaryOperator, vec![l, r], op, start));
        }
        Ok(lhs)
    }

    fn binary_level(&mut self, ops: &[&str], next: fn(&mut Self) -> PResult<usize>) -> PResult<usize> {
        let start = self.here();
        let mut lhs = next(self)?;
        while let Some(op) = ops.iter().find(|op| self.peek_is(op)) {
            self.bump();
            let rhs = next(self)?;
            let l = self.rvalue(lhs);
            let r = self.rvalue(rhs);
            lhs = self.labeled(NodeKind::BinaryOperator, vec![l, r], op, start);
        }
        Ok(lhs)
    }

    fn logical_or(&mut self) -> PResult<usize> {
        self.binary_level(&["||"], Self::logical_and)
    }

    fn logical_and(&mut self) -> PResult<usize> {
        self.binary_level(&["&&"], Self::equality)
    }

    fn equality(&mut self) -> PResult<usize> {
        self.binary_level(&["==", "!="], Self::relational)
    }

    fn relational(&mut self) -> PResult<usize> {
        self.binary_level(&["<=", ">=", "<", ">"], Self::additive)
    }

    fn additive(&mut self) -> PResult<usize> {
        self.binary_level(&["+", "-"], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> PResult<usize> {
        self.binary_level(&["*", "/", "%"], Self::unary)
    }

    fn unary(&mut self) -> PResult<usize> {
        let start = self.here();
        for (tok, label, needs_lvalue) in
            [("++", "pre++", true), ("--", "pre--", true), ("-", "-", false), ("+", "+", false), ("!", "!", false)]
        {
            if self.peek_is(tok) {
                self.bump();
                let operand = self.unary()?;
                if needs_lvalue
                    && !matches!(self.arena[operand].kind, NodeKind::DeclRefExpr | NodeKind::ArraySubscriptExpr)
                {
                    return Err(self.error("assignable operand for prefix increment"));
                }
                let o = self.rvalue(operand);
                return Ok(self.labeled(NodeKind::UnaryOperator, vec![o], label, start));
            }
        }
        if self.peek_is("&") || self.peek_is("*") {
            return Err(self.error("expression (pointer operators are not supported)"));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<usize> {
        let start = self.here();
        let mut e = self.primary()?;
        loop {
            if self.eat("[") {
                if !matches!(self.arena[e].kind, NodeKind::DeclRefExpr | NodeKind::ArraySubscriptExpr) {
                    return Err(self.error("subscriptable expression"));
                }
                let idx = self.expr()?;
                let i = self.rvalue(idx);
                self.expect("]")?;
                e = self.node(NodeKind::ArraySubscriptExpr, vec![e, i], start);
            } else if self.peek_is("++") || self.peek_is("--") {
                if !matches!(self.arena[e].kind, NodeKind::DeclRefExpr | NodeKind::ArraySubscriptExpr) {
                    return Err(self.error("assignable operand for postfix increment"));
                }
                let op = self.bump().text.clone();
                let o = self.rvalue(e);
                e = self.labeled(NodeKind::UnaryOperator, vec![o], &op, start);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<usize> {
        let Some(t) = self.peek() else { return Err(self.error("expression")) };
        let pos = (t.line, t.column);
        match t.kind {
            TokenKind::IntegerLiteral | TokenKind::FloatLiteral => {
                self.bump();
                let kind =
                    if t.kind == TokenKind::IntegerLiteral { NodeKind::IntegerLiteral } else { NodeKind::FloatingLiteral };
                let id = self.node(kind, vec![], pos);
                self.arena[id].text = t.text.clone();
                Ok(id)
            }
            TokenKind::Identifier => {
                self.bump();
                if self.peek_is("(") {
                    return self.call(t);
                }
                let decl = self.lookup(&t.text).ok_or_else(|| FrontendError::UnresolvedRef {
                    name: t.text.clone(),
                    line: t.line,
                    column: t.column,
                })?;
                let id = self.node(NodeKind::DeclRefExpr, vec![], pos);
                self.arena[id].text = t.text.clone();
                self.arena[id].decl_ref = Some(decl);
                Ok(id)
            }
            TokenKind::Punctuator if t.text == "(" => {
                self.bump();
                if self.at_type() {
                    return Err(self.error("expression (casts are not supported)"));
                }
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => Err(self.error("expression")),
        }
    }

    fn call(&mut self, name: &'t Token) -> PResult<usize> {
        if self.lookup(&name.text).is_some() {
            return Err(FrontendError::Parse {
                expected: "function name".into(),
                found: format!("variable `{}` used as a function", name.text),
                line: name.line,
                column: name.column,
            });
        }
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.peek_is(")") {
            loop {
                let a = self.assignment()?;
                args.push(self.rvalue(a));
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(self.labeled(NodeKind::CallExpr, args, &name.text, (name.line, name.column)))
    }

    // ---- finalization -------------------------------------------------

    /// Renumbers the arena in pre-order from `root`, dropping unreachable
    /// scratch nodes, and derives the source-ordered terminal list.
    fn finish(self, root: usize) -> Ast {
        let mut order = Vec::with_capacity(self.arena.len());
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            order.push(n);
            stack.extend(self.arena[n].children.iter().rev());
        }
        let mut new_id = vec![usize::MAX; self.arena.len()];
        for (i, &old) in order.iter().enumerate() {
            new_id[old] = i;
        }
        let mut arena: Vec<Option<RawNode>> = self.arena.into_iter().map(Some).collect();
        let mut nodes = Vec::with_capacity(order.len());
        let mut terminals = Vec::new();
        for (i, &old) in order.iter().enumerate() {
            let raw = arena[old].take().expect("each node is visited once");
            if raw.children.is_empty() {
                terminals.push((raw.pos, i));
            }
            let mut token_text = raw.text;
            if raw.children.is_empty() && token_text.is_empty() {
                if let Some(l) = &raw.label {
                    if raw.kind != NodeKind::UnaryOperator && raw.kind != NodeKind::BinaryOperator {
                        token_text = l.clone();
                    }
                }
            }
            nodes.push(AstNode {
                id: i,
                kind: raw.kind,
                children: raw.children.iter().map(|&c| new_id[c]).collect(),
                token_text,
                label: raw.label,
                decl_ref: raw.decl_ref.map(|d| new_id[d]),
                directive: raw.directive,
            });
        }
        terminals.sort();
        Ast { nodes, root: 0, tokens: terminals.into_iter().map(|(_, id)| id).collect() }
    }
}

/// Convenience front door: tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<Ast, FrontendError> {
    let tokens = super::lexer::tokenize(source)?;
    parse(&tokens)
}
