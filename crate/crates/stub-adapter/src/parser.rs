//! Recursive-descent parser over the token stream.

use std::rc::Rc;

use crate::ast::*;
use crate::lexer::{tokenize, FPart, Tok, Token};
use crate::SyntaxError;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif",
    "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal", "not", "or",
    "pass", "raise", "return", "try", "while", "with", "yield",
];

pub fn parse_module(src: &str) -> Result<Vec<Stmt>, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut body = Vec::new();
    while !p.at(&Tok::Eof) {
        if p.eat(&Tok::Newline) {
            continue;
        }
        body.extend(p.statement()?);
    }
    Ok(body)
}

pub fn parse_expression(src: &str, line: u32) -> Result<Expr, SyntaxError> {
    let toks = tokenize(src).map_err(|e| SyntaxError { line, message: e.message })?;
    let toks = toks
        .into_iter()
        .map(|t| Token { line, ..t })
        .filter(|t| !matches!(t.tok, Tok::Newline | Tok::Indent | Tok::Dedent))
        .collect();
    let mut p = Parser { toks, pos: 0 };
    let e = p.test_list()?;
    if !p.at(&Tok::Eof) {
        return Err(p.error("invalid syntax"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn line(&self) -> u32 {
        self.toks[self.pos.min(self.toks.len() - 1)].line
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, message: &str) -> SyntaxError {
        let message = match self.peek() {
            Tok::Indent => "unexpected indent".to_string(),
            _ => message.to_string(),
        };
        SyntaxError {
            line: self.line(),
            message,
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), SyntaxError> {
        if self.eat_op(op) {
            Ok(())
        } else if op == ":" {
            // Report missing colons on the header line, as Python does.
            let line = self.toks[self.pos.saturating_sub(1)].line;
            Err(SyntaxError {
                line,
                message: "expected ':'".into(),
            })
        } else {
            Err(self.error(&format!("expected '{op}'")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{kw}'")))
        }
    }

    fn ident(&mut self) -> Result<Rc<str>, SyntaxError> {
        match self.peek().clone() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                self.pos += 1;
                Ok(n.into())
            }
            _ => Err(self.error("invalid syntax")),
        }
    }

    fn end_of_simple(&mut self) -> Result<(), SyntaxError> {
        if self.eat(&Tok::Newline) || self.at(&Tok::Eof) {
            Ok(())
        } else {
            Err(self.error("invalid syntax"))
        }
    }

    fn statement(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        let line = self.line();
        let kind = match self.peek() {
            Tok::Name(n) => match n.as_str() {
                "if" => self.if_stmt()?,
                "while" => {
                    self.pos += 1;
                    let test = self.test()?;
                    let body = self.block()?;
                    let orelse = self.else_block()?;
                    StmtKind::While(test, body, orelse)
                }
                "for" => {
                    self.pos += 1;
                    let target = self.target_list()?;
                    self.expect_kw("in")?;
                    let iter = self.test_list()?;
                    let body = self.block()?;
                    let orelse = self.else_block()?;
                    StmtKind::For(target, iter, body, orelse)
                }
                "def" => {
                    self.pos += 1;
                    let name = self.ident()?;
                    self.expect_op("(")?;
                    let params = self.params(")")?;
                    self.expect_op(")")?;
                    if self.eat_op("->") {
                        self.test()?;
                    }
                    let body = self.block()?;
                    StmtKind::Def(Rc::new(FuncDef { name, params, body, line }))
                }
                "try" => self.try_stmt()?,
                "class" | "with" | "async" | "yield" | "nonlocal" => {
                    return Err(self.error(&format!("'{n}' is not supported")))
                }
                "elif" | "else" | "except" | "finally" => return Err(self.error("invalid syntax")),
                _ => return self.simple_stmts(),
            },
            Tok::Op("@") => return Err(self.error("decorators are not supported")),
            _ => return self.simple_stmts(),
        };
        Ok(vec![Stmt { line, kind }])
    }

    fn if_stmt(&mut self) -> Result<StmtKind, SyntaxError> {
        let mut branches = Vec::new();
        let line = self.line();
        self.pos += 1;
        let test = self.test()?;
        branches.push((line, test, self.block()?));
        loop {
            let line = self.line();
            if self.eat_kw("elif") {
                let test = self.test()?;
                branches.push((line, test, self.block()?));
            } else {
                break;
            }
        }
        Ok(StmtKind::If(branches, self.else_block()?))
    }

    fn else_block(&mut self) -> Result<Option<Vec<Stmt>>, SyntaxError> {
        if self.eat_kw("else") {
            Ok(Some(self.block()?))
        } else {
            Ok(None)
        }
    }

    fn try_stmt(&mut self) -> Result<StmtKind, SyntaxError> {
        self.pos += 1;
        let body = self.block()?;
        let mut handlers = Vec::new();
        loop {
            let line = self.line();
            if !self.eat_kw("except") {
                break;
            }
            let mut kinds = Vec::new();
            let mut name = None;
            if !self.at_op(":") {
                if self.eat_op("(") {
                    loop {
                        kinds.push(self.ident()?);
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    self.expect_op(")")?;
                } else {
                    kinds.push(self.ident()?);
                }
                if self.eat_kw("as") {
                    name = Some(self.ident()?);
                }
            }
            let body = self.block()?;
            handlers.push(Handler { line, kinds, name, body });
        }
        let orelse = if handlers.is_empty() { None } else { self.else_block()? };
        let finally = if self.eat_kw("finally") { Some(self.block()?) } else { None };
        if handlers.is_empty() && finally.is_none() {
            return Err(self.error("expected 'except' or 'finally' block"));
        }
        Ok(StmtKind::Try(body, handlers, orelse, finally))
    }

    fn block(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        self.expect_op(":")?;
        if !self.eat(&Tok::Newline) {
            return self.simple_stmts();
        }
        if !self.eat(&Tok::Indent) {
            return Err(SyntaxError {
                line: self.line(),
                message: "expected an indented block".into(),
            });
        }
        let mut body = Vec::new();
        while !self.eat(&Tok::Dedent) {
            if self.at(&Tok::Eof) {
                break;
            }
            if self.eat(&Tok::Newline) {
                continue;
            }
            body.extend(self.statement()?);
        }
        Ok(body)
    }

    fn simple_stmts(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        let mut out = vec![self.small_stmt()?];
        while self.eat_op(";") {
            if self.at(&Tok::Newline) || self.at(&Tok::Eof) {
                break;
            }
            out.push(self.small_stmt()?);
        }
        self.end_of_simple()?;
        Ok(out)
    }

    fn dotted_name(&mut self) -> Result<Rc<str>, SyntaxError> {
        let mut name = self.ident()?.to_string();
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name.into())
    }

    fn small_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let line = self.line();
        let kind = if self.eat_kw("pass") {
            StmtKind::Pass
        } else if self.eat_kw("break") {
            StmtKind::Break
        } else if self.eat_kw("continue") {
            StmtKind::Continue
        } else if self.eat_kw("return") {
            if self.at(&Tok::Newline) || self.at(&Tok::Eof) || self.at_op(";") {
                StmtKind::Return(None)
            } else {
                StmtKind::Return(Some(self.test_list()?))
            }
        } else if self.eat_kw("raise") {
            if self.at(&Tok::Newline) || self.at(&Tok::Eof) {
                StmtKind::Raise(None)
            } else {
                StmtKind::Raise(Some(self.test()?))
            }
        } else if self.eat_kw("assert") {
            let test = self.test()?;
            let msg = if self.eat_op(",") { Some(self.test()?) } else { None };
            StmtKind::Assert(test, msg)
        } else if self.eat_kw("import") {
            let mut names = Vec::new();
            loop {
                let name = self.dotted_name()?;
                let alias = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                names.push((name, alias));
                if !self.eat_op(",") {
                    break;
                }
            }
            StmtKind::Import(names)
        } else if self.eat_kw("from") {
            let module = self.dotted_name()?;
            self.expect_kw("import")?;
            if self.eat_op("*") {
                StmtKind::FromImport(module, None)
            } else {
                let paren = self.eat_op("(");
                let mut names = Vec::new();
                loop {
                    let name = self.ident()?;
                    let alias = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                    names.push((name, alias));
                    if !self.eat_op(",") || (paren && self.at_op(")")) {
                        break;
                    }
                }
                if paren {
                    self.expect_op(")")?;
                }
                StmtKind::FromImport(module, Some(names))
            }
        } else if self.eat_kw("global") {
            let mut names = vec![self.ident()?];
            while self.eat_op(",") {
                names.push(self.ident()?);
            }
            StmtKind::Global(names)
        } else if self.eat_kw("del") {
            let mut targets = vec![self.expr()?];
            while self.eat_op(",") {
                targets.push(self.expr()?);
            }
            StmtKind::Del(targets)
        } else {
            self.expr_stmt()?
        };
        Ok(Stmt { line, kind })
    }

    fn expr_stmt(&mut self) -> Result<StmtKind, SyntaxError> {
        let first = self.test_list_star()?;
        let aug = match self.peek() {
            Tok::Op("+=") => Some(BinOp::Add),
            Tok::Op("-=") => Some(BinOp::Sub),
            Tok::Op("*=") => Some(BinOp::Mul),
            Tok::Op("/=") => Some(BinOp::Div),
            Tok::Op("//=") => Some(BinOp::FloorDiv),
            Tok::Op("%=") => Some(BinOp::Mod),
            Tok::Op("**=") => Some(BinOp::Pow),
            _ => None,
        };
        if let Some(op) = aug {
            check_target(&first, self.line(), false)?;
            self.pos += 1;
            let value = self.test_list()?;
            return Ok(StmtKind::AugAssign(first, op, value));
        }
        if self.at_op(":") {
            // Annotated assignment: `x: int = 0`.
            self.pos += 1;
            self.test()?;
            if self.eat_op("=") {
                check_target(&first, self.line(), true)?;
                let value = self.test_list()?;
                return Ok(StmtKind::Assign(vec![first], value));
            }
            return Ok(StmtKind::Pass);
        }
        if !self.at_op("=") {
            return Ok(StmtKind::Expr(first));
        }
        let mut targets = vec![first];
        while self.eat_op("=") {
            targets.push(self.test_list_star()?);
        }
        let value = targets.pop().unwrap();
        for t in &targets {
            check_target(t, self.line(), true)?;
        }
        Ok(StmtKind::Assign(targets, value))
    }

    fn params(&mut self, close: &str) -> Result<Vec<Param>, SyntaxError> {
        let mut params: Vec<Param> = Vec::new();
        while !self.at_op(close) {
            if self.at_op("*") || self.at_op("**") {
                return Err(self.error("variadic parameters are not supported"));
            }
            let name = self.ident()?;
            if self.at_op(":") && close == ")" {
                self.pos += 1;
                self.test()?;
            }
            let default = if self.eat_op("=") { Some(self.test()?) } else { None };
            if default.is_none() && params.iter().any(|p| p.default.is_some()) {
                return Err(self.error("non-default argument follows default argument"));
            }
            if params.iter().any(|p| p.name == name) {
                return Err(self.error(&format!("duplicate argument '{name}' in function definition")));
            }
            params.push(Param { name, default });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn target_list(&mut self) -> Result<Expr, SyntaxError> {
        let line = self.line();
        let first = self.expr()?;
        let target = if self.at_op(",") {
            let mut items = vec![first];
            while self.eat_op(",") {
                if self.at_kw("in") || self.at_op("=") {
                    break;
                }
                items.push(self.expr()?);
            }
            Expr::Tuple(items)
        } else {
            first
        };
        check_target(&target, line, true)?;
        Ok(target)
    }

    fn test_list_star(&mut self) -> Result<Expr, SyntaxError> {
        self.test_list()
    }

    /// `a, b, c` as a tuple, or a single expression.
    fn test_list(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.test()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.starts_expr() {
                items.push(self.test()?);
            } else {
                break;
            }
        }
        Ok(Expr::Tuple(items))
    }

    fn starts_expr(&self) -> bool {
        match self.peek() {
            Tok::Name(n) => !KEYWORDS.contains(&n.as_str()) || matches!(n.as_str(), "None" | "True" | "False" | "not" | "lambda"),
            Tok::Int(_) | Tok::Float(_) | Tok::Str(_) | Tok::FStr(_) => true,
            Tok::Op(o) => matches!(*o, "(" | "[" | "{" | "-" | "+" | "~"),
            _ => false,
        }
    }

    pub fn test(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_kw("lambda") {
            let line = self.line();
            let params = self.params(":")?;
            self.expect_op(":")?;
            let body = self.test()?;
            return Ok(Expr::Lambda(Rc::new(FuncDef {
                name: "<lambda>".into(),
                params,
                body: vec![Stmt {
                    line,
                    kind: StmtKind::Return(Some(body)),
                }],
                line,
            })));
        }
        let e = self.or_test()?;
        if self.at_kw("if") && !self.in_comp_clause() {
            self.pos += 1;
            let cond = self.or_test()?;
            self.expect_kw("else")?;
            let other = self.test()?;
            return Ok(Expr::IfExp(Box::new(cond), Box::new(e), Box::new(other)));
        }
        Ok(e)
    }

    /// `x if c else y` vs. a comprehension's `if` filter: the filter has no
    /// `else` before the closing bracket.
    fn in_comp_clause(&self) -> bool {
        let mut depth = 0i32;
        let mut i = self.pos + 1;
        while i < self.toks.len() {
            match &self.toks[i].tok {
                Tok::Op("(" | "[" | "{") => depth += 1,
                Tok::Op(")" | "]" | "}") => {
                    if depth == 0 {
                        return true;
                    }
                    depth -= 1;
                }
                Tok::Name(n) if depth == 0 && n == "else" => return false,
                Tok::Name(n) if depth == 0 && n == "for" => return true,
                Tok::Newline | Tok::Eof => return false,
                _ => {}
            }
            i += 1;
        }
        false
    }

    fn or_test(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.and_test()?;
        while self.eat_kw("or") {
            let r = self.and_test()?;
            e = Expr::Or(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_test(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.not_test()?;
        while self.eat_kw("and") {
            let r = self.not_test()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn not_test(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not_test()?)));
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                self.pos += 2;
                return Some(CmpOp::NotIn);
            }
            Tok::Name(n) if n == "is" => {
                if matches!(self.peek_at(1), Tok::Name(m) if m == "not") {
                    self.pos += 2;
                    return Some(CmpOp::IsNot);
                }
                CmpOp::Is
            }
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.expr()?;
        let mut rest = Vec::new();
        while let Some(op) = self.comp_op() {
            rest.push((op, self.expr()?));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr::Compare(Box::new(first), rest))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.xor_expr()?;
        while self.eat_op("|") {
            let r = self.xor_expr()?;
            e = Expr::Bin(BinOp::BitOr, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn xor_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.and_expr()?;
        while self.eat_op("^") {
            let r = self.and_expr()?;
            e = Expr::Bin(BinOp::BitXor, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.arith()?;
        while self.eat_op("&") {
            let r = self.arith()?;
            e = Expr::Bin(BinOp::BitAnd, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn arith(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.term()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            let r = self.term()?;
            e = Expr::Bin(op, Box::new(e), Box::new(r));
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                Tok::Op("//") => BinOp::FloorDiv,
                Tok::Op("%") => BinOp::Mod,
                _ => return Ok(e),
            };
            self.pos += 1;
            let r = self.factor()?;
            e = Expr::Bin(op, Box::new(e), Box::new(r));
        }
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_op("-") {
            return Ok(match self.factor()? {
                Expr::Lit(Lit::Int(i)) => Expr::Lit(Lit::Int(-i)),
                Expr::Lit(Lit::Float(f)) => Expr::Lit(Lit::Float(-f)),
                e => Expr::Neg(Box::new(e)),
            });
        }
        if self.eat_op("+") {
            return Ok(Expr::Pos(Box::new(self.factor()?)));
        }
        if self.eat_op("~") {
            return Ok(Expr::Invert(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.atom_expr()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op("(") {
                let (args, kwargs) = self.call_args()?;
                self.expect_op(")")?;
                e = Expr::Call(Box::new(e), args, kwargs);
            } else if self.eat_op("[") {
                e = self.subscript(e)?;
                self.expect_op("]")?;
            } else if self.eat_op(".") {
                let name = self.ident()?;
                e = Expr::Attr(Box::new(e), name);
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> Result<(Vec<Expr>, Vec<(Rc<str>, Expr)>), SyntaxError> {
        let mut args = Vec::new();
        let mut kwargs: Vec<(Rc<str>, Expr)> = Vec::new();
        while !self.at_op(")") {
            if self.at_op("*") || self.at_op("**") {
                return Err(self.error("argument unpacking is not supported"));
            }
            if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                let name = self.ident()?;
                self.pos += 1;
                kwargs.push((name, self.test()?));
            } else {
                if !kwargs.is_empty() {
                    return Err(self.error("positional argument follows keyword argument"));
                }
                let e = self.test()?;
                if self.at_kw("for") {
                    let clauses = self.comp_clauses()?;
                    args.push(Expr::Comp {
                        kind: CompKind::Gen,
                        elt: Box::new(e),
                        value: None,
                        clauses,
                    });
                } else {
                    args.push(e);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok((args, kwargs))
    }

    fn subscript(&mut self, target: Expr) -> Result<Expr, SyntaxError> {
        let mut parts: [Option<Box<Expr>>; 3] = [None, None, None];
        if !self.at_op(":") {
            let e = self.test_list()?;
            if !self.at_op(":") {
                return Ok(Expr::Index(Box::new(target), Box::new(e)));
            }
            parts[0] = Some(Box::new(e));
        }
        self.expect_op(":")?;
        if !self.at_op("]") && !self.at_op(":") {
            parts[1] = Some(Box::new(self.test()?));
        }
        if self.eat_op(":") && !self.at_op("]") {
            parts[2] = Some(Box::new(self.test()?));
        }
        Ok(Expr::Slice(Box::new(target), parts))
    }

    fn comp_clauses(&mut self) -> Result<Vec<CompFor>, SyntaxError> {
        let mut clauses = Vec::new();
        while self.eat_kw("for") {
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.or_test()?;
            let mut conds = Vec::new();
            while self.eat_kw("if") {
                conds.push(self.or_test()?);
            }
            clauses.push(CompFor { target, iter, conds });
        }
        Ok(clauses)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let line = self.line();
        let tok = self.peek().clone();
        match tok {
            Tok::Int(i) => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Int(i)))
            }
            Tok::Float(f) => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Float(f)))
            }
            Tok::Str(_) | Tok::FStr(_) => {
                // Adjacent literals concatenate.
                let mut parts: Vec<FStrPart> = Vec::new();
                let mut plain = true;
                while let Tok::Str(_) | Tok::FStr(_) = self.peek() {
                    match self.peek().clone() {
                        Tok::Str(s) => parts.push(FStrPart::Lit(s)),
                        Tok::FStr(fs) => {
                            plain = false;
                            for p in fs {
                                parts.push(match p {
                                    FPart::Lit(s) => FStrPart::Lit(s),
                                    FPart::Expr { source, repr, spec } => FStrPart::Expr {
                                        expr: parse_expression(&source, line)?,
                                        repr,
                                        spec,
                                    },
                                });
                            }
                        }
                        _ => unreachable!(),
                    }
                    self.pos += 1;
                }
                if plain {
                    let s: String = parts
                        .into_iter()
                        .map(|p| match p {
                            FStrPart::Lit(s) => s,
                            FStrPart::Expr { .. } => unreachable!(),
                        })
                        .collect();
                    Ok(Expr::Lit(Lit::Str(s.into())))
                } else {
                    Ok(Expr::FStr(parts))
                }
            }
            Tok::Name(n) => match n.as_str() {
                "None" => {
                    self.pos += 1;
                    Ok(Expr::Lit(Lit::None))
                }
                "True" => {
                    self.pos += 1;
                    Ok(Expr::Lit(Lit::Bool(true)))
                }
                "False" => {
                    self.pos += 1;
                    Ok(Expr::Lit(Lit::Bool(false)))
                }
                _ => Ok(Expr::Name(self.ident()?)),
            },
            Tok::Op("(") => {
                self.pos += 1;
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let first = self.test()?;
                if self.at_kw("for") {
                    let clauses = self.comp_clauses()?;
                    self.expect_op(")")?;
                    return Ok(Expr::Comp {
                        kind: CompKind::Gen,
                        elt: Box::new(first),
                        value: None,
                        clauses,
                    });
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op(")")?;
                Ok(Expr::Tuple(items))
            }
            Tok::Op("[") => {
                self.pos += 1;
                if self.eat_op("]") {
                    return Ok(Expr::List(Vec::new()));
                }
                let first = self.test()?;
                if self.at_kw("for") {
                    let clauses = self.comp_clauses()?;
                    self.expect_op("]")?;
                    return Ok(Expr::Comp {
                        kind: CompKind::List,
                        elt: Box::new(first),
                        value: None,
                        clauses,
                    });
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op("]") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            Tok::Op("{") => {
                self.pos += 1;
                if self.eat_op("}") {
                    return Ok(Expr::Dict(Vec::new()));
                }
                let first = self.test()?;
                if self.eat_op(":") {
                    let value = self.test()?;
                    if self.at_kw("for") {
                        let clauses = self.comp_clauses()?;
                        self.expect_op("}")?;
                        return Ok(Expr::Comp {
                            kind: CompKind::Dict,
                            elt: Box::new(first),
                            value: Some(Box::new(value)),
                            clauses,
                        });
                    }
                    let mut items = vec![(first, value)];
                    while self.eat_op(",") {
                        if self.at_op("}") {
                            break;
                        }
                        let k = self.test()?;
                        self.expect_op(":")?;
                        items.push((k, self.test()?));
                    }
                    self.expect_op("}")?;
                    return Ok(Expr::Dict(items));
                }
                if self.at_kw("for") {
                    let clauses = self.comp_clauses()?;
                    self.expect_op("}")?;
                    return Ok(Expr::Comp {
                        kind: CompKind::Set,
                        elt: Box::new(first),
                        value: None,
                        clauses,
                    });
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op("}") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op("}")?;
                Ok(Expr::Set(items))
            }
            Tok::Newline | Tok::Eof => Err(self.error("invalid syntax")),
            _ => Err(self.error("invalid syntax")),
        }
    }
}

fn check_target(e: &Expr, line: u32, allow_tuple: bool) -> Result<(), SyntaxError> {
    match e {
        Expr::Name(_) | Expr::Index(..) | Expr::Attr(..) | Expr::Slice(..) => Ok(()),
        Expr::Tuple(items) | Expr::List(items) if allow_tuple => {
            items.iter().try_for_each(|i| check_target(i, line, true))
        }
        Expr::Call(..) => Err(SyntaxError {
            line,
            message: "cannot assign to function call".into(),
        }),
        Expr::Lit(_) => Err(SyntaxError {
            line,
            message: "cannot assign to literal".into(),
        }),
        _ => Err(SyntaxError {
            line,
            message: "cannot assign to expression".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_function() {
        let m = parse_module("def f(a, b=2):\n    if a < b:\n        return a\n    elif a == b:\n        return 0\n    return b\n").unwrap();
        let StmtKind::Def(def) = &m[0].kind else { panic!() };
        assert_eq!(def.params.len(), 2);
        let StmtKind::If(branches, None) = &def.body[0].kind else { panic!() };
        assert_eq!(branches.iter().map(|b| b.0).collect::<Vec<_>>(), [2, 4]);
    }

    #[test]
    fn syntax_error_lines() {
        let e = parse_module("def f(a):\n    if a > 0\n        return a\n").unwrap_err();
        assert_eq!((e.line, e.message.as_str()), (2, "expected ':'"));
        let e = parse_module("x = 1\n    y = 2\n").unwrap_err();
        assert_eq!((e.line, e.message.as_str()), (2, "unexpected indent"));
        let e = parse_module("def f():\nreturn 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_module("x = = 2\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_module("f(x) = 2\n").unwrap_err();
        assert_eq!(e.message, "cannot assign to function call");
        let e = parse_module("if x = 2:\n    pass\n").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn comprehension_vs_conditional() {
        let e = parse_expression("[x for x in xs if x > 0]", 1).unwrap();
        assert!(matches!(e, Expr::Comp { kind: CompKind::List, ref clauses, .. } if clauses[0].conds.len() == 1));
        let e = parse_expression("[a if c else b for a in xs]", 1).unwrap();
        assert!(matches!(e, Expr::Comp { ref elt, .. } if matches!(**elt, Expr::IfExp(..))));
    }

    #[test]
    fn chained_comparison_and_slices() {
        let e = parse_expression("0 <= i < n", 1).unwrap();
        assert!(matches!(e, Expr::Compare(_, ref rest) if rest.len() == 2));
        assert!(matches!(parse_expression("a[1:]", 1).unwrap(), Expr::Slice(..)));
        assert!(matches!(parse_expression("a[::-1]", 1).unwrap(), Expr::Slice(..)));
        assert!(matches!(parse_expression("a[i]", 1).unwrap(), Expr::Index(..)));
    }
}
