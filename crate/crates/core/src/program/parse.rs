use std::collections::HashMap;

use thiserror::Error;

use super::{
    Action, BinOp, Edge, Expr, FuncId, Function, Program, Scope, Type, UnOp, VarId, VarInfo,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: name error: {msg}")]
    Name { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: type error: {msg}")]
    Type { line: usize, col: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line: pos.line, col: pos.col, msg: msg.into() }
}

fn name_err(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Name { line: pos.line, col: pos.col, msg: msg.into() }
}

fn type_err(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Type { line: pos.line, col: pos.col, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

const PUNCTS: [&str; 25] = [
    "->", ":=", "==", "!=", "<=", ">=", "&&", "||", ":", ";", ",", "(", ")", "[", "]", "{", "}",
    "+", "-", "*", "/", "%", "<", ">", "!",
];

const KEYWORDS: [&str; 13] = [
    "fn", "global", "entry", "exit", "locals", "start", "ret", "skip", "true", "false", "int",
    "bool", "enter",
];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            toks.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<i64>()
                .map_err(|_| syntax(pos, format!("integer literal `{text}` out of range")))?;
            toks.push((Tok::Int(v), pos));
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                toks.push((Tok::Punct(p), pos));
            }
            None => return Err(syntax(pos, format!("unexpected character `{c}`"))),
        }
    }
    toks.push((Tok::Eof, Pos { line, col }));
    Ok(toks)
}

type Name = (String, Pos);

#[derive(Debug)]
struct AstDecl {
    name: Name,
    ty: Type,
}

#[derive(Debug)]
enum AstExpr {
    Int(i64),
    Bool(bool),
    Var(Name),
    Index(Name, Box<AstExpr>),
    Unary(UnOp, Box<AstExpr>, Pos),
    Binary(BinOp, Box<AstExpr>, Box<AstExpr>, Pos),
}

#[derive(Debug)]
enum AstAction {
    Assign(Name, AstExpr),
    Call { dest: Option<Name>, callee: Name, args: Vec<AstExpr> },
    Ret(AstExpr, Pos),
    Skip,
    Guard(AstExpr, Pos),
    Enter { callee: Name, args: Vec<AstExpr> },
}

#[derive(Debug)]
struct AstEdge {
    src: Name,
    dst: Name,
    action: AstAction,
}

#[derive(Debug)]
struct AstFunction {
    name: Name,
    params: Vec<AstDecl>,
    ret: Type,
    start: bool,
    entry: Name,
    exit: Name,
    locals: Vec<AstDecl>,
    edges: Vec<AstEdge>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<Pos, ParseError> {
        if self.is_punct(p) {
            Ok(self.bump().1)
        } else {
            Err(syntax(
                self.pos(),
                format!("expected `{p}`, found {}", Self::describe(self.peek())),
            ))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<Pos, ParseError> {
        if self.is_kw(k) {
            Ok(self.bump().1)
        } else {
            Err(syntax(
                self.pos(),
                format!("expected `{k}`, found {}", Self::describe(self.peek())),
            ))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok((s, pos))
            }
            t => Err(syntax(pos, format!("expected identifier, found {}", Self::describe(&t)))),
        }
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        if self.is_kw("bool") {
            self.bump();
            return Ok(Type::Bool);
        }
        self.expect_kw("int")?;
        if self.is_punct("[") {
            self.bump();
            self.expect_punct("]")?;
            return Ok(Type::IntArray);
        }
        Ok(Type::Int)
    }

    fn decl(&mut self) -> Result<AstDecl, ParseError> {
        let name = self.ident()?;
        self.expect_punct(":")?;
        let ty = self.ty()?;
        Ok(AstDecl { name, ty })
    }

    fn decl_list(&mut self, close: &str) -> Result<Vec<AstDecl>, ParseError> {
        let mut out = Vec::new();
        if self.is_punct(close) {
            return Ok(out);
        }
        loop {
            out.push(self.decl()?);
            if !self.is_punct(",") {
                return Ok(out);
            }
            self.bump();
        }
    }

    fn program(&mut self) -> Result<(Vec<AstDecl>, Vec<AstFunction>), ParseError> {
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        loop {
            if matches!(self.peek(), Tok::Eof) {
                return Ok((globals, functions));
            }
            if self.is_kw("global") {
                self.bump();
                globals.push(self.decl()?);
                self.expect_punct(";")?;
            } else if self.is_kw("fn") {
                functions.push(self.function()?);
            } else {
                return Err(syntax(
                    self.pos(),
                    format!("expected `global` or `fn`, found {}", Self::describe(self.peek())),
                ));
            }
        }
    }

    fn function(&mut self) -> Result<AstFunction, ParseError> {
        self.expect_kw("fn")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let params = self.decl_list(")")?;
        self.expect_punct(")")?;
        self.expect_punct("->")?;
        let ret = self.ty()?;
        let start = if self.is_kw("start") {
            self.bump();
            true
        } else {
            false
        };
        self.expect_punct("{")?;
        self.expect_kw("entry")?;
        let entry = self.ident()?;
        self.expect_punct(";")?;
        self.expect_kw("exit")?;
        let exit = self.ident()?;
        self.expect_punct(";")?;
        let mut locals = Vec::new();
        if self.is_kw("locals") {
            self.bump();
            locals = self.decl_list(";")?;
            self.expect_punct(";")?;
        }
        let mut edges = Vec::new();
        while !self.is_punct("}") {
            let src = self.ident()?;
            self.expect_punct("->")?;
            let dst = self.ident()?;
            self.expect_punct(":")?;
            let action = self.action()?;
            self.expect_punct(";")?;
            edges.push(AstEdge { src, dst, action });
        }
        self.expect_punct("}")?;
        Ok(AstFunction { name, params, ret, start, entry, exit, locals, edges })
    }

    fn args(&mut self) -> Result<Vec<AstExpr>, ParseError> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.is_punct(")") {
            loop {
                out.push(self.expr()?);
                if !self.is_punct(",") {
                    break;
                }
                self.bump();
            }
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    fn action(&mut self) -> Result<AstAction, ParseError> {
        let pos = self.pos();
        if self.is_kw("skip") {
            self.bump();
            return Ok(AstAction::Skip);
        }
        if self.is_kw("ret") {
            self.bump();
            return Ok(AstAction::Ret(self.expr()?, pos));
        }
        if self.is_kw("enter") {
            self.bump();
            let callee = self.ident()?;
            let args = self.args()?;
            return Ok(AstAction::Enter { callee, args });
        }
        let ident_next = matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()));
        if ident_next && matches!(self.peek_at(1), Tok::Punct(":=")) {
            let dest = self.ident()?;
            self.bump();
            let call_next = matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
                && matches!(self.peek_at(1), Tok::Punct("("));
            if call_next {
                let callee = self.ident()?;
                let args = self.args()?;
                return Ok(AstAction::Call { dest: Some(dest), callee, args });
            }
            return Ok(AstAction::Assign(dest, self.expr()?));
        }
        if ident_next && matches!(self.peek_at(1), Tok::Punct("(")) {
            let callee = self.ident()?;
            let args = self.args()?;
            return Ok(AstAction::Call { dest: None, callee, args });
        }
        Ok(AstAction::Guard(self.expr()?, pos))
    }

    fn expr(&mut self) -> Result<AstExpr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.is_punct("||") {
            let pos = self.bump().1;
            let rhs = self.and_expr()?;
            lhs = AstExpr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<AstExpr, ParseError> {
        let mut lhs = self.cmp_expr()?;
        while self.is_punct("&&") {
            let pos = self.bump().1;
            let rhs = self.cmp_expr()?;
            lhs = AstExpr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<AstExpr, ParseError> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        let pos = self.bump().1;
        let rhs = self.add_expr()?;
        Ok(AstExpr::Binary(op, Box::new(lhs), Box::new(rhs), pos))
    }

    fn add_expr(&mut self) -> Result<AstExpr, ParseError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.bump().1;
            let rhs = self.mul_expr()?;
            lhs = AstExpr::Binary(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn mul_expr(&mut self) -> Result<AstExpr, ParseError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => BinOp::Mul,
                Tok::Punct("/") => BinOp::Div,
                Tok::Punct("%") => BinOp::Mod,
                _ => return Ok(lhs),
            };
            let pos = self.bump().1;
            let rhs = self.unary_expr()?;
            lhs = AstExpr::Binary(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn unary_expr(&mut self) -> Result<AstExpr, ParseError> {
        let op = match self.peek() {
            Tok::Punct("-") => UnOp::Neg,
            Tok::Punct("!") => UnOp::Not,
            _ => return self.primary(),
        };
        let pos = self.bump().1;
        Ok(AstExpr::Unary(op, Box::new(self.unary_expr()?), pos))
    }

    fn primary(&mut self) -> Result<AstExpr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(AstExpr::Int(v))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(AstExpr::Bool(s == "true"))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_punct("[") {
                    self.bump();
                    let idx = self.expr()?;
                    self.expect_punct("]")?;
                    return Ok(AstExpr::Index(name, Box::new(idx)));
                }
                Ok(AstExpr::Var(name))
            }
            t => Err(syntax(pos, format!("expected expression, found {}", Self::describe(&t)))),
        }
    }
}

/// Parses, resolves names and type-checks a program. Structural
/// well-formedness is checked separately by `validate_program`.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut parser = Parser { toks: lex(src)?, at: 0 };
    let (globals, functions) = parser.program()?;
    Resolver::default().resolve(globals, functions)
}

#[derive(Default)]
struct Resolver {
    vars: Vec<VarInfo>,
    by_name: HashMap<String, VarId>,
    funcs: HashMap<String, FuncId>,
}

impl Resolver {
    fn declare(&mut self, name: &Name, ty: Type, scope: Scope) -> Result<VarId, ParseError> {
        if self.by_name.contains_key(&name.0) || self.funcs.contains_key(&name.0) {
            return Err(name_err(name.1, format!("`{}` is declared more than once", name.0)));
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarInfo { name: name.0.clone(), ty, scope });
        self.by_name.insert(name.0.clone(), id);
        Ok(id)
    }

    fn resolve(
        mut self,
        globals: Vec<AstDecl>,
        functions: Vec<AstFunction>,
    ) -> Result<Program, ParseError> {
        for (i, f) in functions.iter().enumerate() {
            if self.funcs.insert(f.name.0.clone(), FuncId(i as u32)).is_some() {
                return Err(name_err(f.name.1, format!("function `{}` declared twice", f.name.0)));
            }
        }
        let mut global_ids = Vec::new();
        for g in &globals {
            global_ids.push(self.declare(&g.name, g.ty, Scope::Global)?);
        }
        let mut frames = Vec::new();
        for (i, f) in functions.iter().enumerate() {
            let fid = FuncId(i as u32);
            let params = f
                .params
                .iter()
                .map(|d| self.declare(&d.name, d.ty, Scope::Param(fid)))
                .collect::<Result<Vec<_>, _>>()?;
            let locals = f
                .locals
                .iter()
                .map(|d| self.declare(&d.name, d.ty, Scope::Local(fid)))
                .collect::<Result<Vec<_>, _>>()?;
            frames.push((params, locals));
        }
        let mut ret_vars = Vec::new();
        for (i, f) in functions.iter().enumerate() {
            let name = (format!("ret_{}", f.name.0), f.name.1);
            ret_vars.push(self.declare(&name, f.ret, Scope::Return(FuncId(i as u32)))?);
        }

        let start = self.pick_start(&functions)?;
        let mut out_functions = Vec::new();
        for (i, (f, (params, locals))) in functions.iter().zip(frames).enumerate() {
            let fid = FuncId(i as u32);
            let mut locations: Vec<String> = Vec::new();
            let mut loc = |n: &str| -> u32 {
                match locations.iter().position(|l| l == n) {
                    Some(i) => i as u32,
                    None => {
                        locations.push(n.to_string());
                        (locations.len() - 1) as u32
                    }
                }
            };
            let entry = loc(&f.entry.0);
            let exit = loc(&f.exit.0);
            let mut edge_locs = Vec::new();
            for e in &f.edges {
                edge_locs.push((loc(&e.src.0), loc(&e.dst.0)));
            }
            let mut edges = Vec::new();
            for (e, (src, dst)) in f.edges.iter().zip(edge_locs) {
                let action = self.resolve_action(fid, f.ret, &ret_vars, &functions, &e.action)?;
                edges.push(Edge { src, dst, action });
            }
            out_functions.push(Function {
                name: f.name.0.clone(),
                params,
                locals,
                ret_var: ret_vars[i],
                return_type: f.ret,
                locations,
                entry,
                exit,
                edges,
            });
        }
        Ok(Program { vars: self.vars, globals: global_ids, functions: out_functions, start })
    }

    fn pick_start(&self, functions: &[AstFunction]) -> Result<FuncId, ParseError> {
        let marked: Vec<usize> = (0..functions.len()).filter(|&i| functions[i].start).collect();
        match marked.as_slice() {
            [i] => Ok(FuncId(*i as u32)),
            [_, second, ..] => Err(name_err(
                functions[*second].name.1,
                "more than one function is marked `start`",
            )),
            [] if functions.len() == 1 => Ok(FuncId(0)),
            [] => self.funcs.get("main").copied().ok_or_else(|| {
                name_err(
                    Pos { line: 1, col: 1 },
                    "no start function: mark one function `start` or name it `main`",
                )
            }),
        }
    }

    fn lookup_var(&self, f: FuncId, name: &Name) -> Result<VarId, ParseError> {
        let id = *self
            .by_name
            .get(&name.0)
            .ok_or_else(|| name_err(name.1, format!("unknown variable `{}`", name.0)))?;
        let visible = match self.vars[id.0 as usize].scope {
            Scope::Global | Scope::Return(_) => true,
            Scope::Param(g) | Scope::Local(g) => g == f,
        };
        if !visible {
            return Err(name_err(name.1, format!("variable `{}` is not in scope", name.0)));
        }
        Ok(id)
    }

    fn lookup_func(&self, name: &Name) -> Result<FuncId, ParseError> {
        self.funcs
            .get(&name.0)
            .copied()
            .ok_or_else(|| name_err(name.1, format!("unknown function `{}`", name.0)))
    }

    fn ty_of(&self, v: VarId) -> Type {
        self.vars[v.0 as usize].ty
    }

    fn resolve_action(
        &self,
        f: FuncId,
        ret_ty: Type,
        ret_vars: &[VarId],
        functions: &[AstFunction],
        a: &AstAction,
    ) -> Result<Action, ParseError> {
        Ok(match a {
            AstAction::Skip => Action::Skip,
            AstAction::Assign(dest, value) => {
                let d = self.lookup_var(f, dest)?;
                let (e, t) = self.expr(f, value)?;
                if t != self.ty_of(d) {
                    return Err(type_err(
                        dest.1,
                        format!("cannot assign {t} to `{}` of type {}", dest.0, self.ty_of(d)),
                    ));
                }
                Action::Assign { dest: d, value: e }
            }
            AstAction::Ret(value, pos) => {
                let (e, t) = self.expr(f, value)?;
                if t != ret_ty {
                    return Err(type_err(*pos, format!("returns {t}, function returns {ret_ty}")));
                }
                Action::Ret(e)
            }
            AstAction::Guard(g, pos) => {
                let (e, t) = self.expr(f, g)?;
                if t != Type::Bool {
                    return Err(type_err(*pos, format!("guard has type {t}, expected bool")));
                }
                Action::Guard(e)
            }
            AstAction::Call { dest, callee, args } => {
                let c = self.lookup_func(callee)?;
                let args = self.call_args(f, c, callee, functions, args)?;
                match dest {
                    None => Action::CallVoid { callee: c, args },
                    Some(dest) => {
                        let d = self.lookup_var(f, dest)?;
                        let rt = self.ty_of(ret_vars[c.0 as usize]);
                        if rt != self.ty_of(d) {
                            return Err(type_err(
                                dest.1,
                                format!("`{}` returns {rt}, `{}` has type {}", callee.0, dest.0, self.ty_of(d)),
                            ));
                        }
                        Action::CallAssign { dest: d, callee: c, args }
                    }
                }
            }
            AstAction::Enter { callee, args } => {
                let c = self.lookup_func(callee)?;
                let args = self.call_args(f, c, callee, functions, args)?;
                Action::Enter { callee: c, args }
            }
        })
    }

    fn call_args(
        &self,
        f: FuncId,
        callee: FuncId,
        callee_name: &Name,
        functions: &[AstFunction],
        args: &[AstExpr],
    ) -> Result<Vec<Expr>, ParseError> {
        let params = &functions[callee.0 as usize].params;
        if params.len() != args.len() {
            return Err(type_err(
                callee_name.1,
                format!("`{}` takes {} arguments, {} given", callee_name.0, params.len(), args.len()),
            ));
        }
        let mut out = Vec::new();
        for (p, a) in params.iter().zip(args) {
            let (e, t) = self.expr(f, a)?;
            if t != p.ty {
                return Err(type_err(
                    callee_name.1,
                    format!("argument for `{}` has type {t}, expected {}", p.name.0, p.ty),
                ));
            }
            out.push(e);
        }
        Ok(out)
    }

    fn expr(&self, f: FuncId, e: &AstExpr) -> Result<(Expr, Type), ParseError> {
        Ok(match e {
            AstExpr::Int(v) => (Expr::Int(*v), Type::Int),
            AstExpr::Bool(b) => (Expr::Bool(*b), Type::Bool),
            AstExpr::Var(n) => {
                let v = self.lookup_var(f, n)?;
                (Expr::Var(v), self.ty_of(v))
            }
            AstExpr::Index(n, idx) => {
                let v = self.lookup_var(f, n)?;
                if self.ty_of(v) != Type::IntArray {
                    return Err(type_err(n.1, format!("`{}` is not an array", n.0)));
                }
                let (i, t) = self.expr(f, idx)?;
                if t != Type::Int {
                    return Err(type_err(n.1, format!("index of `{}` has type {t}", n.0)));
                }
                (Expr::Index(v, Box::new(i)), Type::Int)
            }
            AstExpr::Unary(op, inner, pos) => {
                let (i, t) = self.expr(f, inner)?;
                let want = match op {
                    UnOp::Neg => Type::Int,
                    UnOp::Not => Type::Bool,
                };
                if t != want {
                    return Err(type_err(*pos, format!("operand has type {t}, expected {want}")));
                }
                (Expr::Unary(*op, Box::new(i)), want)
            }
            AstExpr::Binary(op, l, r, pos) => {
                let (le, lt) = self.expr(f, l)?;
                let (re, rt) = self.expr(f, r)?;
                let result = match op {
                    BinOp::Eq | BinOp::Ne => {
                        if lt != rt || lt == Type::IntArray {
                            return Err(type_err(*pos, format!("cannot compare {lt} with {rt}")));
                        }
                        Type::Bool
                    }
                    BinOp::And | BinOp::Or => {
                        if lt != Type::Bool || rt != Type::Bool {
                            return Err(type_err(*pos, format!("`{}` needs bool operands", op.symbol())));
                        }
                        Type::Bool
                    }
                    _ => {
                        if lt != Type::Int || rt != Type::Int {
                            return Err(type_err(*pos, format!("`{}` needs int operands", op.symbol())));
                        }
                        if op.is_comparison() {
                            Type::Bool
                        } else {
                            Type::Int
                        }
                    }
                };
                (Expr::binary(*op, le, re), result)
            }
        })
    }
}
