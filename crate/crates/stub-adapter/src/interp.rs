//! Tree-walking evaluator with per-statement line tracing.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::PathBuf;
use std::rc::Rc;

use crate::ast::*;
use crate::parser::parse_module;
use crate::value::{py_eq, py_is, range_len, Function, Globals, Module, Value};

pub const DEFAULT_STEP_LIMIT: u64 = 2_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 900;

#[derive(Debug, Clone, PartialEq)]
pub struct PyErr {
    pub kind: Rc<str>,
    pub message: String,
    pub file: Rc<str>,
    pub line: u32,
    /// Step-limit and recursion failures cannot be caught by `except`.
    pub fatal: bool,
}

impl PyErr {
    /// `Kind: message`, as the last line of a traceback shows it.
    pub fn headline(&self) -> String {
        if self.message.is_empty() {
            self.kind.to_string()
        } else {
            format!("{}: {}", self.kind, self.message)
        }
    }
}

pub enum Flow {
    Return(Value),
    Break,
    Continue,
    Raise(PyErr),
}

pub type R<T> = Result<T, Flow>;

type Scope = Rc<RefCell<HashMap<Rc<str>, Value>>>;

pub struct Frame {
    locals: Scope,
    globals: Globals,
    closure: Option<Scope>,
    file: Rc<str>,
    is_module: bool,
    global_names: HashSet<Rc<str>>,
}

impl Frame {
    fn module(globals: Globals, file: Rc<str>) -> Frame {
        Frame {
            locals: globals.clone(),
            globals,
            closure: None,
            file,
            is_module: true,
            global_names: HashSet::new(),
        }
    }
}

const EXCEPTIONS: &[&str] = &[
    "Exception",
    "BaseException",
    "ValueError",
    "TypeError",
    "IndexError",
    "KeyError",
    "LookupError",
    "ArithmeticError",
    "ZeroDivisionError",
    "AssertionError",
    "RuntimeError",
    "NameError",
    "AttributeError",
    "StopIteration",
    "RecursionError",
    "NotImplementedError",
    "OverflowError",
    "ImportError",
    "ModuleNotFoundError",
    "UnboundLocalError",
    "EOFError",
];

fn exception_matches(kind: &str, handler: &str) -> bool {
    kind == handler
        || matches!(handler, "Exception" | "BaseException")
        || (handler == "LookupError" && matches!(kind, "IndexError" | "KeyError"))
        || (handler == "ArithmeticError" && matches!(kind, "ZeroDivisionError" | "OverflowError"))
        || (handler == "ImportError" && kind == "ModuleNotFoundError")
        || (handler == "RuntimeError" && matches!(kind, "RecursionError" | "NotImplementedError"))
        || (handler == "NameError" && kind == "UnboundLocalError")
}

pub struct Interpreter {
    root: PathBuf,
    modules: HashMap<Rc<str>, Rc<Module>>,
    /// In-memory sources that shadow files under `root`.
    pub sources: HashMap<String, String>,
    pub subjects: HashSet<Rc<str>>,
    pub tracing: bool,
    pub covered: BTreeSet<(Rc<str>, u32)>,
    pub steps: u64,
    pub step_limit: u64,
    depth: usize,
    pub max_depth: usize,
    pub stdout: String,
    pub stderr: String,
    file: Rc<str>,
    line: u32,
    handling: Option<PyErr>,
    /// Parsed module bodies, kept alive for the interpreter's lifetime.
    bodies: HashMap<Rc<str>, Rc<Vec<Stmt>>>,
}

impl Interpreter {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Interpreter {
            root: root.into(),
            modules: HashMap::new(),
            sources: HashMap::new(),
            subjects: HashSet::new(),
            tracing: false,
            covered: BTreeSet::new(),
            steps: 0,
            step_limit: DEFAULT_STEP_LIMIT,
            depth: 0,
            max_depth: DEFAULT_MAX_DEPTH,
            stdout: String::new(),
            stderr: String::new(),
            file: "<none>".into(),
            line: 0,
            handling: None,
            bodies: HashMap::new(),
        }
    }

    pub fn error(&self, kind: &str, message: impl Into<String>) -> Flow {
        Flow::Raise(PyErr {
            kind: kind.into(),
            message: message.into(),
            file: self.file.clone(),
            line: self.line,
            fatal: false,
        })
    }

    fn fatal(&self, kind: &str, message: &str) -> Flow {
        Flow::Raise(PyErr {
            kind: kind.into(),
            message: message.into(),
            file: self.file.clone(),
            line: self.line,
            fatal: true,
        })
    }

    pub fn type_error(&self, message: impl Into<String>) -> Flow {
        self.error("TypeError", message)
    }

    fn mark(&mut self, file: &Rc<str>, line: u32) -> R<()> {
        self.file = file.clone();
        self.line = line;
        self.steps += 1;
        if self.steps > self.step_limit {
            return Err(self.fatal("TimeoutError", "step limit exceeded (infinite loop?)"));
        }
        if self.tracing && self.subjects.contains(file) {
            self.covered.insert((file.clone(), line));
        }
        Ok(())
    }

    fn read_source(&self, rel: &str) -> Option<String> {
        if let Some(s) = self.sources.get(rel) {
            return Some(s.clone());
        }
        std::fs::read_to_string(self.root.join(rel)).ok()
    }

    /// Loads a file as a module. Syntax errors surface as `SyntaxError`.
    pub fn load_file(&mut self, rel: &str, name: &str) -> R<Rc<Module>> {
        if let Some(m) = self.modules.get(name) {
            return Ok(m.clone());
        }
        let src = self
            .read_source(rel)
            .ok_or_else(|| self.error("ModuleNotFoundError", format!("No module named '{name}'")))?;
        let body = match parse_module(&src) {
            Ok(b) => Rc::new(b),
            Err(e) => {
                return Err(Flow::Raise(PyErr {
                    kind: "SyntaxError".into(),
                    message: e.message,
                    file: rel.into(),
                    line: e.line,
                    fatal: false,
                }))
            }
        };
        let file: Rc<str> = rel.into();
        let globals: Globals = Rc::new(RefCell::new(HashMap::new()));
        globals.borrow_mut().insert("__name__".into(), Value::str(name));
        globals.borrow_mut().insert("__file__".into(), Value::str(rel));
        let module = Rc::new(Module {
            name: name.into(),
            globals: globals.clone(),
        });
        self.modules.insert(name.into(), module.clone());
        self.bodies.insert(file.clone(), body.clone());
        let mut frame = Frame::module(globals, file);
        let saved = (self.file.clone(), self.line);
        let result = self.exec_block(&body, &mut frame);
        (self.file, self.line) = saved;
        match result {
            Ok(()) => Ok(module),
            Err(Flow::Raise(e)) => {
                self.modules.remove(name);
                Err(Flow::Raise(e))
            }
            Err(_) => Err(self.error("SyntaxError", "'return' outside function")),
        }
    }

    pub fn module_body(&self, rel: &str) -> Option<Rc<Vec<Stmt>>> {
        self.bodies.get(rel).cloned()
    }

    fn import(&mut self, name: &str) -> R<Rc<Module>> {
        if let Some(m) = self.modules.get(name) {
            return Ok(m.clone());
        }
        let builtin = match name {
            "sys" => Some(vec![
                ("stderr", Value::Stream(true)),
                ("stdout", Value::Stream(false)),
                ("path", Value::list(Vec::new())),
                ("argv", Value::list(vec![Value::str("")])),
                ("maxsize", Value::Int(i64::MAX)),
            ]),
            "math" => Some(vec![
                ("pi", Value::Float(std::f64::consts::PI)),
                ("e", Value::Float(std::f64::consts::E)),
                ("inf", Value::Float(f64::INFINITY)),
                ("sqrt", Value::Builtin("math.sqrt")),
                ("floor", Value::Builtin("math.floor")),
                ("ceil", Value::Builtin("math.ceil")),
                ("isclose", Value::Builtin("math.isclose")),
            ]),
            _ => None,
        };
        if let Some(items) = builtin {
            let globals: Globals = Rc::new(RefCell::new(items.into_iter().map(|(k, v)| (Rc::from(k), v)).collect()));
            let m = Rc::new(Module {
                name: name.into(),
                globals,
            });
            self.modules.insert(name.into(), m.clone());
            return Ok(m);
        }
        let rel = format!("{}.py", name.replace('.', "/"));
        self.load_file(&rel, name)
    }

    pub fn call_function_value(&mut self, f: &Value, args: Vec<Value>) -> R<Value> {
        self.call(f.clone(), args, Vec::new())
    }

    // ---- statements -------------------------------------------------------

    pub fn exec_block(&mut self, body: &[Stmt], f: &mut Frame) -> R<()> {
        for s in body {
            self.exec(s, f)?;
        }
        Ok(())
    }

    fn exec(&mut self, s: &Stmt, f: &mut Frame) -> R<()> {
        self.mark(&f.file.clone(), s.line)?;
        match &s.kind {
            StmtKind::Expr(e) => {
                self.eval(e, f)?;
            }
            StmtKind::Assign(targets, value) => {
                let v = self.eval(value, f)?;
                for t in targets {
                    self.assign(t, v.clone(), f)?;
                }
            }
            StmtKind::AugAssign(target, op, value) => self.aug_assign(target, *op, value, f)?,
            StmtKind::Pass => {}
            StmtKind::Break => return Err(Flow::Break),
            StmtKind::Continue => return Err(Flow::Continue),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, f)?,
                    None => Value::None,
                };
                return Err(Flow::Return(v));
            }
            StmtKind::Raise(e) => return Err(self.raise(e.as_ref(), f)?),
            StmtKind::Assert(test, msg) => self.assert(test, msg.as_ref(), f)?,
            StmtKind::Import(names) => {
                for (name, alias) in names {
                    let m = self.import(name)?;
                    let bind = alias.clone().unwrap_or_else(|| name.split('.').next().unwrap().into());
                    self.store(&bind, Value::Module(m), f);
                }
            }
            StmtKind::FromImport(module, names) => {
                let m = self.import(module)?;
                match names {
                    None => {
                        let items: Vec<(Rc<str>, Value)> = m
                            .globals
                            .borrow()
                            .iter()
                            .filter(|(k, _)| !k.starts_with('_'))
                            .map(|(k, v)| (k.clone(), v.clone()))
                            .collect();
                        for (k, v) in items {
                            self.store(&k, v, f);
                        }
                    }
                    Some(names) => {
                        for (name, alias) in names {
                            let v = m.globals.borrow().get(name).cloned();
                            let v = v.ok_or_else(|| {
                                self.error("ImportError", format!("cannot import name '{name}' from '{module}'"))
                            })?;
                            self.store(alias.as_ref().unwrap_or(name), v, f);
                        }
                    }
                }
            }
            StmtKind::Global(names) => f.global_names.extend(names.iter().cloned()),
            StmtKind::Del(targets) => {
                for t in targets {
                    self.delete(t, f)?;
                }
            }
            StmtKind::If(branches, orelse) => {
                for (i, (line, test, body)) in branches.iter().enumerate() {
                    if i > 0 {
                        self.mark(&f.file.clone(), *line)?;
                    }
                    if self.eval(test, f)?.truthy() {
                        return self.exec_block(body, f);
                    }
                }
                if let Some(body) = orelse {
                    self.exec_block(body, f)?;
                }
            }
            StmtKind::While(test, body, orelse) => {
                let file = f.file.clone();
                loop {
                    if !self.eval(test, f)?.truthy() {
                        if let Some(body) = orelse {
                            self.exec_block(body, f)?;
                        }
                        break;
                    }
                    match self.exec_block(body, f) {
                        Err(Flow::Break) => break,
                        Err(Flow::Continue) | Ok(()) => {}
                        Err(e) => return Err(e),
                    }
                    self.mark(&file, s.line)?;
                }
            }
            StmtKind::For(target, iter, body, orelse) => {
                let it = self.eval(iter, f)?;
                let file = f.file.clone();
                let mut index = 0;
                // Lists are walked live so mutation during iteration behaves
                // as in CPython.
                let snapshot = match &it {
                    Value::List(_) => None,
                    other => Some(self.iterate(other)?),
                };
                loop {
                    let item = match (&it, &snapshot) {
                        (Value::List(l), None) => l.borrow().get(index).cloned(),
                        (_, Some(items)) => items.get(index).cloned(),
                        _ => unreachable!(),
                    };
                    let Some(item) = item else {
                        if let Some(body) = orelse {
                            self.exec_block(body, f)?;
                        }
                        break;
                    };
                    if index > 0 {
                        self.mark(&file, s.line)?;
                    }
                    index += 1;
                    self.assign(target, item, f)?;
                    match self.exec_block(body, f) {
                        Err(Flow::Break) => break,
                        Err(Flow::Continue) | Ok(()) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            StmtKind::Def(def) => {
                let func = self.make_function(def.clone(), f)?;
                self.store(&def.name, func, f);
            }
            StmtKind::Try(body, handlers, orelse, finally) => {
                let mut result = self.exec_block(body, f);
                if let Err(Flow::Raise(e)) = &result {
                    let e = e.clone();
                    let handler = handlers.iter().find(|h| {
                        !e.fatal && (h.kinds.is_empty() || h.kinds.iter().any(|k| exception_matches(&e.kind, k)))
                    });
                    if let Some(h) = handler {
                        self.mark(&f.file.clone(), h.line)?;
                        if let Some(name) = &h.name {
                            self.store(name, Value::Exception(e.kind.clone(), e.message.as_str().into()), f);
                        }
                        let saved = self.handling.replace(e);
                        result = self.exec_block(&h.body, f);
                        self.handling = saved;
                    }
                } else if result.is_ok() {
                    if let Some(body) = orelse {
                        result = self.exec_block(body, f);
                    }
                }
                if let Some(body) = finally {
                    self.exec_block(body, f)?;
                }
                result?;
            }
        }
        Ok(())
    }

    fn make_function(&mut self, def: Rc<FuncDef>, f: &mut Frame) -> R<Value> {
        let mut defaults = Vec::with_capacity(def.params.len());
        for p in &def.params {
            defaults.push(match &p.default {
                Some(e) => Some(self.eval(e, f)?),
                None => None,
            });
        }
        Ok(Value::Func(Rc::new(Function {
            def,
            defaults,
            globals: f.globals.clone(),
            closure: (!f.is_module).then(|| f.locals.clone()),
            file: f.file.clone(),
        })))
    }

    fn raise(&mut self, e: Option<&Expr>, f: &mut Frame) -> R<Flow> {
        let Some(e) = e else {
            return Ok(match &self.handling {
                Some(err) => Flow::Raise(err.clone()),
                None => self.error("RuntimeError", "No active exception to reraise"),
            });
        };
        Ok(match self.eval(e, f)? {
            Value::ExcType(kind) => self.error(&kind, ""),
            Value::Exception(kind, msg) => self.error(&kind, msg.to_string()),
            _ => self.type_error("exceptions must derive from BaseException"),
        })
    }

    fn assert(&mut self, test: &Expr, msg: Option<&Expr>, f: &mut Frame) -> R<()> {
        let failure = match test {
            Expr::Compare(left, rest) if rest.len() == 1 => {
                let l = self.eval(left, f)?;
                let (op, right) = &rest[0];
                let r = self.eval(right, f)?;
                if self.compare(*op, &l, &r)? {
                    return Ok(());
                }
                let mut text = format!("assert {} {} {}", l.repr(), op.symbol(), r.repr());
                if *op == CmpOp::Eq {
                    text.push_str(&format!("\nexpected: {}\nactual: {}", r.repr(), l.repr()));
                }
                text
            }
            _ => {
                let v = self.eval(test, f)?;
                if v.truthy() {
                    return Ok(());
                }
                format!("assert {}", v.repr())
            }
        };
        let message = match msg {
            Some(m) => format!("{}\n{failure}", self.eval(m, f)?.to_str()),
            None => failure,
        };
        Err(self.error("AssertionError", message))
    }

    fn store(&mut self, name: &Rc<str>, v: Value, f: &mut Frame) {
        if f.is_module || f.global_names.contains(name) {
            f.globals.borrow_mut().insert(name.clone(), v);
        } else {
            f.locals.borrow_mut().insert(name.clone(), v);
        }
    }

    fn lookup(&self, name: &Rc<str>, f: &Frame) -> R<Value> {
        if !f.global_names.contains(name) {
            if let Some(v) = f.locals.borrow().get(name) {
                return Ok(v.clone());
            }
            if let Some(c) = &f.closure {
                if let Some(v) = c.borrow().get(name) {
                    return Ok(v.clone());
                }
            }
        }
        if let Some(v) = f.globals.borrow().get(name) {
            return Ok(v.clone());
        }
        builtin_value(name).ok_or_else(|| self.error("NameError", format!("name '{name}' is not defined")))
    }

    fn assign(&mut self, target: &Expr, v: Value, f: &mut Frame) -> R<()> {
        match target {
            Expr::Name(n) => {
                self.store(n, v, f);
                Ok(())
            }
            Expr::Tuple(items) | Expr::List(items) => {
                let values = self.iterate(&v)?;
                if values.len() != items.len() {
                    return Err(if values.len() > items.len() {
                        self.error("ValueError", format!("too many values to unpack (expected {})", items.len()))
                    } else {
                        self.error(
                            "ValueError",
                            format!("not enough values to unpack (expected {}, got {})", items.len(), values.len()),
                        )
                    });
                }
                for (t, v) in items.iter().zip(values) {
                    self.assign(t, v, f)?;
                }
                Ok(())
            }
            Expr::Index(obj, idx) => {
                let o = self.eval(obj, f)?;
                let i = self.eval(idx, f)?;
                self.set_item(&o, i, v)
            }
            Expr::Slice(obj, parts) => {
                let o = self.eval(obj, f)?;
                let Value::List(l) = &o else {
                    return Err(self.type_error(format!("'{}' object does not support item assignment", o.type_name())));
                };
                if parts[2].is_some() {
                    return Err(self.error("ValueError", "extended slice assignment is not supported"));
                }
                let len = l.borrow().len() as i64;
                let lo = self.slice_bound(parts[0].as_deref(), f, 0, len)?;
                let hi = self.slice_bound(parts[1].as_deref(), f, len, len)?.max(lo);
                let items = self.iterate(&v)?;
                l.borrow_mut().splice(lo as usize..hi as usize, items);
                Ok(())
            }
            Expr::Attr(_, name) => Err(self.error("AttributeError", format!("cannot set attribute '{name}'"))),
            _ => Err(self.error("SyntaxError", "cannot assign to expression")),
        }
    }

    fn slice_bound(&mut self, e: Option<&Expr>, f: &mut Frame, default: i64, len: i64) -> R<i64> {
        match e {
            None => Ok(default),
            Some(e) => {
                let v = self.eval(e, f)?;
                if matches!(v, Value::None) {
                    return Ok(default);
                }
                let i = v
                    .as_int()
                    .ok_or_else(|| self.type_error("slice indices must be integers or None"))?;
                Ok(if i < 0 { (i + len).max(0) } else { i.min(len) })
            }
        }
    }

    pub fn set_item(&mut self, o: &Value, key: Value, v: Value) -> R<()> {
        match o {
            Value::List(l) => {
                let len = l.borrow().len();
                let i = self.index_of(&key, len, "list assignment")?;
                l.borrow_mut()[i] = v;
                Ok(())
            }
            Value::Dict(d) => {
                if !key.is_hashable() {
                    return Err(self.type_error(format!("unhashable type: '{}'", key.type_name())));
                }
                let mut d = d.borrow_mut();
                match d.iter_mut().find(|(k, _)| py_eq(k, &key)) {
                    Some(entry) => entry.1 = v,
                    None => d.push((key, v)),
                }
                Ok(())
            }
            _ => Err(self.type_error(format!("'{}' object does not support item assignment", o.type_name()))),
        }
    }

    fn index_of(&self, key: &Value, len: usize, what: &str) -> R<usize> {
        let Some(i) = key.as_int() else {
            return Err(self.type_error(format!(
                "{} indices must be integers or slices, not {}",
                what.split(' ').next().unwrap(),
                key.type_name()
            )));
        };
        let idx = if i < 0 { i + len as i64 } else { i };
        if idx < 0 || idx >= len as i64 {
            return Err(self.error("IndexError", format!("{what} index out of range")));
        }
        Ok(idx as usize)
    }

    fn delete(&mut self, t: &Expr, f: &mut Frame) -> R<()> {
        match t {
            Expr::Name(n) => {
                let removed = if f.is_module || f.global_names.contains(n) {
                    f.globals.borrow_mut().remove(n)
                } else {
                    f.locals.borrow_mut().remove(n)
                };
                removed
                    .map(|_| ())
                    .ok_or_else(|| self.error("NameError", format!("name '{n}' is not defined")))
            }
            Expr::Index(obj, idx) => {
                let o = self.eval(obj, f)?;
                let key = self.eval(idx, f)?;
                match &o {
                    Value::List(l) => {
                        let len = l.borrow().len();
                        let i = self.index_of(&key, len, "list assignment")?;
                        l.borrow_mut().remove(i);
                        Ok(())
                    }
                    Value::Dict(d) => {
                        let pos = d.borrow().iter().position(|(k, _)| py_eq(k, &key));
                        match pos {
                            Some(p) => {
                                d.borrow_mut().remove(p);
                                Ok(())
                            }
                            None => Err(self.error("KeyError", key.repr())),
                        }
                    }
                    _ => Err(self.type_error(format!("'{}' object doesn't support item deletion", o.type_name()))),
                }
            }
            _ => Err(self.error("SyntaxError", "cannot delete expression")),
        }
    }

    fn aug_assign(&mut self, target: &Expr, op: BinOp, value: &Expr, f: &mut Frame) -> R<()> {
        match target {
            Expr::Name(n) => {
                let cur = self.lookup(n, f)?;
                let rhs = self.eval(value, f)?;
                let new = self.inplace(op, cur, rhs)?;
                self.store(n, new, f);
                Ok(())
            }
            Expr::Index(obj, idx) => {
                let o = self.eval(obj, f)?;
                let key = self.eval(idx, f)?;
                let cur = self.get_item(&o, &key)?;
                let rhs = self.eval(value, f)?;
                let new = self.inplace(op, cur, rhs)?;
                self.set_item(&o, key, new)
            }
            _ => Err(self.error("SyntaxError", "illegal expression for augmented assignment")),
        }
    }

    fn inplace(&mut self, op: BinOp, cur: Value, rhs: Value) -> R<Value> {
        if let (BinOp::Add, Value::List(l)) = (op, &cur) {
            let items = self.iterate(&rhs)?;
            l.borrow_mut().extend(items);
            return Ok(cur);
        }
        self.binop(op, &cur, &rhs)
    }

    // ---- expressions ------------------------------------------------------

    pub fn eval(&mut self, e: &Expr, f: &mut Frame) -> R<Value> {
        Ok(match e {
            Expr::Lit(l) => match l {
                Lit::None => Value::None,
                Lit::Bool(b) => Value::Bool(*b),
                Lit::Int(i) => Value::Int(*i),
                Lit::Float(x) => Value::Float(*x),
                Lit::Str(s) => Value::Str(s.clone()),
            },
            Expr::Name(n) => self.lookup(n, f)?,
            Expr::Tuple(items) => Value::tuple(self.eval_all(items, f)?),
            Expr::List(items) => Value::list(self.eval_all(items, f)?),
            Expr::Set(items) => {
                let items = self.eval_all(items, f)?;
                self.make_set(items)?
            }
            Expr::Dict(items) => {
                let d = Value::Dict(Rc::new(RefCell::new(Vec::new())));
                for (k, v) in items {
                    let k = self.eval(k, f)?;
                    let v = self.eval(v, f)?;
                    self.set_item(&d, k, v)?;
                }
                d
            }
            Expr::Bin(op, a, b) => {
                let a = self.eval(a, f)?;
                let b = self.eval(b, f)?;
                self.binop(*op, &a, &b)?
            }
            Expr::Neg(a) => match self.eval(a, f)? {
                Value::Float(x) => Value::Float(-x),
                v => match v.as_int() {
                    Some(i) => Value::Int(i.checked_neg().ok_or_else(|| self.error("OverflowError", "integer overflow"))?),
                    None => return Err(self.type_error(format!("bad operand type for unary -: '{}'", v.type_name()))),
                },
            },
            Expr::Pos(a) => {
                let v = self.eval(a, f)?;
                match v {
                    Value::Float(_) | Value::Int(_) => v,
                    Value::Bool(b) => Value::Int(b as i64),
                    _ => return Err(self.type_error(format!("bad operand type for unary +: '{}'", v.type_name()))),
                }
            }
            Expr::Invert(a) => {
                let v = self.eval(a, f)?;
                match v.as_int() {
                    Some(i) => Value::Int(!i),
                    None => return Err(self.type_error(format!("bad operand type for unary ~: '{}'", v.type_name()))),
                }
            }
            Expr::Not(a) => Value::Bool(!self.eval(a, f)?.truthy()),
            Expr::And(a, b) => {
                let l = self.eval(a, f)?;
                if !l.truthy() {
                    l
                } else {
                    self.eval(b, f)?
                }
            }
            Expr::Or(a, b) => {
                let l = self.eval(a, f)?;
                if l.truthy() {
                    l
                } else {
                    self.eval(b, f)?
                }
            }
            Expr::Compare(first, rest) => {
                let mut l = self.eval(first, f)?;
                for (op, r) in rest {
                    let r = self.eval(r, f)?;
                    if !self.compare(*op, &l, &r)? {
                        return Ok(Value::Bool(false));
                    }
                    l = r;
                }
                Value::Bool(true)
            }
            Expr::IfExp(c, a, b) => {
                if self.eval(c, f)?.truthy() {
                    self.eval(a, f)?
                } else {
                    self.eval(b, f)?
                }
            }
            Expr::Call(callee, args, kwargs) => {
                let callee = self.eval(callee, f)?;
                let args = self.eval_all(args, f)?;
                let mut kw = Vec::with_capacity(kwargs.len());
                for (k, v) in kwargs {
                    kw.push((k.clone(), self.eval(v, f)?));
                }
                let saved = (self.file.clone(), self.line);
                let result = self.call(callee, args, kw);
                if result.is_ok() {
                    (self.file, self.line) = saved;
                }
                result?
            }
            Expr::Attr(obj, name) => {
                let o = self.eval(obj, f)?;
                self.get_attr(o, name)?
            }
            Expr::Index(obj, idx) => {
                let o = self.eval(obj, f)?;
                let k = self.eval(idx, f)?;
                self.get_item(&o, &k)?
            }
            Expr::Slice(obj, parts) => {
                let o = self.eval(obj, f)?;
                let mut bounds = [None, None, None];
                for (i, p) in parts.iter().enumerate() {
                    if let Some(p) = p {
                        let v = self.eval(p, f)?;
                        if !matches!(v, Value::None) {
                            bounds[i] = Some(v.as_int().ok_or_else(|| {
                                self.type_error("slice indices must be integers or None or have an __index__ method")
                            })?);
                        }
                    }
                }
                self.slice(&o, bounds)?
            }
            Expr::Comp {
                kind,
                elt,
                value,
                clauses,
            } => self.comprehension(*kind, elt, value.as_deref(), clauses, f)?,
            Expr::Lambda(def) => self.make_function(def.clone(), f)?,
            Expr::FStr(parts) => {
                let mut out = String::new();
                for p in parts {
                    match p {
                        FStrPart::Lit(s) => out.push_str(s),
                        FStrPart::Expr { expr, repr, spec } => {
                            let v = self.eval(expr, f)?;
                            let s = match spec {
                                Some(spec) => self.format_spec(&v, spec)?,
                                None if *repr => v.repr(),
                                None => v.to_str(),
                            };
                            out.push_str(&s);
                        }
                    }
                }
                Value::str(out)
            }
        })
    }

    fn eval_all(&mut self, items: &[Expr], f: &mut Frame) -> R<Vec<Value>> {
        items.iter().map(|e| self.eval(e, f)).collect()
    }

    pub fn make_set(&self, items: Vec<Value>) -> R<Value> {
        let mut out: Vec<Value> = Vec::with_capacity(items.len());
        for v in items {
            if !v.is_hashable() {
                return Err(self.type_error(format!("unhashable type: '{}'", v.type_name())));
            }
            if !out.iter().any(|w| py_eq(w, &v)) {
                out.push(v);
            }
        }
        Ok(Value::Set(Rc::new(RefCell::new(out))))
    }

    fn comprehension(
        &mut self,
        kind: CompKind,
        elt: &Expr,
        value: Option<&Expr>,
        clauses: &[CompFor],
        f: &mut Frame,
    ) -> R<Value> {
        let mut inner = Frame {
            locals: Rc::new(RefCell::new(HashMap::new())),
            globals: f.globals.clone(),
            closure: Some(if f.is_module { f.globals.clone() } else { merged_scope(f) }),
            file: f.file.clone(),
            is_module: false,
            global_names: HashSet::new(),
        };
        let mut out = Vec::new();
        self.comp_level(elt, value, clauses, &mut inner, &mut out)?;
        Ok(match kind {
            CompKind::List | CompKind::Gen => Value::list(out),
            CompKind::Set => self.make_set(out)?,
            CompKind::Dict => {
                let d = Value::Dict(Rc::new(RefCell::new(Vec::new())));
                for pair in out {
                    let Value::Tuple(kv) = pair else { unreachable!() };
                    self.set_item(&d, kv[0].clone(), kv[1].clone())?;
                }
                d
            }
        })
    }

    fn comp_level(
        &mut self,
        elt: &Expr,
        value: Option<&Expr>,
        clauses: &[CompFor],
        f: &mut Frame,
        out: &mut Vec<Value>,
    ) -> R<()> {
        let Some((clause, rest)) = clauses.split_first() else {
            let k = self.eval(elt, f)?;
            out.push(match value {
                Some(v) => Value::tuple(vec![k, self.eval(v, f)?]),
                None => k,
            });
            return Ok(());
        };
        let it = self.eval(&clause.iter, f)?;
        for item in self.iterate(&it)? {
            self.steps += 1;
            if self.steps > self.step_limit {
                return Err(self.fatal("TimeoutError", "step limit exceeded (infinite loop?)"));
            }
            self.assign(&clause.target, item, f)?;
            let mut keep = true;
            for c in &clause.conds {
                if !self.eval(c, f)?.truthy() {
                    keep = false;
                    break;
                }
            }
            if keep {
                self.comp_level(elt, value, rest, f, out)?;
            }
        }
        Ok(())
    }

    pub fn iterate(&mut self, v: &Value) -> R<Vec<Value>> {
        Ok(match v {
            Value::List(l) | Value::Set(l) => l.borrow().clone(),
            Value::Tuple(t) => t.as_ref().clone(),
            Value::Str(s) => s.chars().map(|c| Value::str(c.to_string())).collect(),
            Value::Dict(d) => d.borrow().iter().map(|(k, _)| k.clone()).collect(),
            Value::Range(start, _, step) => {
                let n = range_len(v);
                if n as u64 > self.step_limit {
                    return Err(self.fatal("TimeoutError", "step limit exceeded (range too large)"));
                }
                (0..n).map(|i| Value::Int(start + i * step)).collect()
            }
            _ => return Err(self.type_error(format!("'{}' object is not iterable", v.type_name()))),
        })
    }

    pub fn get_item(&mut self, o: &Value, key: &Value) -> R<Value> {
        match o {
            Value::List(l) => {
                let l = l.borrow();
                let i = self.index_of(key, l.len(), "list")?;
                Ok(l[i].clone())
            }
            Value::Tuple(t) => {
                let i = self.index_of(key, t.len(), "tuple")?;
                Ok(t[i].clone())
            }
            Value::Str(s) => {
                let chars: Vec<char> = s.chars().collect();
                let i = self.index_of(key, chars.len(), "string")?;
                Ok(Value::str(chars[i].to_string()))
            }
            Value::Range(start, _, step) => {
                let i = self.index_of(key, range_len(o) as usize, "range object")?;
                Ok(Value::Int(start + i as i64 * step))
            }
            Value::Dict(d) => {
                if !key.is_hashable() {
                    return Err(self.type_error(format!("unhashable type: '{}'", key.type_name())));
                }
                d.borrow()
                    .iter()
                    .find(|(k, _)| py_eq(k, key))
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| self.error("KeyError", key.repr()))
            }
            _ => Err(self.type_error(format!("'{}' object is not subscriptable", o.type_name()))),
        }
    }

    fn slice(&mut self, o: &Value, [lo, hi, step]: [Option<i64>; 3]) -> R<Value> {
        let step = step.unwrap_or(1);
        if step == 0 {
            return Err(self.error("ValueError", "slice step cannot be zero"));
        }
        let pick = |len: usize| -> Vec<usize> {
            let len = len as i64;
            let norm = |v: i64, lo_clamp: i64, hi_clamp: i64| {
                let v = if v < 0 { v + len } else { v };
                v.clamp(lo_clamp, hi_clamp)
            };
            let mut out = Vec::new();
            if step > 0 {
                let start = lo.map_or(0, |v| norm(v, 0, len));
                let stop = hi.map_or(len, |v| norm(v, 0, len));
                let mut i = start;
                while i < stop {
                    out.push(i as usize);
                    i += step;
                }
            } else {
                let start = lo.map_or(len - 1, |v| norm(v, -1, len - 1));
                let stop = hi.map_or(-1, |v| norm(v, -1, len - 1));
                let mut i = start;
                while i > stop {
                    out.push(i as usize);
                    i += step;
                }
            }
            out
        };
        Ok(match o {
            Value::List(l) => {
                let l = l.borrow();
                Value::list(pick(l.len()).into_iter().map(|i| l[i].clone()).collect())
            }
            Value::Tuple(t) => Value::tuple(pick(t.len()).into_iter().map(|i| t[i].clone()).collect()),
            Value::Str(s) => {
                let chars: Vec<char> = s.chars().collect();
                Value::str(pick(chars.len()).into_iter().map(|i| chars[i]).collect::<String>())
            }
            Value::Range(..) => {
                let items = self.iterate(o)?;
                Value::list(pick(items.len()).into_iter().map(|i| items[i].clone()).collect())
            }
            _ => return Err(self.type_error(format!("'{}' object is not subscriptable", o.type_name()))),
        })
    }

    fn get_attr(&mut self, o: Value, name: &Rc<str>) -> R<Value> {
        if let Value::Module(m) = &o {
            return m.globals.borrow().get(name).cloned().ok_or_else(|| {
                self.error("AttributeError", format!("module '{}' has no attribute '{name}'", m.name))
            });
        }
        if let Value::Exception(_, msg) = &o {
            if &**name == "args" {
                return Ok(Value::tuple(vec![Value::Str(msg.clone())]));
            }
        }
        if crate::builtins::has_method(&o, name) {
            Ok(Value::Method(Box::new(o), name.clone()))
        } else {
            Err(self.error(
                "AttributeError",
                format!("'{}' object has no attribute '{name}'", o.type_name()),
            ))
        }
    }

    pub fn call(&mut self, callee: Value, args: Vec<Value>, kwargs: Vec<(Rc<str>, Value)>) -> R<Value> {
        match callee {
            Value::Func(func) => self.call_function(&func, args, kwargs),
            Value::Builtin(name) => self.call_builtin(name, args, kwargs),
            Value::Method(recv, name) => self.call_method(&recv, &name, args, kwargs),
            Value::ExcType(kind) => {
                let msg = match args.len() {
                    0 => String::new(),
                    1 => args[0].to_str(),
                    _ => Value::tuple(args).repr(),
                };
                Ok(Value::Exception(kind, msg.into()))
            }
            other => Err(self.type_error(format!("'{}' object is not callable", other.type_name()))),
        }
    }

    fn call_function(&mut self, func: &Rc<Function>, args: Vec<Value>, kwargs: Vec<(Rc<str>, Value)>) -> R<Value> {
        let def = &func.def;
        if self.depth >= self.max_depth {
            return Err(self.fatal("RecursionError", "maximum recursion depth exceeded"));
        }
        if args.len() > def.params.len() {
            return Err(self.type_error(format!(
                "{}() takes {} positional argument{} but {} were given",
                def.name,
                def.params.len(),
                if def.params.len() == 1 { "" } else { "s" },
                args.len()
            )));
        }
        let mut slots: Vec<Option<Value>> = args.into_iter().map(Some).collect();
        slots.resize(def.params.len(), None);
        for (k, v) in kwargs {
            let Some(i) = def.params.iter().position(|p| p.name == k) else {
                return Err(self.type_error(format!("{}() got an unexpected keyword argument '{k}'", def.name)));
            };
            if slots[i].is_some() {
                return Err(self.type_error(format!("{}() got multiple values for argument '{k}'", def.name)));
            }
            slots[i] = Some(v);
        }
        let mut locals = HashMap::with_capacity(slots.len());
        let mut missing = Vec::new();
        for (i, slot) in slots.into_iter().enumerate() {
            match slot.or_else(|| func.defaults[i].clone()) {
                Some(v) => {
                    locals.insert(def.params[i].name.clone(), v);
                }
                None => missing.push(format!("'{}'", def.params[i].name)),
            }
        }
        if !missing.is_empty() {
            return Err(self.type_error(format!(
                "{}() missing {} required positional argument{}: {}",
                def.name,
                missing.len(),
                if missing.len() == 1 { "" } else { "s" },
                missing.join(" and ")
            )));
        }
        let mut frame = Frame {
            locals: Rc::new(RefCell::new(locals)),
            globals: func.globals.clone(),
            closure: func.closure.clone(),
            file: func.file.clone(),
            is_module: false,
            global_names: HashSet::new(),
        };
        self.depth += 1;
        let result = self.exec_block(&def.body, &mut frame);
        self.depth -= 1;
        match result {
            Ok(()) => Ok(Value::None),
            Err(Flow::Return(v)) => Ok(v),
            Err(Flow::Break | Flow::Continue) => Err(self.error("SyntaxError", "'break' outside loop")),
            Err(e) => Err(e),
        }
    }

    // ---- operators --------------------------------------------------------

    pub fn binop(&mut self, op: BinOp, a: &Value, b: &Value) -> R<Value> {
        use Value::*;
        let overflow = || self.error("OverflowError", "integer overflow");
        let unsupported = || {
            self.type_error(format!(
                "unsupported operand type(s) for {}: '{}' and '{}'",
                op.symbol(),
                a.type_name(),
                b.type_name()
            ))
        };
        if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
            return Ok(match op {
                BinOp::Add => Int(x.checked_add(y).ok_or_else(overflow)?),
                BinOp::Sub => Int(x.checked_sub(y).ok_or_else(overflow)?),
                BinOp::Mul => Int(x.checked_mul(y).ok_or_else(overflow)?),
                BinOp::Div => {
                    if y == 0 {
                        return Err(self.error("ZeroDivisionError", "division by zero"));
                    }
                    Float(x as f64 / y as f64)
                }
                BinOp::FloorDiv | BinOp::Mod => {
                    if y == 0 {
                        return Err(self.error("ZeroDivisionError", "integer division or modulo by zero"));
                    }
                    let mut q = x.checked_div(y).ok_or_else(overflow)?;
                    let mut r = x % y;
                    if r != 0 && ((r < 0) != (y < 0)) {
                        q -= 1;
                        r += y;
                    }
                    if op == BinOp::FloorDiv {
                        Int(q)
                    } else {
                        Int(r)
                    }
                }
                BinOp::Pow => {
                    if y < 0 {
                        Float((x as f64).powf(y as f64))
                    } else {
                        let e = u32::try_from(y).map_err(|_| overflow())?;
                        Int(x.checked_pow(e).ok_or_else(overflow)?)
                    }
                }
                BinOp::BitAnd if matches!((a, b), (Bool(_), Bool(_))) => Bool(x & y != 0),
                BinOp::BitOr if matches!((a, b), (Bool(_), Bool(_))) => Bool(x | y != 0),
                BinOp::BitXor if matches!((a, b), (Bool(_), Bool(_))) => Bool(x ^ y != 0),
                BinOp::BitAnd => Int(x & y),
                BinOp::BitOr => Int(x | y),
                BinOp::BitXor => Int(x ^ y),
            });
        }
        if let (Some(x), Some(y)) = (a.as_float(), b.as_float()) {
            return Ok(match op {
                BinOp::Add => Float(x + y),
                BinOp::Sub => Float(x - y),
                BinOp::Mul => Float(x * y),
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(self.error("ZeroDivisionError", "float division by zero"));
                    }
                    Float(x / y)
                }
                BinOp::FloorDiv => {
                    if y == 0.0 {
                        return Err(self.error("ZeroDivisionError", "float floor division by zero"));
                    }
                    Float((x / y).floor())
                }
                BinOp::Mod => {
                    if y == 0.0 {
                        return Err(self.error("ZeroDivisionError", "float modulo"));
                    }
                    let r = x % y;
                    Float(if r != 0.0 && ((r < 0.0) != (y < 0.0)) { r + y } else { r })
                }
                BinOp::Pow => Float(x.powf(y)),
                _ => return Err(unsupported()),
            });
        }
        let repeat = |n: i64| n.max(0) as usize;
        Ok(match (op, a, b) {
            (BinOp::Add, Str(x), Str(y)) => Value::str(format!("{x}{y}")),
            (BinOp::Add, Str(_), _) => {
                return Err(self.type_error(format!("can only concatenate str (not \"{}\") to str", b.type_name())))
            }
            (BinOp::Add, List(x), List(y)) => {
                let mut v = x.borrow().clone();
                v.extend(y.borrow().iter().cloned());
                Value::list(v)
            }
            (BinOp::Add, List(_), _) => {
                return Err(self.type_error(format!("can only concatenate list (not \"{}\") to list", b.type_name())))
            }
            (BinOp::Add, Tuple(x), Tuple(y)) => {
                let mut v = x.as_ref().clone();
                v.extend(y.iter().cloned());
                Value::tuple(v)
            }
            (BinOp::Mul, Str(s), n) | (BinOp::Mul, n, Str(s)) if n.as_int().is_some() => {
                Value::str(s.repeat(repeat(n.as_int().unwrap())))
            }
            (BinOp::Mul, List(l), n) | (BinOp::Mul, n, List(l)) if n.as_int().is_some() => {
                let items = l.borrow();
                let count = repeat(n.as_int().unwrap());
                if items.len().saturating_mul(count) as u64 > self.step_limit {
                    return Err(self.error("MemoryError", ""));
                }
                let mut v = Vec::with_capacity(items.len() * count);
                for _ in 0..count {
                    v.extend(items.iter().cloned());
                }
                Value::list(v)
            }
            (BinOp::Mul, Tuple(t), n) | (BinOp::Mul, n, Tuple(t)) if n.as_int().is_some() => {
                let count = repeat(n.as_int().unwrap());
                let mut v = Vec::with_capacity(t.len() * count);
                for _ in 0..count {
                    v.extend(t.iter().cloned());
                }
                Value::tuple(v)
            }
            (BinOp::Mod, Str(fmt), args) => Value::str(self.percent_format(fmt, args)?),
            (BinOp::Sub | BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor, Set(x), Set(y)) => {
                let (x, y) = (x.borrow().clone(), y.borrow().clone());
                let items: Vec<Value> = match op {
                    BinOp::Sub => x.into_iter().filter(|v| !y.iter().any(|w| py_eq(v, w))).collect(),
                    BinOp::BitAnd => x.into_iter().filter(|v| y.iter().any(|w| py_eq(v, w))).collect(),
                    BinOp::BitOr => x.into_iter().chain(y).collect(),
                    _ => {
                        let left: Vec<Value> = x.iter().filter(|v| !y.iter().any(|w| py_eq(v, w))).cloned().collect();
                        let right: Vec<Value> = y.iter().filter(|v| !x.iter().any(|w| py_eq(v, w))).cloned().collect();
                        left.into_iter().chain(right).collect()
                    }
                };
                self.make_set(items)?
            }
            _ => return Err(unsupported()),
        })
    }

    fn percent_format(&mut self, fmt: &str, args: &Value) -> R<String> {
        let args: Vec<Value> = match args {
            Value::Tuple(t) => t.as_ref().clone(),
            v => vec![v.clone()],
        };
        let mut out = String::new();
        let mut it = args.into_iter();
        let mut chars = fmt.chars().peekable();
        while let Some(c) = chars.next() {
            if c != '%' {
                out.push(c);
                continue;
            }
            let mut spec = String::new();
            while let Some(&n) = chars.peek() {
                chars.next();
                if n.is_ascii_alphabetic() || n == '%' {
                    spec.push(n);
                    break;
                }
                spec.push(n);
            }
            if spec == "%" {
                out.push('%');
                continue;
            }
            let v = it
                .next()
                .ok_or_else(|| self.type_error("not enough arguments for format string"))?;
            let (body, conv) = spec.split_at(spec.len().saturating_sub(1));
            let s = match conv {
                "s" => self.format_spec(&Value::str(v.to_str()), body)?,
                "r" => v.repr(),
                "d" | "i" => self.format_spec(&v, &format!("{body}d"))?,
                "f" => self.format_spec(&v, &format!("{body}f"))?,
                _ => return Err(self.error("ValueError", format!("unsupported format character '{conv}'"))),
            };
            out.push_str(&s);
        }
        Ok(out)
    }

    /// A subset of the format mini-language: `[[fill]align][width][.prec][type]`.
    pub fn format_spec(&mut self, v: &Value, spec: &str) -> R<String> {
        let chars: Vec<char> = spec.chars().collect();
        let mut i = 0;
        let (mut fill, mut align) = (' ', None);
        if chars.len() >= 2 && matches!(chars[1], '<' | '>' | '^') {
            fill = chars[0];
            align = Some(chars[1]);
            i = 2;
        } else if !chars.is_empty() && matches!(chars[0], '<' | '>' | '^') {
            align = Some(chars[0]);
            i = 1;
        }
        if chars.get(i) == Some(&'0') && align.is_none() {
            fill = '0';
            align = Some('=');
            i += 1;
        }
        let mut width = 0usize;
        while let Some(d) = chars.get(i).and_then(|c| c.to_digit(10)) {
            width = width * 10 + d as usize;
            i += 1;
        }
        let mut precision = None;
        if chars.get(i) == Some(&'.') {
            i += 1;
            let mut p = 0usize;
            while let Some(d) = chars.get(i).and_then(|c| c.to_digit(10)) {
                p = p * 10 + d as usize;
                i += 1;
            }
            precision = Some(p);
        }
        let ty = chars.get(i).copied();
        let body = match (ty, v) {
            (Some('f'), _) | (None, Value::Float(_)) if precision.is_some() || ty == Some('f') => {
                let x = v
                    .as_float()
                    .ok_or_else(|| self.error("ValueError", format!("Unknown format code 'f' for object of type '{}'", v.type_name())))?;
                format!("{:.*}", precision.unwrap_or(6), x)
            }
            (Some('d'), _) => v
                .as_int()
                .map(|i| i.to_string())
                .ok_or_else(|| self.error("ValueError", format!("Unknown format code 'd' for object of type '{}'", v.type_name())))?,
            (Some('%'), _) => {
                let x = v.as_float().ok_or_else(|| self.type_error("bad value for %"))?;
                format!("{:.*}%", precision.unwrap_or(6), x * 100.0)
            }
            (_, Value::Str(s)) => match precision {
                Some(p) => s.chars().take(p).collect(),
                None => s.to_string(),
            },
            _ => v.to_str(),
        };
        let len = body.chars().count();
        if len >= width {
            return Ok(body);
        }
        let pad = width - len;
        let numeric = matches!(v, Value::Int(_) | Value::Float(_));
        Ok(match align.unwrap_or(if numeric { '>' } else { '<' }) {
            '<' => format!("{body}{}", fill.to_string().repeat(pad)),
            '^' => format!(
                "{}{body}{}",
                fill.to_string().repeat(pad / 2),
                fill.to_string().repeat(pad - pad / 2)
            ),
            '=' if body.starts_with('-') => format!("-{}{}", fill.to_string().repeat(pad), &body[1..]),
            _ => format!("{}{body}", fill.to_string().repeat(pad)),
        })
    }

    pub fn compare(&mut self, op: CmpOp, a: &Value, b: &Value) -> R<bool> {
        use std::cmp::Ordering::*;
        Ok(match op {
            CmpOp::Eq => py_eq(a, b),
            CmpOp::Ne => !py_eq(a, b),
            CmpOp::Is => py_is(a, b),
            CmpOp::IsNot => !py_is(a, b),
            CmpOp::In => self.contains(b, a)?,
            CmpOp::NotIn => !self.contains(b, a)?,
            _ => {
                let ord = self.order(a, b, op)?;
                match (op, ord) {
                    (_, None) => false,
                    (CmpOp::Lt, Some(o)) => o == Less,
                    (CmpOp::Le, Some(o)) => o != Greater,
                    (CmpOp::Gt, Some(o)) => o == Greater,
                    (CmpOp::Ge, Some(o)) => o != Less,
                    _ => unreachable!(),
                }
            }
        })
    }

    /// Ordering for `<` and friends; `None` when NaN is involved.
    pub fn order(&mut self, a: &Value, b: &Value, op: CmpOp) -> R<Option<std::cmp::Ordering>> {
        if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
            return Ok(Some(x.cmp(&y)));
        }
        if let (Some(x), Some(y)) = (a.as_float(), b.as_float()) {
            return Ok(x.partial_cmp(&y));
        }
        match (a, b) {
            (Value::Str(x), Value::Str(y)) => Ok(Some(x.cmp(y))),
            (Value::List(x), Value::List(y)) => {
                let (x, y) = (x.borrow().clone(), y.borrow().clone());
                self.order_seq(&x, &y, op)
            }
            (Value::Tuple(x), Value::Tuple(y)) => {
                let (x, y) = (x.clone(), y.clone());
                self.order_seq(&x, &y, op)
            }
            _ => Err(self.type_error(format!(
                "'{}' not supported between instances of '{}' and '{}'",
                op.symbol(),
                a.type_name(),
                b.type_name()
            ))),
        }
    }

    fn order_seq(&mut self, x: &[Value], y: &[Value], op: CmpOp) -> R<Option<std::cmp::Ordering>> {
        for (a, b) in x.iter().zip(y) {
            if !py_eq(a, b) {
                return self.order(a, b, op);
            }
        }
        Ok(Some(x.len().cmp(&y.len())))
    }

    pub fn contains(&mut self, container: &Value, item: &Value) -> R<bool> {
        Ok(match container {
            Value::Str(s) => match item {
                Value::Str(sub) => s.contains(&**sub),
                _ => {
                    return Err(self.type_error(format!(
                        "'in <string>' requires string as left operand, not {}",
                        item.type_name()
                    )))
                }
            },
            Value::List(l) | Value::Set(l) => l.borrow().iter().any(|v| py_eq(v, item)),
            Value::Tuple(t) => t.iter().any(|v| py_eq(v, item)),
            Value::Dict(d) => d.borrow().iter().any(|(k, _)| py_eq(k, item)),
            Value::Range(start, _, step) => match item.as_int() {
                Some(i) => {
                    let n = range_len(container);
                    let off = i - start;
                    off % step == 0 && (0..n).contains(&(off / step))
                }
                None => false,
            },
            _ => {
                return Err(self.type_error(format!(
                    "argument of type '{}' is not iterable",
                    container.type_name()
                )))
            }
        })
    }
}

fn merged_scope(f: &Frame) -> Scope {
    let mut m = HashMap::new();
    if let Some(c) = &f.closure {
        m.extend(c.borrow().iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    m.extend(f.locals.borrow().iter().map(|(k, v)| (k.clone(), v.clone())));
    Rc::new(RefCell::new(m))
}

pub fn builtin_value(name: &str) -> Option<Value> {
    if let Some(b) = crate::builtins::BUILTINS.iter().find(|b| **b == name) {
        return Some(Value::Builtin(b));
    }
    EXCEPTIONS.iter().find(|e| **e == name).map(|e| Value::ExcType((*e).into()))
}
