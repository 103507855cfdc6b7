//! Builtin functions and methods of the core value types.

use std::cell::RefCell;
use std::rc::Rc;

use crate::ast::CmpOp;
use crate::interp::{Interpreter, R};
use crate::value::{py_eq, Value};

pub const BUILTINS: &[&str] = &[
    "print", "len", "range", "str", "int", "float", "bool", "abs", "min", "max", "sum", "sorted", "reversed",
    "enumerate", "zip", "list", "tuple", "dict", "set", "repr", "any", "all", "round", "ord", "chr", "isinstance",
    "map", "filter", "divmod", "type", "input", "pow", "hash", "iter",
];

const LIST_METHODS: &[&str] = &[
    "append", "pop", "insert", "extend", "index", "count", "remove", "reverse", "sort", "copy", "clear",
];
const STR_METHODS: &[&str] = &[
    "join", "split", "strip", "lstrip", "rstrip", "lower", "upper", "startswith", "endswith", "replace", "find",
    "index", "count", "isdigit", "isalpha", "isalnum", "isspace", "isupper", "islower", "format", "title",
    "capitalize", "splitlines",
];
const DICT_METHODS: &[&str] = &[
    "get", "keys", "values", "items", "pop", "setdefault", "update", "copy", "clear",
];
const SET_METHODS: &[&str] = &[
    "add", "remove", "discard", "pop", "copy", "clear", "union", "intersection", "difference", "update",
    "issubset",
];
const TUPLE_METHODS: &[&str] = &["index", "count"];

pub fn has_method(v: &Value, name: &str) -> bool {
    let table = match v {
        Value::List(_) => LIST_METHODS,
        Value::Str(_) => STR_METHODS,
        Value::Dict(_) => DICT_METHODS,
        Value::Set(_) => SET_METHODS,
        Value::Tuple(_) => TUPLE_METHODS,
        Value::Stream(_) => &["write", "flush"],
        _ => &[],
    };
    table.contains(&name)
}

fn type_matches(v: &Value, ty: &Value) -> bool {
    match ty {
        Value::Builtin(name) => match *name {
            "int" => matches!(v, Value::Int(_) | Value::Bool(_)),
            other => v.type_name() == other,
        },
        Value::ExcType(kind) => matches!(v, Value::Exception(k, _) if k == kind),
        Value::Tuple(options) => options.iter().any(|t| type_matches(v, t)),
        _ => false,
    }
}

fn kwarg(kwargs: &mut Vec<(Rc<str>, Value)>, name: &str) -> Option<Value> {
    let pos = kwargs.iter().position(|(k, _)| &**k == name)?;
    Some(kwargs.remove(pos).1)
}

impl Interpreter {
    fn arity(&self, name: &str, args: &[Value], min: usize, max: usize) -> R<()> {
        if args.len() < min || args.len() > max {
            let expected = if min == max {
                format!("exactly {min}")
            } else {
                format!("{min} to {max}")
            };
            return Err(self.type_error(format!(
                "{name}() takes {expected} argument(s) ({} given)",
                args.len()
            )));
        }
        Ok(())
    }

    fn no_kwargs(&self, name: &str, kwargs: &[(Rc<str>, Value)]) -> R<()> {
        match kwargs.first() {
            Some((k, _)) => Err(self.type_error(format!("{name}() got an unexpected keyword argument '{k}'"))),
            None => Ok(()),
        }
    }

    fn int_arg(&self, name: &str, v: &Value) -> R<i64> {
        v.as_int().ok_or_else(|| {
            self.type_error(format!(
                "{name}: '{}' object cannot be interpreted as an integer",
                v.type_name()
            ))
        })
    }

    /// Stable sort with Python comparison semantics and an optional key.
    pub fn sort_values(&mut self, items: Vec<Value>, key: Option<Value>, reverse: bool) -> R<Vec<Value>> {
        let keys = match &key {
            Some(k) if !matches!(k, Value::None) => {
                let mut keys = Vec::with_capacity(items.len());
                for v in &items {
                    keys.push(self.call(k.clone(), vec![v.clone()], Vec::new())?);
                }
                keys
            }
            _ => items.clone(),
        };
        let mut idx: Vec<usize> = (0..items.len()).collect();
        let mut failure = None;
        // Insertion-free merge sort via std; errors are captured and surfaced after.
        idx.sort_by(|&a, &b| {
            if failure.is_some() {
                return std::cmp::Ordering::Equal;
            }
            let (x, y) = if reverse { (&keys[b], &keys[a]) } else { (&keys[a], &keys[b]) };
            match self.order(x, y, CmpOp::Lt) {
                Ok(o) => o.unwrap_or(std::cmp::Ordering::Equal),
                Err(e) => {
                    failure = Some(e);
                    std::cmp::Ordering::Equal
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(idx.into_iter().map(|i| items[i].clone()).collect())
    }

    fn extreme(&mut self, name: &str, args: Vec<Value>, mut kwargs: Vec<(Rc<str>, Value)>) -> R<Value> {
        let key = kwarg(&mut kwargs, "key");
        let default = kwarg(&mut kwargs, "default");
        self.no_kwargs(name, &kwargs)?;
        let items = match args.len() {
            0 => return Err(self.type_error(format!("{name} expected at least 1 argument, got 0"))),
            1 => self.iterate(&args[0])?,
            _ => args,
        };
        if items.is_empty() {
            return default.ok_or_else(|| self.error("ValueError", format!("{name}() iterable argument is empty")));
        }
        let mut best = items[0].clone();
        let key_of = |me: &mut Self, v: &Value| -> R<Value> {
            match &key {
                Some(k) if !matches!(k, Value::None) => me.call(k.clone(), vec![v.clone()], Vec::new()),
                _ => Ok(v.clone()),
            }
        };
        let mut best_key = key_of(self, &best)?;
        for v in items.into_iter().skip(1) {
            let k = key_of(self, &v)?;
            let better = if name == "min" {
                self.compare(CmpOp::Lt, &k, &best_key)?
            } else {
                self.compare(CmpOp::Gt, &k, &best_key)?
            };
            if better {
                best = v;
                best_key = k;
            }
        }
        Ok(best)
    }

    pub fn call_builtin(&mut self, name: &'static str, args: Vec<Value>, mut kwargs: Vec<(Rc<str>, Value)>) -> R<Value> {
        match name {
            "print" => {
                let sep = kwarg(&mut kwargs, "sep").map(|v| v.to_str()).unwrap_or_else(|| " ".into());
                let end = kwarg(&mut kwargs, "end").map(|v| v.to_str()).unwrap_or_else(|| "\n".into());
                let file = kwarg(&mut kwargs, "file");
                kwarg(&mut kwargs, "flush");
                self.no_kwargs(name, &kwargs)?;
                let text = args.iter().map(Value::to_str).collect::<Vec<_>>().join(&sep) + &end;
                match file {
                    Some(Value::Stream(true)) => self.stderr.push_str(&text),
                    None | Some(Value::None) | Some(Value::Stream(false)) => self.stdout.push_str(&text),
                    Some(other) => {
                        return Err(self.error(
                            "AttributeError",
                            format!("'{}' object has no attribute 'write'", other.type_name()),
                        ))
                    }
                }
                return Ok(Value::None);
            }
            "sorted" => {
                let key = kwarg(&mut kwargs, "key");
                let reverse = kwarg(&mut kwargs, "reverse").is_some_and(|v| v.truthy());
                self.no_kwargs(name, &kwargs)?;
                self.arity(name, &args, 1, 1)?;
                let items = self.iterate(&args[0])?;
                return Ok(Value::list(self.sort_values(items, key, reverse)?));
            }
            "min" | "max" => return self.extreme(name, args, kwargs),
            "enumerate" => {
                let start = match kwarg(&mut kwargs, "start") {
                    Some(v) => self.int_arg(name, &v)?,
                    None if args.len() == 2 => self.int_arg(name, &args[1])?,
                    None => 0,
                };
                self.no_kwargs(name, &kwargs)?;
                self.arity(name, &args, 1, 2)?;
                let items = self.iterate(&args[0])?;
                return Ok(Value::list(
                    items
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| Value::tuple(vec![Value::Int(start + i as i64), v]))
                        .collect(),
                ));
            }
            "sum" => {
                let start = kwarg(&mut kwargs, "start");
                self.no_kwargs(name, &kwargs)?;
                self.arity(name, &args, 1, 2)?;
                let mut acc = args.get(1).cloned().or(start).unwrap_or(Value::Int(0));
                for v in self.iterate(&args[0])? {
                    acc = self.binop(crate::ast::BinOp::Add, &acc, &v)?;
                }
                return Ok(acc);
            }
            "dict" => {
                let d = Value::Dict(Rc::new(RefCell::new(Vec::new())));
                self.arity(name, &args, 0, 1)?;
                if let Some(src) = args.first() {
                    let pairs = match src {
                        Value::Dict(m) => m.borrow().iter().map(|(k, v)| Value::tuple(vec![k.clone(), v.clone()])).collect(),
                        other => self.iterate(other)?,
                    };
                    for p in pairs {
                        let kv = self.iterate(&p)?;
                        if kv.len() != 2 {
                            return Err(self.error("ValueError", "dictionary update sequence element has wrong length"));
                        }
                        self.set_item(&d, kv[0].clone(), kv[1].clone())?;
                    }
                }
                for (k, v) in kwargs {
                    self.set_item(&d, Value::Str(k), v)?;
                }
                return Ok(d);
            }
            _ => {}
        }
        self.no_kwargs(name, &kwargs)?;
        Ok(match name {
            "len" => {
                self.arity(name, &args, 1, 1)?;
                let n = match &args[0] {
                    Value::Str(s) => s.chars().count(),
                    Value::List(l) | Value::Set(l) => l.borrow().len(),
                    Value::Tuple(t) => t.len(),
                    Value::Dict(d) => d.borrow().len(),
                    r @ Value::Range(..) => crate::value::range_len(r) as usize,
                    v => return Err(self.type_error(format!("object of type '{}' has no len()", v.type_name()))),
                };
                Value::Int(n as i64)
            }
            "range" => {
                self.arity(name, &args, 1, 3)?;
                let mut ints = Vec::with_capacity(args.len());
                for a in &args {
                    ints.push(self.int_arg(name, a)?);
                }
                match ints[..] {
                    [stop] => Value::Range(0, stop, 1),
                    [start, stop] => Value::Range(start, stop, 1),
                    [start, stop, step] => {
                        if step == 0 {
                            return Err(self.error("ValueError", "range() arg 3 must not be zero"));
                        }
                        Value::Range(start, stop, step)
                    }
                    _ => unreachable!(),
                }
            }
            "str" => {
                self.arity(name, &args, 0, 1)?;
                Value::str(args.first().map(Value::to_str).unwrap_or_default())
            }
            "repr" => {
                self.arity(name, &args, 1, 1)?;
                Value::str(args[0].repr())
            }
            "int" => {
                self.arity(name, &args, 0, 2)?;
                match args.first() {
                    None => Value::Int(0),
                    Some(Value::Str(s)) => {
                        let base = match args.get(1) {
                            Some(b) => self.int_arg(name, b)? as u32,
                            None => 10,
                        };
                        let t = s.trim().replace('_', "");
                        i64::from_str_radix(&t, base).map(Value::Int).map_err(|_| {
                            self.error(
                                "ValueError",
                                format!("invalid literal for int() with base {base}: {}", args[0].repr()),
                            )
                        })?
                    }
                    Some(Value::Float(x)) => {
                        if !x.is_finite() {
                            return Err(self.error("ValueError", "cannot convert float NaN or infinity to integer"));
                        }
                        Value::Int(x.trunc() as i64)
                    }
                    Some(v) => Value::Int(v.as_int().ok_or_else(|| {
                        self.type_error(format!(
                            "int() argument must be a string or a number, not '{}'",
                            v.type_name()
                        ))
                    })?),
                }
            }
            "float" => {
                self.arity(name, &args, 0, 1)?;
                match args.first() {
                    None => Value::Float(0.0),
                    Some(Value::Str(s)) => {
                        let t = s.trim().to_ascii_lowercase();
                        let parsed = match t.as_str() {
                            "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
                            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
                            "nan" => Some(f64::NAN),
                            _ => t.parse::<f64>().ok(),
                        };
                        Value::Float(parsed.ok_or_else(|| {
                            self.error("ValueError", format!("could not convert string to float: {}", args[0].repr()))
                        })?)
                    }
                    Some(v) => Value::Float(v.as_float().ok_or_else(|| {
                        self.type_error(format!("float() argument must be a string or a number, not '{}'", v.type_name()))
                    })?),
                }
            }
            "bool" => {
                self.arity(name, &args, 0, 1)?;
                Value::Bool(args.first().is_some_and(Value::truthy))
            }
            "abs" => {
                self.arity(name, &args, 1, 1)?;
                match &args[0] {
                    Value::Float(x) => Value::Float(x.abs()),
                    v => Value::Int(
                        self.int_arg(name, v)?
                            .checked_abs()
                            .ok_or_else(|| self.error("OverflowError", "integer overflow"))?,
                    ),
                }
            }
            "round" => {
                self.arity(name, &args, 1, 2)?;
                let digits = match args.get(1) {
                    Some(Value::None) | None => None,
                    Some(d) => Some(self.int_arg(name, d)?),
                };
                match (&args[0], digits) {
                    (Value::Float(x), None) => Value::Int(x.round_ties_even() as i64),
                    (Value::Float(x), Some(d)) => {
                        let p = 10f64.powi(d as i32);
                        Value::Float((x * p).round_ties_even() / p)
                    }
                    (v, _) => Value::Int(self.int_arg(name, v)?),
                }
            }
            "reversed" => {
                self.arity(name, &args, 1, 1)?;
                let mut items = self.iterate(&args[0])?;
                items.reverse();
                Value::list(items)
            }
            "zip" => {
                let mut cols = Vec::with_capacity(args.len());
                for a in &args {
                    cols.push(self.iterate(a)?);
                }
                let n = cols.iter().map(Vec::len).min().unwrap_or(0);
                Value::list(
                    (0..n)
                        .map(|i| Value::tuple(cols.iter().map(|c| c[i].clone()).collect()))
                        .collect(),
                )
            }
            "list" | "iter" => {
                self.arity(name, &args, 0, 1)?;
                match args.first() {
                    Some(a) => Value::list(self.iterate(a)?),
                    None => Value::list(Vec::new()),
                }
            }
            "tuple" => {
                self.arity(name, &args, 0, 1)?;
                match args.first() {
                    Some(a) => Value::tuple(self.iterate(a)?),
                    None => Value::tuple(Vec::new()),
                }
            }
            "set" => {
                self.arity(name, &args, 0, 1)?;
                let items = match args.first() {
                    Some(a) => self.iterate(a)?,
                    None => Vec::new(),
                };
                self.make_set(items)?
            }
            "any" | "all" => {
                self.arity(name, &args, 1, 1)?;
                let items = self.iterate(&args[0])?;
                Value::Bool(if name == "any" {
                    items.iter().any(Value::truthy)
                } else {
                    items.iter().all(Value::truthy)
                })
            }
            "ord" => {
                self.arity(name, &args, 1, 1)?;
                match &args[0] {
                    Value::Str(s) if s.chars().count() == 1 => Value::Int(s.chars().next().unwrap() as i64),
                    v => {
                        return Err(self.type_error(format!(
                            "ord() expected a character, but string of length {} found",
                            match v {
                                Value::Str(s) => s.chars().count(),
                                _ => 0,
                            }
                        )))
                    }
                }
            }
            "chr" => {
                self.arity(name, &args, 1, 1)?;
                let i = self.int_arg(name, &args[0])?;
                let c = u32::try_from(i)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| self.error("ValueError", "chr() arg not in range(0x110000)"))?;
                Value::str(c.to_string())
            }
            "isinstance" => {
                self.arity(name, &args, 2, 2)?;
                Value::Bool(type_matches(&args[0], &args[1]))
            }
            "type" => {
                self.arity(name, &args, 1, 1)?;
                match builtin_type(args[0].type_name()) {
                    Some(b) => Value::Builtin(b),
                    None => Value::str(args[0].type_name()),
                }
            }
            "map" => {
                self.arity(name, &args, 2, 2)?;
                let mut out = Vec::new();
                for v in self.iterate(&args[1])? {
                    out.push(self.call(args[0].clone(), vec![v], Vec::new())?);
                }
                Value::list(out)
            }
            "filter" => {
                self.arity(name, &args, 2, 2)?;
                let mut out = Vec::new();
                for v in self.iterate(&args[1])? {
                    let keep = match &args[0] {
                        Value::None => v.truthy(),
                        f => self.call(f.clone(), vec![v.clone()], Vec::new())?.truthy(),
                    };
                    if keep {
                        out.push(v);
                    }
                }
                Value::list(out)
            }
            "divmod" => {
                self.arity(name, &args, 2, 2)?;
                let q = self.binop(crate::ast::BinOp::FloorDiv, &args[0], &args[1])?;
                let r = self.binop(crate::ast::BinOp::Mod, &args[0], &args[1])?;
                Value::tuple(vec![q, r])
            }
            "pow" => {
                self.arity(name, &args, 2, 2)?;
                self.binop(crate::ast::BinOp::Pow, &args[0], &args[1])?
            }
            "hash" => {
                self.arity(name, &args, 1, 1)?;
                if !args[0].is_hashable() {
                    return Err(self.type_error(format!("unhashable type: '{}'", args[0].type_name())));
                }
                let mut h: i64 = 0;
                for b in args[0].repr().bytes() {
                    h = h.wrapping_mul(31).wrapping_add(b as i64);
                }
                Value::Int(h)
            }
            "input" => return Err(self.error("EOFError", "EOF when reading a line")),
            "math.sqrt" => {
                self.arity("sqrt", &args, 1, 1)?;
                let x = self.float_arg(&args[0])?;
                if x < 0.0 {
                    return Err(self.error("ValueError", "math domain error"));
                }
                Value::Float(x.sqrt())
            }
            "math.floor" | "math.ceil" => {
                self.arity(name, &args, 1, 1)?;
                let x = self.float_arg(&args[0])?;
                Value::Int(if name == "math.floor" { x.floor() } else { x.ceil() } as i64)
            }
            "math.isclose" => {
                self.arity("isclose", &args, 2, 2)?;
                let (a, b) = (self.float_arg(&args[0])?, self.float_arg(&args[1])?);
                Value::Bool(a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()))
            }
            other => return Err(self.type_error(format!("'{other}' is not callable"))),
        })
    }

    fn float_arg(&self, v: &Value) -> R<f64> {
        v.as_float()
            .ok_or_else(|| self.type_error(format!("must be real number, not {}", v.type_name())))
    }

    pub fn call_method(
        &mut self,
        recv: &Value,
        name: &str,
        args: Vec<Value>,
        mut kwargs: Vec<(Rc<str>, Value)>,
    ) -> R<Value> {
        if let (Value::List(l), "sort") = (recv, name) {
            let key = kwarg(&mut kwargs, "key");
            let reverse = kwarg(&mut kwargs, "reverse").is_some_and(|v| v.truthy());
            self.no_kwargs(name, &kwargs)?;
            let items = l.borrow().clone();
            let sorted = self.sort_values(items, key, reverse)?;
            *l.borrow_mut() = sorted;
            return Ok(Value::None);
        }
        self.no_kwargs(name, &kwargs)?;
        match recv {
            Value::List(l) => self.list_method(l, name, args),
            Value::Str(s) => self.str_method(s, name, args),
            Value::Dict(d) => self.dict_method(recv, d, name, args),
            Value::Set(s) => self.set_method(s, name, args),
            Value::Tuple(t) => self.seq_query(t, name, &args),
            Value::Stream(err) => {
                if name == "write" {
                    self.arity(name, &args, 1, 1)?;
                    let text = args[0].to_str();
                    if *err {
                        self.stderr.push_str(&text);
                    } else {
                        self.stdout.push_str(&text);
                    }
                    Ok(Value::Int(text.chars().count() as i64))
                } else {
                    Ok(Value::None)
                }
            }
            _ => Err(self.error(
                "AttributeError",
                format!("'{}' object has no attribute '{name}'", recv.type_name()),
            )),
        }
    }

    fn seq_query(&mut self, items: &[Value], name: &str, args: &[Value]) -> R<Value> {
        self.arity(name, args, 1, 1)?;
        match name {
            "index" => items
                .iter()
                .position(|v| py_eq(v, &args[0]))
                .map(|i| Value::Int(i as i64))
                .ok_or_else(|| self.error("ValueError", format!("{} is not in list", args[0].repr()))),
            _ => Ok(Value::Int(items.iter().filter(|v| py_eq(v, &args[0])).count() as i64)),
        }
    }

    fn list_method(&mut self, l: &Rc<RefCell<Vec<Value>>>, name: &str, args: Vec<Value>) -> R<Value> {
        Ok(match name {
            "append" => {
                self.arity(name, &args, 1, 1)?;
                l.borrow_mut().push(args.into_iter().next().unwrap());
                Value::None
            }
            "pop" => {
                self.arity(name, &args, 0, 1)?;
                let len = l.borrow().len();
                if len == 0 {
                    return Err(self.error("IndexError", "pop from empty list"));
                }
                let i = match args.first() {
                    Some(v) => {
                        let i = self.int_arg(name, v)?;
                        let idx = if i < 0 { i + len as i64 } else { i };
                        if idx < 0 || idx >= len as i64 {
                            return Err(self.error("IndexError", "pop index out of range"));
                        }
                        idx as usize
                    }
                    None => len - 1,
                };
                l.borrow_mut().remove(i)
            }
            "insert" => {
                self.arity(name, &args, 2, 2)?;
                let len = l.borrow().len() as i64;
                let i = self.int_arg(name, &args[0])?;
                let idx = if i < 0 { (i + len).max(0) } else { i.min(len) };
                l.borrow_mut().insert(idx as usize, args[1].clone());
                Value::None
            }
            "extend" => {
                self.arity(name, &args, 1, 1)?;
                let items = self.iterate(&args[0])?;
                l.borrow_mut().extend(items);
                Value::None
            }
            "remove" => {
                self.arity(name, &args, 1, 1)?;
                let pos = l.borrow().iter().position(|v| py_eq(v, &args[0]));
                match pos {
                    Some(p) => {
                        l.borrow_mut().remove(p);
                    }
                    None => return Err(self.error("ValueError", "list.remove(x): x not in list")),
                }
                Value::None
            }
            "reverse" => {
                l.borrow_mut().reverse();
                Value::None
            }
            "copy" => Value::list(l.borrow().clone()),
            "clear" => {
                l.borrow_mut().clear();
                Value::None
            }
            _ => {
                let items = l.borrow().clone();
                self.seq_query(&items, name, &args)?
            }
        })
    }

    fn str_method(&mut self, s: &Rc<str>, name: &str, args: Vec<Value>) -> R<Value> {
        let str_arg = |me: &Self, i: usize| -> R<Rc<str>> {
            match args.get(i) {
                Some(Value::Str(x)) => Ok(x.clone()),
                Some(v) => Err(me.type_error(format!("must be str, not {}", v.type_name()))),
                None => Err(me.type_error(format!("{name}() missing required argument"))),
            }
        };
        Ok(match name {
            "join" => {
                self.arity(name, &args, 1, 1)?;
                let mut parts = Vec::new();
                for v in self.iterate(&args[0])? {
                    match v {
                        Value::Str(p) => parts.push(p.to_string()),
                        other => {
                            return Err(self.type_error(format!(
                                "sequence item {}: expected str instance, {} found",
                                parts.len(),
                                other.type_name()
                            )))
                        }
                    }
                }
                Value::str(parts.join(s))
            }
            "split" => {
                self.arity(name, &args, 0, 1)?;
                let parts: Vec<Value> = match args.first() {
                    None | Some(Value::None) => s.split_whitespace().map(Value::str).collect(),
                    Some(_) => {
                        let sep = str_arg(self, 0)?;
                        if sep.is_empty() {
                            return Err(self.error("ValueError", "empty separator"));
                        }
                        s.split(&*sep).map(Value::str).collect()
                    }
                };
                Value::list(parts)
            }
            "splitlines" => Value::list(s.lines().map(Value::str).collect()),
            "strip" | "lstrip" | "rstrip" => {
                self.arity(name, &args, 0, 1)?;
                let chars: Option<Vec<char>> = match args.first() {
                    None | Some(Value::None) => None,
                    Some(_) => Some(str_arg(self, 0)?.chars().collect()),
                };
                let pred = |c: char| match &chars {
                    Some(set) => set.contains(&c),
                    None => c.is_whitespace(),
                };
                Value::str(match name {
                    "strip" => s.trim_matches(pred),
                    "lstrip" => s.trim_start_matches(pred),
                    _ => s.trim_end_matches(pred),
                })
            }
            "lower" => Value::str(s.to_lowercase()),
            "upper" => Value::str(s.to_uppercase()),
            "title" => {
                let mut out = String::new();
                let mut prev_alpha = false;
                for c in s.chars() {
                    if prev_alpha {
                        out.extend(c.to_lowercase());
                    } else {
                        out.extend(c.to_uppercase());
                    }
                    prev_alpha = c.is_alphabetic();
                }
                Value::str(out)
            }
            "capitalize" => {
                let mut chars = s.chars();
                Value::str(match chars.next() {
                    Some(c) => c.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect::<String>(),
                    None => String::new(),
                })
            }
            "startswith" | "endswith" => {
                self.arity(name, &args, 1, 1)?;
                let options: Vec<Value> = match &args[0] {
                    Value::Tuple(t) => t.as_ref().clone(),
                    v => vec![v.clone()],
                };
                let mut hit = false;
                for o in options {
                    let Value::Str(p) = o else {
                        return Err(self.type_error(format!("{name} first arg must be str or a tuple of str")));
                    };
                    hit |= if name == "startswith" { s.starts_with(&*p) } else { s.ends_with(&*p) };
                }
                Value::Bool(hit)
            }
            "replace" => {
                self.arity(name, &args, 2, 2)?;
                let (from, to) = (str_arg(self, 0)?, str_arg(self, 1)?);
                Value::str(s.replace(&*from, &to))
            }
            "find" | "index" => {
                self.arity(name, &args, 1, 1)?;
                let sub = str_arg(self, 0)?;
                match s.find(&*sub) {
                    Some(b) => Value::Int(s[..b].chars().count() as i64),
                    None if name == "find" => Value::Int(-1),
                    None => return Err(self.error("ValueError", "substring not found")),
                }
            }
            "count" => {
                self.arity(name, &args, 1, 1)?;
                let sub = str_arg(self, 0)?;
                Value::Int(if sub.is_empty() {
                    s.chars().count() as i64 + 1
                } else {
                    s.matches(&*sub).count() as i64
                })
            }
            "isdigit" => Value::Bool(!s.is_empty() && s.chars().all(|c| c.is_ascii_digit())),
            "isalpha" => Value::Bool(!s.is_empty() && s.chars().all(char::is_alphabetic)),
            "isalnum" => Value::Bool(!s.is_empty() && s.chars().all(char::is_alphanumeric)),
            "isspace" => Value::Bool(!s.is_empty() && s.chars().all(char::is_whitespace)),
            "isupper" => Value::Bool(s.chars().any(char::is_alphabetic) && !s.chars().any(char::is_lowercase)),
            "islower" => Value::Bool(s.chars().any(char::is_alphabetic) && !s.chars().any(char::is_uppercase)),
            "format" => Value::str(self.str_format(s, &args)?),
            _ => return Err(self.error("AttributeError", format!("'str' object has no attribute '{name}'"))),
        })
    }

    fn str_format(&mut self, fmt: &str, args: &[Value]) -> R<String> {
        let mut out = String::new();
        let mut auto = 0;
        let mut chars = fmt.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    out.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    out.push('}');
                }
                '{' => {
                    let mut field = String::new();
                    for n in chars.by_ref() {
                        if n == '}' {
                            break;
                        }
                        field.push(n);
                    }
                    let (name, spec) = field.split_once(':').unwrap_or((&field, ""));
                    let idx = if name.is_empty() {
                        auto += 1;
                        auto - 1
                    } else {
                        name.parse::<usize>()
                            .map_err(|_| self.error("KeyError", format!("'{name}'")))?
                    };
                    let v = args
                        .get(idx)
                        .cloned()
                        .ok_or_else(|| self.error("IndexError", "Replacement index out of range"))?;
                    let text = if spec.is_empty() { v.to_str() } else { self.format_spec(&v, spec)? };
                    out.push_str(&text);
                }
                c => out.push(c),
            }
        }
        Ok(out)
    }

    fn dict_method(&mut self, recv: &Value, d: &Rc<RefCell<Vec<(Value, Value)>>>, name: &str, args: Vec<Value>) -> R<Value> {
        let find = |key: &Value| d.borrow().iter().position(|(k, _)| py_eq(k, key));
        Ok(match name {
            "get" => {
                self.arity(name, &args, 1, 2)?;
                match find(&args[0]) {
                    Some(i) => d.borrow()[i].1.clone(),
                    None => args.get(1).cloned().unwrap_or(Value::None),
                }
            }
            "keys" => Value::list(d.borrow().iter().map(|(k, _)| k.clone()).collect()),
            "values" => Value::list(d.borrow().iter().map(|(_, v)| v.clone()).collect()),
            "items" => Value::list(
                d.borrow()
                    .iter()
                    .map(|(k, v)| Value::tuple(vec![k.clone(), v.clone()]))
                    .collect(),
            ),
            "pop" => {
                self.arity(name, &args, 1, 2)?;
                match find(&args[0]) {
                    Some(i) => d.borrow_mut().remove(i).1,
                    None => match args.get(1) {
                        Some(v) => v.clone(),
                        None => return Err(self.error("KeyError", args[0].repr())),
                    },
                }
            }
            "setdefault" => {
                self.arity(name, &args, 1, 2)?;
                match find(&args[0]) {
                    Some(i) => d.borrow()[i].1.clone(),
                    None => {
                        let v = args.get(1).cloned().unwrap_or(Value::None);
                        self.set_item(recv, args[0].clone(), v.clone())?;
                        v
                    }
                }
            }
            "update" => {
                self.arity(name, &args, 1, 1)?;
                let pairs: Vec<(Value, Value)> = match &args[0] {
                    Value::Dict(o) => o.borrow().clone(),
                    other => {
                        let mut pairs = Vec::new();
                        for p in self.iterate(other)? {
                            let kv = self.iterate(&p)?;
                            if kv.len() != 2 {
                                return Err(self.error("ValueError", "dictionary update sequence element has wrong length"));
                            }
                            pairs.push((kv[0].clone(), kv[1].clone()));
                        }
                        pairs
                    }
                };
                for (k, v) in pairs {
                    self.set_item(recv, k, v)?;
                }
                Value::None
            }
            "copy" => Value::Dict(Rc::new(RefCell::new(d.borrow().clone()))),
            "clear" => {
                d.borrow_mut().clear();
                Value::None
            }
            _ => return Err(self.error("AttributeError", format!("'dict' object has no attribute '{name}'"))),
        })
    }

    fn set_method(&mut self, s: &Rc<RefCell<Vec<Value>>>, name: &str, args: Vec<Value>) -> R<Value> {
        let pos = |v: &Value| s.borrow().iter().position(|w| py_eq(w, v));
        Ok(match name {
            "add" => {
                self.arity(name, &args, 1, 1)?;
                if !args[0].is_hashable() {
                    return Err(self.type_error(format!("unhashable type: '{}'", args[0].type_name())));
                }
                if pos(&args[0]).is_none() {
                    s.borrow_mut().push(args[0].clone());
                }
                Value::None
            }
            "remove" | "discard" => {
                self.arity(name, &args, 1, 1)?;
                match pos(&args[0]) {
                    Some(i) => {
                        s.borrow_mut().remove(i);
                    }
                    None if name == "remove" => return Err(self.error("KeyError", args[0].repr())),
                    None => {}
                }
                Value::None
            }
            "pop" => {
                if s.borrow().is_empty() {
                    return Err(self.error("KeyError", "'pop from an empty set'"));
                }
                s.borrow_mut().remove(0)
            }
            "copy" => Value::Set(Rc::new(RefCell::new(s.borrow().clone()))),
            "clear" => {
                s.borrow_mut().clear();
                Value::None
            }
            "update" => {
                self.arity(name, &args, 1, 1)?;
                for v in self.iterate(&args[0])? {
                    if pos(&v).is_none() {
                        s.borrow_mut().push(v);
                    }
                }
                Value::None
            }
            "issubset" => {
                self.arity(name, &args, 1, 1)?;
                let other = self.iterate(&args[0])?;
                Value::Bool(s.borrow().iter().all(|v| other.iter().any(|w| py_eq(v, w))))
            }
            _ => {
                self.arity(name, &args, 1, 1)?;
                let items = self.iterate(&args[0])?;
                let other = self.make_set(items)?;
                let op = match name {
                    "union" => crate::ast::BinOp::BitOr,
                    "intersection" => crate::ast::BinOp::BitAnd,
                    _ => crate::ast::BinOp::Sub,
                };
                self.binop(op, &Value::Set(s.clone()), &other)?
            }
        })
    }
}

fn builtin_type(name: &str) -> Option<&'static str> {
    ["int", "float", "str", "bool", "list", "tuple", "dict", "set"]
        .into_iter()
        .find(|t| *t == name)
}
