//! Single-line lexer for Python-style source, good enough for rewriting
//! individual lines. It does not track multi-line strings.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Name,
    Number,
    Str,
    Op,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tok {
    pub kind: TokKind,
    pub text: String,
    /// Byte offset of the token in the line.
    pub start: usize,
}

impl Tok {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokKind::Op && self.text == op
    }

    pub fn is_name(&self, name: &str) -> bool {
        self.kind == TokKind::Name && self.text == name
    }
}

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is",
    "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

pub const BUILTINS: &[&str] = &[
    "abs", "all", "any", "bool", "dict", "enumerate", "float", "int", "len", "list", "max", "min",
    "print", "range", "repr", "reversed", "round", "set", "sorted", "str", "sum", "tuple", "zip",
    "sys",
];

const THREE_CHAR_OPS: &[&str] = &["//=", "**=", "..."];
const TWO_CHAR_OPS: &[&str] = &[
    "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "//", "**", "->",
];

pub fn tokenize(line: &str) -> Vec<Tok> {
    let bytes = line.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c == '#' {
            i = bytes.len();
            TokKind::Comment
        } else if c == '"' || c == '\'' {
            i += 1;
            while i < bytes.len() && bytes[i] as char != c {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(bytes.len());
            TokKind::Str
        } else if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.' || bytes[i] == b'_') {
                i += 1;
            }
            TokKind::Number
        } else if c.is_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] >= 0x80) {
                i += 1;
            }
            TokKind::Name
        } else {
            let rest = &line[i..];
            let len = THREE_CHAR_OPS
                .iter()
                .chain(TWO_CHAR_OPS)
                .find(|op| rest.starts_with(**op))
                .map(|op| op.len())
                .unwrap_or_else(|| c.len_utf8());
            i += len;
            TokKind::Op
        };
        // Strings that contain an f/r prefix are lexed as name + string; merge.
        if kind == TokKind::Str {
            if let Some(prev) = toks.last() {
                let prev: &Tok = prev;
                if prev.kind == TokKind::Name
                    && prev.end() == start
                    && matches!(prev.text.to_ascii_lowercase().as_str(), "f" | "r" | "b" | "rb" | "br" | "fr" | "rf")
                {
                    let prev = toks.pop().expect("checked above");
                    toks.push(Tok {
                        kind: TokKind::Str,
                        text: line[prev.start..i].to_string(),
                        start: prev.start,
                    });
                    continue;
                }
            }
        }
        toks.push(Tok {
            kind,
            text: line[start..i].to_string(),
            start,
        });
    }
    toks
}

pub fn indentation(line: &str) -> &str {
    let trimmed = line.trim_start();
    &line[..line.len() - trimmed.len()]
}

/// Code tokens only (comments dropped).
pub fn code_tokens(line: &str) -> Vec<Tok> {
    tokenize(line)
        .into_iter()
        .filter(|t| t.kind != TokKind::Comment)
        .collect()
}

pub fn is_block_header(line: &str) -> bool {
    code_tokens(line).last().is_some_and(|t| t.is_op(":"))
}

pub fn first_keyword(line: &str) -> Option<String> {
    code_tokens(line)
        .first()
        .filter(|t| t.kind == TokKind::Name)
        .map(|t| t.text.clone())
}

/// Variable-like names: not keywords or builtins, not called, not
/// attribute names, not keyword-argument names. Order of first use.
pub fn variable_names(tokens: &[Tok]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokKind::Name || KEYWORDS.contains(&t.text.as_str()) || BUILTINS.contains(&t.text.as_str()) {
            continue;
        }
        let prev_dot = i > 0 && tokens[i - 1].is_op(".");
        let next = tokens.get(i + 1);
        let called = next.is_some_and(|n| n.is_op("("));
        let kwarg = next.is_some_and(|n| n.is_op("=")) && depth_at(tokens, i) > 0;
        if prev_dot || called || kwarg {
            continue;
        }
        if !out.contains(&t.text) {
            out.push(t.text.clone());
        }
    }
    out
}

/// Bracket nesting depth just before token `idx`.
pub fn depth_at(tokens: &[Tok], idx: usize) -> usize {
    let mut depth: usize = 0;
    for t in &tokens[..idx] {
        if t.kind == TokKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                _ => {}
            }
        }
    }
    depth
}

/// Net bracket balance of a line: positive when openers are unclosed.
pub fn bracket_balance(tokens: &[Tok]) -> i32 {
    tokens
        .iter()
        .filter(|t| t.kind == TokKind::Op)
        .map(|t| match t.text.as_str() {
            "(" | "[" | "{" => 1,
            ")" | "]" | "}" => -1,
            _ => 0,
        })
        .sum()
}

/// Assignment targets' base names (`a[i] = x` assigns `a`), if the line is
/// an assignment or augmented assignment.
pub fn assigned_names(line: &str) -> Vec<String> {
    let toks = code_tokens(line);
    let Some(eq) = toks.iter().position(|t| {
        t.kind == TokKind::Op
            && matches!(t.text.as_str(), "=" | "+=" | "-=" | "*=" | "/=" | "//=" | "%=" | "**=")
    }) else {
        return Vec::new();
    };
    if depth_at(&toks, eq) > 0 {
        return Vec::new();
    }
    let lhs = &toks[..eq];
    let mut names = Vec::new();
    let mut depth = 0usize;
    for (i, t) in lhs.iter().enumerate() {
        match t.kind {
            TokKind::Op if matches!(t.text.as_str(), "(" | "[" | "{") => depth += 1,
            TokKind::Op if matches!(t.text.as_str(), ")" | "]" | "}") => depth = depth.saturating_sub(1),
            TokKind::Name if depth == 0 && !(i > 0 && lhs[i - 1].is_op(".")) => {
                if !KEYWORDS.contains(&t.text.as_str()) && !names.contains(&t.text) {
                    names.push(t.text.clone());
                }
            }
            _ => {}
        }
    }
    names
}

/// Names bound only inside the line: comprehension targets and lambda
/// parameters. They are out of scope once the line has run.
pub fn local_bindings(tokens: &[Tok]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let end = if t.is_name("for") && depth_at(tokens, i) > 0 {
            tokens[i + 1..].iter().position(|t| t.is_name("in"))
        } else if t.is_name("lambda") {
            tokens[i + 1..].iter().position(|t| t.is_op(":"))
        } else {
            None
        };
        if let Some(end) = end {
            for v in variable_names(&tokens[i + 1..i + 1 + end]) {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Loop variables of a `for` header.
pub fn for_targets(line: &str) -> Vec<String> {
    let toks = code_tokens(line);
    if !toks.first().is_some_and(|t| t.is_name("for")) {
        return Vec::new();
    }
    let Some(in_pos) = toks.iter().position(|t| t.is_name("in")) else {
        return Vec::new();
    };
    variable_names(&toks[1..in_pos])
}
