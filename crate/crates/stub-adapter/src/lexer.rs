//! Tokenizer for the supported Python subset, including indentation.

use crate::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// f-string pieces: literal text and `{expr}` sources.
    FStr(Vec<FPart>),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FPart {
    Lit(String),
    Expr { source: String, repr: bool, spec: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
}

const OPS: &[&str] = &[
    "**=", "//=", "->", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "+", "-", "*", "/", "%", "<",
    ">", "=", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "@", "&", "|", "^", "~",
];

fn err(line: u32, message: impl Into<String>) -> SyntaxError {
    SyntaxError {
        line,
        message: message.into(),
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: u32,
    out: Vec<Token>,
    indents: Vec<usize>,
    /// Open brackets with the line they were opened on.
    brackets: Vec<(u8, u32)>,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer {
        src: text.as_bytes(),
        text,
        pos: 0,
        line: 1,
        out: Vec::new(),
        indents: vec![0],
        brackets: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> u8 {
        self.src.get(self.pos + off).copied().unwrap_or(0)
    }

    fn push(&mut self, tok: Tok, line: u32) {
        self.out.push(Token { tok, line });
    }

    fn run(&mut self) -> Result<(), SyntaxError> {
        let mut at_line_start = true;
        while self.pos < self.src.len() {
            if at_line_start && self.brackets.is_empty() {
                if self.handle_indent()? {
                    continue;
                }
                at_line_start = false;
            }
            let c = self.peek(0);
            match c {
                b'\n' => {
                    self.pos += 1;
                    if self.brackets.is_empty() {
                        self.push(Tok::Newline, self.line);
                        at_line_start = true;
                    }
                    self.line += 1;
                }
                b' ' | b'\t' | b'\r' | b'\x0c' => self.pos += 1,
                b'#' => {
                    while self.pos < self.src.len() && self.peek(0) != b'\n' {
                        self.pos += 1;
                    }
                }
                b'\\' if self.peek(1) == b'\n' => {
                    self.pos += 2;
                    self.line += 1;
                }
                b'0'..=b'9' => self.number()?,
                b'.' if self.peek(1).is_ascii_digit() => self.number()?,
                b'"' | b'\'' => {
                    let line = self.line;
                    let s = self.string(false)?;
                    self.push(Tok::Str(s), line);
                }
                c if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 => self.name()?,
                _ => self.op()?,
            }
        }
        if let Some(&(b, line)) = self.brackets.last() {
            return Err(err(line, format!("'{}' was never closed", b as char)));
        }
        if !matches!(self.out.last().map(|t| &t.tok), None | Some(Tok::Newline) | Some(Tok::Dedent)) {
            self.push(Tok::Newline, self.line);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, self.line);
        }
        self.push(Tok::Eof, self.line);
        Ok(())
    }

    /// Measures indentation at a line start. Returns true when the line is
    /// blank or a comment and was skipped.
    fn handle_indent(&mut self) -> Result<bool, SyntaxError> {
        let mut width = 0;
        let mut p = self.pos;
        while p < self.src.len() {
            match self.src[p] {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                b'\x0c' | b'\r' => {}
                _ => break,
            }
            p += 1;
        }
        let next = self.src.get(p).copied().unwrap_or(b'\n');
        if next == b'\n' || next == b'#' {
            // Blank or comment-only line: consume through the newline.
            while p < self.src.len() && self.src[p] != b'\n' {
                p += 1;
            }
            if p < self.src.len() {
                p += 1;
                self.line += 1;
            }
            self.pos = p;
            return Ok(true);
        }
        self.pos = p;
        let current = *self.indents.last().unwrap();
        if width > current {
            // The parser reports indents that do not follow a block header.
            self.indents.push(width);
            self.push(Tok::Indent, self.line);
        } else if width < current {
            while *self.indents.last().unwrap() > width {
                self.indents.pop();
                self.push(Tok::Dedent, self.line);
            }
            if *self.indents.last().unwrap() != width {
                return Err(err(self.line, "unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn number(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        let mut is_float = false;
        while self.pos < self.src.len() {
            let c = self.peek(0);
            if c.is_ascii_digit() || c == b'_' {
                self.pos += 1;
            } else if c == b'.' && !is_float {
                is_float = true;
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && (self.peek(1).is_ascii_digit() || (matches!(self.peek(1), b'+' | b'-') && self.peek(2).is_ascii_digit()))
            {
                is_float = true;
                self.pos += 2;
            } else {
                break;
            }
        }
        if self.peek(0).is_ascii_alphabetic() || self.peek(0) == b'_' {
            return Err(err(self.line, "invalid decimal literal"));
        }
        let text: String = self.text[start..self.pos].chars().filter(|&c| c != '_').collect();
        let tok = if is_float {
            Tok::Float(text.parse().map_err(|_| err(self.line, "invalid number"))?)
        } else {
            Tok::Int(text.parse().map_err(|_| err(self.line, "integer literal too large"))?)
        };
        self.push(tok, self.line);
        Ok(())
    }

    fn name(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.peek(0);
            if c.is_ascii_alphanumeric() || c == b'_' || c >= 0x80 {
                self.pos += 1;
            } else {
                break;
            }
        }
        let word = &self.text[start..self.pos];
        let next = self.peek(0);
        if (next == b'"' || next == b'\'') && word.len() <= 2 {
            let lower = word.to_ascii_lowercase();
            let line = self.line;
            match lower.as_str() {
                "r" => {
                    let s = self.string(true)?;
                    self.push(Tok::Str(s), line);
                    return Ok(());
                }
                "f" | "rf" | "fr" => {
                    let s = self.string(lower.contains('r'))?;
                    let parts = split_fstring(&s, line)?;
                    self.push(Tok::FStr(parts), line);
                    return Ok(());
                }
                "b" | "u" => {
                    let s = self.string(false)?;
                    self.push(Tok::Str(s), line);
                    return Ok(());
                }
                _ => {}
            }
        }
        self.push(Tok::Name(word.to_string()), self.line);
        Ok(())
    }

    fn string(&mut self, raw: bool) -> Result<String, SyntaxError> {
        let quote = self.peek(0);
        let start_line = self.line;
        let triple = self.peek(1) == quote && self.peek(2) == quote;
        self.pos += if triple { 3 } else { 1 };
        let mut out = String::new();
        loop {
            if self.pos >= self.src.len() {
                let what = if triple { "unterminated triple-quoted string literal" } else { "unterminated string literal" };
                return Err(err(start_line, what));
            }
            let c = self.peek(0);
            if c == quote && (!triple || (self.peek(1) == quote && self.peek(2) == quote)) {
                self.pos += if triple { 3 } else { 1 };
                return Ok(out);
            }
            if c == b'\n' {
                if !triple {
                    return Err(err(start_line, "unterminated string literal"));
                }
                self.line += 1;
            }
            if c == b'\\' && self.pos + 1 < self.src.len() {
                let n = self.peek(1);
                if raw {
                    out.push('\\');
                    out.push(n as char);
                    self.pos += 2;
                    continue;
                }
                self.pos += 2;
                match n {
                    b'n' => out.push('\n'),
                    b't' => out.push('\t'),
                    b'r' => out.push('\r'),
                    b'0' => out.push('\0'),
                    b'\\' => out.push('\\'),
                    b'\'' => out.push('\''),
                    b'"' => out.push('"'),
                    b'\n' => self.line += 1,
                    _ => {
                        out.push('\\');
                        self.pos -= 1;
                    }
                }
                continue;
            }
            // Copy one UTF-8 character.
            let ch = self.text[self.pos..].chars().next().unwrap();
            out.push(ch);
            self.pos += ch.len_utf8();
        }
    }

    fn op(&mut self) -> Result<(), SyntaxError> {
        let rest = &self.text[self.pos..];
        let Some(op) = OPS.iter().find(|op| rest.starts_with(**op)) else {
            let ch = rest.chars().next().unwrap();
            return Err(err(self.line, format!("invalid character '{ch}'")));
        };
        let b = op.as_bytes()[0];
        match b {
            b'(' | b'[' | b'{' if op.len() == 1 => self.brackets.push((b, self.line)),
            b')' | b']' | b'}' => {
                let open = match b {
                    b')' => b'(',
                    b']' => b'[',
                    _ => b'{',
                };
                match self.brackets.pop() {
                    Some((o, _)) if o == open => {}
                    Some((o, l)) => {
                        return Err(err(
                            self.line,
                            format!("closing parenthesis '{}' does not match opening parenthesis '{}' on line {l}", b as char, o as char),
                        ))
                    }
                    None => return Err(err(self.line, format!("unmatched '{}'", b as char))),
                }
            }
            _ => {}
        }
        self.pos += op.len();
        self.push(Tok::Op(op), self.line);
        Ok(())
    }
}

fn split_fstring(s: &str, line: u32) -> Result<Vec<FPart>, SyntaxError> {
    let mut parts = Vec::new();
    let mut lit = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                lit.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                lit.push('}');
            }
            '{' => {
                if !lit.is_empty() {
                    parts.push(FPart::Lit(std::mem::take(&mut lit)));
                }
                let mut depth = 0;
                let mut inner = String::new();
                loop {
                    match chars.next() {
                        None => return Err(err(line, "f-string: expecting '}'")),
                        Some('}') if depth == 0 => break,
                        Some(c) => {
                            match c {
                                '(' | '[' | '{' => depth += 1,
                                ')' | ']' | '}' => depth -= 1,
                                _ => {}
                            }
                            inner.push(c);
                        }
                    }
                }
                let (inner, spec) = match inner.rfind(':').filter(|&i| !inner[i..].contains([')', ']'])) {
                    Some(i) => (inner[..i].to_string(), Some(inner[i + 1..].to_string())),
                    None => (inner, None),
                };
                let (source, repr) = match inner.strip_suffix("!r") {
                    Some(s) => (s.to_string(), true),
                    None => (inner, false),
                };
                if source.trim().is_empty() {
                    return Err(err(line, "f-string: empty expression not allowed"));
                }
                parts.push(FPart::Expr { source, repr, spec });
            }
            '}' => return Err(err(line, "f-string: single '}' is not allowed")),
            c => lit.push(c),
        }
    }
    if !lit.is_empty() {
        parts.push(FPart::Lit(lit));
    }
    Ok(parts)
}
