//! Single-line mutations used by the rule-based provider to propose quiz
//! options. Every mutation keeps the line's indentation and comment.

use serde::{Deserialize, Serialize};

use super::pyline::{bracket_balance, code_tokens, first_keyword, Tok, TokKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationFamily {
    ComparisonFlip,
    OffByOne,
    OperatorSwap,
    BoundaryIndex,
    SyntaxRepair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineMutation {
    pub new_text: String,
    pub family: MutationFamily,
    pub description: String,
}

fn splice(line: &str, start: usize, end: usize, repl: &str) -> String {
    format!("{}{}{}", &line[..start], repl, &line[end..])
}

/// Whether the token can end an operand, making a following `+`/`-` binary.
fn ends_operand(t: &Tok) -> bool {
    match t.kind {
        TokKind::Name => !super::pyline::KEYWORDS.contains(&t.text.as_str()) || matches!(t.text.as_str(), "True" | "False" | "None"),
        TokKind::Number | TokKind::Str => true,
        TokKind::Op => matches!(t.text.as_str(), ")" | "]" | "}"),
        TokKind::Comment => false,
    }
}

fn matching_close(toks: &[Tok], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate().skip(open) {
        if t.kind != TokKind::Op {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Top-level comma-separated argument spans (token index ranges) between
/// the brackets at `open` and `close`.
fn argument_spans(toks: &[Tok], open: usize, close: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut depth = 0i32;
    let mut start = open + 1;
    for i in open + 1..close {
        let t = &toks[i];
        if t.kind == TokKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                "," if depth == 0 => {
                    if start < i {
                        spans.push((start, i));
                    }
                    start = i + 1;
                }
                _ => {}
            }
        }
    }
    if start < close {
        spans.push((start, close));
    }
    spans
}

fn ends_with_unit_offset(toks: &[Tok]) -> bool {
    toks.len() >= 3
        && toks[toks.len() - 1].kind == TokKind::Number
        && toks[toks.len() - 1].text == "1"
        && (toks[toks.len() - 2].is_op("+") || toks[toks.len() - 2].is_op("-"))
}

/// All single-token mutations of `line` across the four fix families.
pub fn mutate_line(line: &str) -> Vec<LineMutation> {
    let toks = code_tokens(line);
    let mut out: Vec<LineMutation> = Vec::new();
    let mut push = |new_text: String, family, description: String| {
        if new_text != line && !out.iter().any(|m: &LineMutation| m.new_text == new_text) {
            out.push(LineMutation {
                new_text,
                family,
                description,
            });
        }
    };

    for (i, t) in toks.iter().enumerate() {
        let binary = i > 0 && ends_operand(&toks[i - 1]);
        if t.kind == TokKind::Op {
            let flips: &[&str] = match t.text.as_str() {
                "<" => &["<=", ">"],
                "<=" => &["<", ">="],
                ">" => &[">=", "<"],
                ">=" => &[">", "<="],
                "==" => &["!="],
                "!=" => &["=="],
                _ => &[],
            };
            for f in flips {
                push(
                    splice(line, t.start, t.end(), f),
                    MutationFamily::ComparisonFlip,
                    format!("changes the comparison `{}` to `{}`", t.text, f),
                );
            }
            let swaps: &[&str] = match t.text.as_str() {
                "+" if binary => &["-"],
                "-" if binary => &["+"],
                "+=" => &["-="],
                "-=" => &["+="],
                "*" if binary => &["+"],
                "//" => &["%"],
                "%" if binary => &["//"],
                _ => &[],
            };
            for s in swaps {
                push(
                    splice(line, t.start, t.end(), s),
                    MutationFamily::OperatorSwap,
                    format!("swaps the operator `{}` for `{}`", t.text, s),
                );
            }
        }
        if t.kind == TokKind::Name && (t.text == "and" || t.text == "or") {
            let other = if t.text == "and" { "or" } else { "and" };
            push(
                splice(line, t.start, t.end(), other),
                MutationFamily::OperatorSwap,
                format!("replaces `{}` with `{}`", t.text, other),
            );
        }
        if t.kind == TokKind::Number {
            if let Ok(n) = t.text.parse::<i64>() {
                let negated = i > 0 && toks[i - 1].is_op("-") && !binary_before(&toks, i - 1);
                if !negated {
                    let follows_offset = i > 0 && (toks[i - 1].is_op("+") || toks[i - 1].is_op("-")) && binary_before(&toks, i - 1);
                    if n == 1 && follows_offset {
                        // `x - 1` -> `x`
                        let prev_end = toks[i - 2].end();
                        push(
                            splice(line, prev_end, t.end(), ""),
                            MutationFamily::OffByOne,
                            format!("drops the `{} 1` adjustment", toks[i - 1].text),
                        );
                    } else {
                        for m in [n + 1, n - 1] {
                            push(
                                splice(line, t.start, t.end(), &m.to_string()),
                                MutationFamily::OffByOne,
                                format!("changes the constant {n} to {m}"),
                            );
                        }
                    }
                }
            }
        }
        // Subscripts: `a[expr]` -> `a[expr + 1]` / `a[expr - 1]`.
        if t.is_op("[") && i > 0 && ends_operand(&toks[i - 1]) {
            if let Some(close) = matching_close(&toks, i) {
                let inner = &toks[i + 1..close];
                let is_slice = inner.iter().any(|x| x.is_op(":"));
                if !inner.is_empty() && !is_slice && !ends_with_unit_offset(inner) && !(inner.len() == 1 && inner[0].kind == TokKind::Number) {
                    let expr = &line[inner[0].start..inner[inner.len() - 1].end()];
                    for (op, word) in [("+", "next"), ("-", "previous")] {
                        push(
                            splice(line, inner[0].start, inner[inner.len() - 1].end(), &format!("{expr} {op} 1")),
                            MutationFamily::BoundaryIndex,
                            format!("reads the {word} element (`[{expr} {op} 1]` instead of `[{expr}]`)"),
                        );
                    }
                }
            }
        }
        // range bounds: `range(a, b)` -> `range(a, b + 1)` etc.
        if t.is_name("range") && toks.get(i + 1).is_some_and(|n| n.is_op("(")) {
            if let Some(close) = matching_close(&toks, i + 1) {
                for (s, e) in argument_spans(&toks, i + 1, close) {
                    let arg = &toks[s..e];
                    if (arg.len() == 1 && arg[0].kind == TokKind::Number) || ends_with_unit_offset(arg) {
                        continue;
                    }
                    let text = &line[arg[0].start..arg[arg.len() - 1].end()];
                    for op in ["+", "-"] {
                        push(
                            splice(line, arg[0].start, arg[arg.len() - 1].end(), &format!("{text} {op} 1")),
                            MutationFamily::OffByOne,
                            format!("shifts the range bound `{text}` to `{text} {op} 1`"),
                        );
                    }
                }
            }
        }
    }
    out
}

fn binary_before(toks: &[Tok], op_idx: usize) -> bool {
    op_idx > 0 && ends_operand(&toks[op_idx - 1])
}

const HEADER_KEYWORDS: &[&str] = &["if", "elif", "else", "for", "while", "def", "try", "except", "finally", "with", "class"];

/// Candidate repairs for a line reported as a syntax error. Includes
/// plausible but wrong repairs so the quiz has distractors.
pub fn syntax_repairs(line: &str) -> Vec<LineMutation> {
    let toks = code_tokens(line);
    let mut out: Vec<LineMutation> = Vec::new();
    let mut push = |new_text: String, description: String| {
        if new_text != line && !out.iter().any(|m: &LineMutation| m.new_text == new_text) {
            out.push(LineMutation {
                new_text,
                family: MutationFamily::SyntaxRepair,
                description,
            });
        }
    };
    let Some(last) = toks.last() else {
        return Vec::new();
    };
    let code_end = last.end();
    let header = first_keyword(line).is_some_and(|k| HEADER_KEYWORDS.contains(&k.as_str()));
    let ends_colon = last.is_op(":");

    let balance = bracket_balance(&toks);
    if balance > 0 {
        let mut stack: Vec<&str> = Vec::new();
        for t in toks.iter().filter(|t| t.kind == TokKind::Op) {
            match t.text.as_str() {
                "(" => stack.push(")"),
                "[" => stack.push("]"),
                "{" => stack.push("}"),
                ")" | "]" | "}" => {
                    stack.pop();
                }
                _ => {}
            }
        }
        let closers: String = stack.iter().rev().copied().collect();
        let before_colon = if ends_colon { last.start } else { code_end };
        push(
            splice(line, before_colon, before_colon, &closers),
            format!("closes the open bracket with `{closers}`"),
        );
        push(
            splice(line, code_end, code_end, &closers),
            format!("adds `{closers}` at the very end of the line"),
        );
        // Close right after the first argument of the innermost open call.
        if let Some(open_idx) = toks.iter().rposition(|t| matches!(t.text.as_str(), "(" | "[" | "{")) {
            if let Some(next) = toks.get(open_idx + 1) {
                let at = next.end();
                push(
                    splice(line, at, at, &closers[..1]),
                    format!("closes the bracket right after `{}`", next.text),
                );
            }
        }
        // Removing the opener is the other common reflex.
        if let Some(open_idx) = toks.iter().rposition(|t| matches!(t.text.as_str(), "(" | "[" | "{")) {
            let t = &toks[open_idx];
            push(splice(line, t.start, t.end(), ""), format!("removes the `{}`", t.text));
        }
    } else if balance < 0 {
        let closers: Vec<&Tok> = toks.iter().filter(|t| matches!(t.text.as_str(), ")" | "]" | "}")).collect();
        if let Some(t) = closers.last() {
            push(splice(line, t.start, t.end(), ""), format!("removes the extra `{}`", t.text));
        }
        if let Some(t) = closers.first() {
            push(splice(line, t.start, t.end(), ""), format!("removes the first `{}`", t.text));
        }
        let openers_at = toks.iter().position(|t| t.kind == TokKind::Op && matches!(t.text.as_str(), "(" | "[" | "{"));
        let at = openers_at.map(|i| toks[i].start).unwrap_or(0);
        push(splice(line, at, at, "("), "adds another `(`".to_string());
    }

    if header && !ends_colon {
        push(splice(line, code_end, code_end, ":"), "adds the missing `:` at the end of the header".into());
        push(splice(line, code_end, code_end, ";"), "ends the header with `;`".into());
        if let Some(kw) = toks.first() {
            push(splice(line, kw.end(), kw.end(), ":"), format!("puts a `:` right after `{}`", kw.text));
        }
    }
    if header {
        for t in &toks {
            if t.is_op("=") {
                push(splice(line, t.start, t.end(), "=="), "uses `==` to compare instead of `=`".into());
                push(splice(line, t.start, t.end(), ":="), "uses `:=` instead of `=`".into());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(ms: &[LineMutation]) -> Vec<&str> {
        ms.iter().map(|m| m.new_text.as_str()).collect()
    }

    #[test]
    fn comparison_flips() {
        let ms = mutate_line("    while i <= n:");
        let t = texts(&ms);
        assert!(t.contains(&"    while i < n:"));
        assert!(t.contains(&"    while i >= n:"));
        assert!(ms.iter().all(|m| m.new_text.starts_with("    while")));
    }

    #[test]
    fn off_by_one_literals_and_ranges() {
        let t = mutate_line("    for i in range(1, n):");
        let t = texts(&t);
        assert!(t.contains(&"    for i in range(0, n):"));
        assert!(t.contains(&"    for i in range(2, n):"));
        assert!(t.contains(&"    for i in range(1, n + 1):"));
        assert!(t.contains(&"    for i in range(1, n - 1):"));

        let t = mutate_line("    j = len(nums) - 1");
        let t = texts(&t);
        assert!(t.contains(&"    j = len(nums)"), "{t:?}");
        assert!(t.contains(&"    j = len(nums) + 1"));
    }

    #[test]
    fn negative_literals_left_alone() {
        let t = mutate_line("x = -1");
        assert!(texts(&t).iter().all(|s| s.contains("-1") || s.contains("+")));
    }

    #[test]
    fn subscript_boundaries() {
        let t = mutate_line("        if nums[i] != nums[i - 1] + 1:");
        let t = texts(&t);
        assert!(t.contains(&"        if nums[i + 1] != nums[i - 1] + 1:"));
        assert!(t.contains(&"        if nums[i] != nums[i - 1]:"));
        assert!(t.contains(&"        if nums[i] != nums[i] + 1:"));
        assert!(t.contains(&"        if nums[i] == nums[i - 1] + 1:"));
    }

    #[test]
    fn operator_swaps_skip_unary() {
        let t = mutate_line("    total += x - y");
        let t = texts(&t);
        assert!(t.contains(&"    total -= x - y"));
        assert!(t.contains(&"    total += x + y"));
        assert!(mutate_line("    return -x").is_empty());
    }

    #[test]
    fn no_duplicates_or_identity() {
        let ms = mutate_line("    if a < b and b < c:");
        let mut seen = std::collections::HashSet::new();
        for m in &ms {
            assert_ne!(m.new_text, "    if a < b and b < c:");
            assert!(seen.insert(&m.new_text));
        }
    }

    #[test]
    fn repairs_unclosed_paren() {
        let t = syntax_repairs("    if (len(nums) > 0:");
        let t = texts(&t);
        assert_eq!(t[0], "    if (len(nums) > 0):");
        assert!(t.len() >= 3);
        let t = syntax_repairs("    print(total");
        assert_eq!(t[0].new_text, "    print(total)");
    }

    #[test]
    fn repairs_extra_paren_and_missing_colon() {
        let t = syntax_repairs("    return (a + b))");
        assert_eq!(t[0].new_text, "    return (a + b)");
        let t = syntax_repairs("    for x in nums");
        assert_eq!(t[0].new_text, "    for x in nums:");
        assert!(t.len() >= 3);
        let t = syntax_repairs("    if x = 3:");
        assert!(texts(&t).contains(&"    if x == 3:"));
    }
}
