//! Numbered pseudo-code for an exercise.

use serde::{Deserialize, Serialize};

use super::pyline::{self, code_tokens, indentation};
use super::provider::SuggestionProvider;
use super::AssistError;
use crate::runner::ExerciseSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Define,
    Loop,
    Branch,
    Update,
    Return,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoStep {
    /// Dotted step number, e.g. `2.1`.
    pub number: String,
    pub depth: usize,
    pub kind: StepKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pseudocode {
    pub steps: Vec<PseudoStep>,
    /// Whether the steps came from the fallback rather than the provider.
    pub fallback: bool,
}

impl Pseudocode {
    pub fn render(&self) -> String {
        render_steps(&self.steps)
    }
}

pub fn render_steps(steps: &[PseudoStep]) -> String {
    steps
        .iter()
        .map(|s| format!("{}{}. {}\n", "   ".repeat(s.depth), s.number, s.text))
        .collect()
}

/// Assigns dotted numbers to `(depth, kind, text)` items.
fn number(items: Vec<(usize, StepKind, String)>) -> Vec<PseudoStep> {
    let mut counters: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(items.len());
    for (depth, kind, text) in items {
        // A step can nest at most one level deeper than its predecessor.
        let depth = depth.min(counters.len());
        counters.truncate(depth + 1);
        if counters.len() == depth {
            counters.push(0);
        }
        counters[depth] += 1;
        let number = counters.iter().map(usize::to_string).collect::<Vec<_>>().join(".");
        out.push(PseudoStep {
            number,
            depth,
            kind,
            text,
        });
    }
    out
}

fn classify(code: &str) -> Option<(StepKind, String)> {
    let toks = code_tokens(code);
    let first = toks.first()?;
    let rest = |from: usize| -> String {
        toks.get(from)
            .map(|t| code[t.start..].trim_end().trim_end_matches(':').trim_end().to_string())
            .unwrap_or_default()
    };
    let step = match first.text.as_str() {
        "def" => {
            let name = toks.get(1).map(|t| t.text.clone()).unwrap_or_default();
            let params: Vec<String> = pyline::variable_names(&toks[2.min(toks.len())..]);
            if params.is_empty() {
                (StepKind::Define, format!("Define `{name}`."))
            } else {
                (StepKind::Define, format!("Define `{name}` taking {}.", quote_list(&params)))
            }
        }
        "for" => {
            let targets = pyline::for_targets(code);
            let iter = toks
                .iter()
                .position(|t| t.is_name("in"))
                .map(|p| rest(p + 1))
                .unwrap_or_default();
            (StepKind::Loop, format!("For each {} in `{iter}`:", quote_list(&targets)))
        }
        "while" => (StepKind::Loop, format!("Repeat while `{}`:", rest(1))),
        "if" => (StepKind::Branch, format!("If `{}`:", rest(1))),
        "elif" => (StepKind::Branch, format!("Otherwise, if `{}`:", rest(1))),
        "else" => (StepKind::Branch, "Otherwise:".to_string()),
        "return" => {
            let vars = pyline::variable_names(&toks[1..]);
            if vars.is_empty() {
                (StepKind::Return, "Return the result.".to_string())
            } else {
                (StepKind::Return, format!("Return the result built from {}.", quote_list(&vars)))
            }
        }
        "import" | "from" | "pass" => return None,
        _ => {
            let assigned = pyline::assigned_names(code);
            if !assigned.is_empty() {
                (StepKind::Update, format!("Update {}.", quote_list(&assigned)))
            } else if toks.len() >= 3 && toks[1].is_op(".") {
                (StepKind::Update, format!("Update `{}` using `{}`.", toks[0].text, toks[2].text))
            } else {
                (StepKind::Other, format!("Compute `{}`.", code.trim()))
            }
        }
    };
    Some(step)
}

fn quote_list(names: &[String]) -> String {
    let quoted: Vec<String> = names.iter().map(|n| format!("`{n}`")).collect();
    match quoted.len() {
        0 => String::new(),
        1 => quoted[0].clone(),
        n => format!("{} and {}", quoted[..n - 1].join(", "), quoted[n - 1]),
    }
}

/// Steps mirroring the control structure of `source`.
pub fn steps_from_source(source: &str) -> Vec<PseudoStep> {
    let mut items = Vec::new();
    let mut indents: Vec<usize> = Vec::new();
    for line in source.lines() {
        let code = line.trim();
        if code.is_empty() || code.starts_with('#') {
            continue;
        }
        let width = indentation(line).len();
        while indents.last().is_some_and(|&w| w > width) {
            indents.pop();
        }
        if indents.last() != Some(&width) {
            indents.push(width);
        }
        if let Some((kind, text)) = classify(code) {
            items.push((indents.len() - 1, kind, text));
        }
    }
    number(items)
}

/// Splits a statement into one imperative step per sentence.
pub fn steps_from_statement(statement: &str) -> Vec<PseudoStep> {
    let items = statement
        .split(['.', ';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty() && !s.starts_with('#'))
        .map(|s| {
            let mut text = s.to_string();
            text.push('.');
            (0, StepKind::Other, text)
        })
        .collect();
    number(items)
}

pub fn steps_from_lines(lines: &[String]) -> Vec<PseudoStep> {
    number(
        lines
            .iter()
            .map(|l| {
                let trimmed = l.trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c == ' ');
                (0, StepKind::Other, trimmed.to_string())
            })
            .collect(),
    )
}

/// Structural steps from the reference solution when there is one,
/// otherwise the statement split into steps.
pub fn derive_steps(exercise: &ExerciseSpec) -> Vec<PseudoStep> {
    match exercise.reference_solution.as_deref() {
        Some(src) if !src.trim().is_empty() => steps_from_source(src),
        _ => steps_from_statement(&exercise.statement),
    }
}

pub fn pseudocode(exercise: &ExerciseSpec, provider: &dyn SuggestionProvider) -> Result<Pseudocode, AssistError> {
    if exercise.statement.trim().is_empty() {
        return Err(AssistError::EmptyStatement);
    }
    match provider.pseudocode(exercise) {
        Ok(steps) if !steps.is_empty() => Ok(Pseudocode { steps, fallback: false }),
        _ => Ok(Pseudocode {
            steps: derive_steps(exercise),
            fallback: true,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assist::provider::RuleProvider;

    const REFERENCE: &str = "\
def count_positive(nums):
    count = 0
    for n in nums:
        if n > 0:
            count += 1
    return count
";

    #[test]
    fn structure_has_loop_and_branch() {
        let steps = steps_from_source(REFERENCE);
        let kinds: Vec<StepKind> = steps.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [StepKind::Define, StepKind::Update, StepKind::Loop, StepKind::Branch, StepKind::Update, StepKind::Return]
        );
        let numbers: Vec<&str> = steps.iter().map(|s| s.number.as_str()).collect();
        assert_eq!(numbers, ["1", "1.1", "1.2", "1.2.1", "1.2.1.1", "1.3"]);
        assert_eq!(steps[2].text, "For each `n` in `nums`:");
        assert_eq!(steps[3].text, "If `n > 0`:");
        let text = render_steps(&steps);
        assert!(text.starts_with("1. Define `count_positive` taking `nums`.\n"));
    }

    #[test]
    fn statement_fallback() {
        let steps = steps_from_statement("Read the list. Count the positive numbers; return the count.");
        assert_eq!(steps.len(), 3);
        assert_eq!(steps[1].text, "Count the positive numbers.");
        assert_eq!(steps[2].number, "3");
    }

    #[test]
    fn empty_statement_rejected() {
        let ex = ExerciseSpec::new("  ");
        assert!(matches!(pseudocode(&ex, &RuleProvider), Err(AssistError::EmptyStatement)));
    }

    #[test]
    fn numbering_handles_dedent() {
        let steps = steps_from_source("def f(a):\n    if a:\n        return 1\n    return 2\ndef g():\n    pass\n");
        let numbers: Vec<&str> = steps.iter().map(|s| s.number.as_str()).collect();
        assert_eq!(numbers, ["1", "1.1", "1.1.1", "1.2", "2"]);
    }
}
