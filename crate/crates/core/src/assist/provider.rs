//! Suggestion providers.
//!
//! A provider only ever sees a structured [`AssistContext`]: the failing
//! tests, the localized lines with a few lines of surrounding code, and
//! the exercise statement. Two implementations exist: [`RuleProvider`],
//! which is deterministic and backs every test, and [`ChatProvider`],
//! which talks to a chat-completion endpoint.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mutate::{mutate_line, syntax_repairs};
use super::pseudocode::{derive_steps, PseudoStep};
use super::pyline;
use crate::runner::ExerciseSpec;
use crate::spectrum::{ElementCounts, SourceLocation};
use crate::trace::{FailingTest, SyntaxErrorInfo};

pub const ENV_URL: &str = "CODEHINTER_LLM_URL";
pub const ENV_MODEL: &str = "CODEHINTER_LLM_MODEL";
pub const ENV_KEY: &str = "CODEHINTER_LLM_KEY";

/// Lines of code shown on each side of a localized line.
pub const CONTEXT_RADIUS: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider returned an unusable reply: {0}")]
    BadReply(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeWindow {
    pub location: SourceLocation,
    pub score: f64,
    pub counts: ElementCounts,
    /// `(line number, text)` pairs around `location`.
    pub lines: Vec<(u32, String)>,
}

impl CodeWindow {
    pub fn focus_text(&self) -> Option<&str> {
        self.lines
            .iter()
            .find(|(n, _)| *n == self.location.line)
            .map(|(_, t)| t.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssistContext {
    pub failing: Vec<FailingTest>,
    pub locations: Vec<CodeWindow>,
    pub statement: Option<String>,
    pub syntax_error: Option<SyntaxErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub location: SourceLocation,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixSuggestion {
    pub file: String,
    pub line: u32,
    pub old_text: String,
    pub new_text: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintSuggestion {
    pub file: String,
    /// The line whose effect the variable reveals.
    pub line: u32,
    pub variable: String,
    pub reason: String,
}

pub trait SuggestionProvider: Send + Sync {
    fn name(&self) -> &str;

    fn explain_locations(&self, ctx: &AssistContext) -> Result<Vec<Explanation>, ProviderError>;

    fn propose_fixes(&self, ctx: &AssistContext, limit: usize) -> Result<Vec<FixSuggestion>, ProviderError>;

    fn propose_prints(&self, ctx: &AssistContext) -> Result<Vec<PrintSuggestion>, ProviderError>;

    fn pseudocode(&self, exercise: &ExerciseSpec) -> Result<Vec<PseudoStep>, ProviderError>;

    fn chat(&self, text: &str, ctx: &AssistContext) -> Result<String, ProviderError>;
}

/// The template explanation used when no provider is reachable.
pub fn template_explanation(window: &CodeWindow) -> String {
    let c = window.counts;
    format!(
        "{} is covered by {} failing / {} passing tests (suspiciousness {:.3}).",
        window.location, c.ef, c.ep, window.score
    )
}

/// Deterministic provider built from fixed rules and the mutation catalog.
#[derive(Debug, Clone, Default)]
pub struct RuleProvider;

impl RuleProvider {
    pub fn new() -> Self {
        RuleProvider
    }
}

impl SuggestionProvider for RuleProvider {
    fn name(&self) -> &str {
        "rules"
    }

    fn explain_locations(&self, ctx: &AssistContext) -> Result<Vec<Explanation>, ProviderError> {
        Ok(ctx
            .locations
            .iter()
            .map(|w| {
                let code = w.focus_text().map(str::trim).unwrap_or("");
                let c = w.counts;
                let mut text = format!(
                    "{}: `{}` runs in {} of {} failing tests",
                    w.location,
                    code,
                    c.ef,
                    c.ef + c.nf
                );
                if c.ep == 0 {
                    text.push_str(" and in no passing test, so the failures go through this line.");
                } else {
                    text.push_str(&format!(
                        " and {} of {} passing tests.",
                        c.ep,
                        c.ep + c.np
                    ));
                }
                let assigned = pyline::assigned_names(code);
                if let Some(var) = assigned.first() {
                    text.push_str(&format!(
                        " Check whether `{var}` gets the value you expect after this line."
                    ));
                } else if code.ends_with(':') {
                    text.push_str(" Check whether this condition holds when you expect it to.");
                }
                Explanation {
                    location: w.location.clone(),
                    text,
                }
            })
            .collect())
    }

    fn propose_fixes(&self, ctx: &AssistContext, limit: usize) -> Result<Vec<FixSuggestion>, ProviderError> {
        let mut out: Vec<FixSuggestion> = Vec::new();
        let mut push = |file: &str, line: u32, old: &str, new: String, why: String| {
            if out.len() < limit && !out.iter().any(|f| f.file == file && f.line == line && f.new_text == new) {
                out.push(FixSuggestion {
                    file: file.to_string(),
                    line,
                    old_text: old.to_string(),
                    new_text: new,
                    explanation: why,
                });
            }
        };

        if let Some(se) = &ctx.syntax_error {
            // Errors are often reported one line late, so try the line
            // before the reported one as well.
            let around: Vec<&(u32, String)> = ctx
                .locations
                .iter()
                .filter(|w| w.location.file == se.file)
                .flat_map(|w| w.lines.iter())
                .collect();
            for target in [se.line, se.line.saturating_sub(1)] {
                if let Some((n, text)) = around.iter().find(|(n, _)| *n == target) {
                    for m in syntax_repairs(text) {
                        push(&se.file, *n, text, m.new_text, format!("This {} on line {n}.", m.description));
                    }
                }
            }
            for target in [se.line, se.line.saturating_sub(1)] {
                if let Some((n, text)) = around.iter().find(|(n, _)| *n == target) {
                    for m in mutate_line(text) {
                        push(&se.file, *n, text, m.new_text, format!("This {} on line {n}.", m.description));
                    }
                }
            }
            return Ok(out);
        }

        for w in &ctx.locations {
            let Some(text) = w.focus_text() else { continue };
            for m in mutate_line(text) {
                push(
                    &w.location.file,
                    w.location.line,
                    text,
                    m.new_text,
                    format!("This {} on line {}.", m.description, w.location.line),
                );
            }
        }
        Ok(out)
    }

    fn propose_prints(&self, ctx: &AssistContext) -> Result<Vec<PrintSuggestion>, ProviderError> {
        let mut out: Vec<PrintSuggestion> = Vec::new();
        for w in &ctx.locations {
            let Some(text) = w.focus_text() else { continue };
            let candidates = observed_variables(text);
            if let Some(var) = candidates.into_iter().find(|v| !out.iter().any(|p| &p.variable == v)) {
                out.push(PrintSuggestion {
                    file: w.location.file.clone(),
                    line: w.location.line,
                    reason: format!(
                        "`{var}` is involved in {}, which runs in {} failing test(s); printing it shows how its value changes.",
                        w.location, w.counts.ef
                    ),
                    variable: var,
                });
            }
        }
        Ok(out)
    }

    fn pseudocode(&self, exercise: &ExerciseSpec) -> Result<Vec<PseudoStep>, ProviderError> {
        Ok(derive_steps(exercise))
    }

    fn chat(&self, text: &str, ctx: &AssistContext) -> Result<String, ProviderError> {
        let mut reply = String::new();
        if let Some(se) = &ctx.syntax_error {
            reply.push_str(&format!(
                "Python cannot read {} near line {} ({}). ",
                se.file, se.line, se.message
            ));
        } else if let Some(first) = ctx.failing.first() {
            reply.push_str(&format!("{} test(s) fail, starting with `{}`. ", ctx.failing.len(), first.test_id));
        }
        if let Some(w) = ctx.locations.first() {
            reply.push_str(&format!("The most suspicious line is {}. ", w.location));
        }
        reply.push_str(&format!(
            "Try one of the helpers to dig into it. (You asked: \"{}\")",
            text.trim()
        ));
        Ok(reply)
    }
}

/// Variables worth printing for a line: assignment targets and loop
/// variables first, then any variable the line reads.
pub fn observed_variables(line: &str) -> Vec<String> {
    let mut vars = pyline::assigned_names(line);
    for v in pyline::for_targets(line) {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    // `res.append(x)` mutates `res`.
    let toks = pyline::code_tokens(line);
    if toks.len() >= 3 && toks[0].kind == pyline::TokKind::Name && toks[1].is_op(".") {
        let v = toks[0].text.clone();
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let skip = usize::from(toks.first().is_some_and(|t| t.is_name("for")));
    for v in pyline::variable_names(&toks[skip.min(toks.len())..]) {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let local = pyline::local_bindings(&toks);
    vars.retain(|v| !local.contains(v));
    vars
}

/// Chat-completion client. Configured from `CODEHINTER_LLM_URL`,
/// `CODEHINTER_LLM_MODEL` and `CODEHINTER_LLM_KEY`.
#[derive(Debug, Clone)]
pub struct ChatProvider {
    base_url: String,
    model: String,
    key: Option<String>,
    timeout: Duration,
}

#[derive(Debug, Deserialize)]
struct ChatReply {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Deserialize)]
struct ChatMessage {
    content: String,
}

#[derive(Debug, Deserialize)]
struct ExplanationsReply {
    explanations: Vec<Explanation>,
}

#[derive(Debug, Deserialize)]
struct FixesReply {
    fixes: Vec<FixSuggestion>,
}

#[derive(Debug, Deserialize)]
struct PrintsReply {
    prints: Vec<PrintSuggestion>,
}

#[derive(Debug, Deserialize)]
struct StepsReply {
    steps: Vec<String>,
}

const SYSTEM_PROMPT: &str = "You help a novice programmer debug. Never write the full solution. \
Only discuss the code locations you are given. Reply with a single JSON object matching the requested schema.";

impl ChatProvider {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, key: Option<String>) -> Self {
        ChatProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            key,
            timeout: Duration::from_secs(60),
        }
    }

    /// `None` when `CODEHINTER_LLM_URL` is unset.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(ENV_URL).ok().filter(|u| !u.is_empty())?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-4o".into());
        let key = std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty());
        Some(ChatProvider::new(url, model, key))
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// The request body for one task.
    pub fn request_body(&self, task: &str, schema: &str, context: &serde_json::Value) -> serde_json::Value {
        let user = serde_json::json!({
            "task": task,
            "reply_schema": schema,
            "context": context,
        });
        serde_json::json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": user.to_string()},
            ],
            "response_format": {"type": "json_object"},
            "temperature": 0,
        })
    }

    fn complete(&self, body: serde_json::Value) -> Result<String, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let mut req = client
            .post(format!("{}/chat/completions", self.base_url))
            .json(&body);
        if let Some(key) = &self.key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ProviderError::Unavailable(format!("HTTP {}", resp.status())));
        }
        let reply: ChatReply = resp.json().map_err(|e| ProviderError::BadReply(e.to_string()))?;
        reply
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ProviderError::BadReply("no choices".into()))
    }

    fn structured<T: serde::de::DeserializeOwned>(
        &self,
        task: &str,
        schema: &str,
        context: &serde_json::Value,
    ) -> Result<T, ProviderError> {
        let content = self.complete(self.request_body(task, schema, context))?;
        parse_structured(&content)
    }
}

/// Parses a JSON reply, tolerating a fenced code block around it.
pub fn parse_structured<T: serde::de::DeserializeOwned>(content: &str) -> Result<T, ProviderError> {
    let trimmed = content.trim();
    let body = trimmed
        .strip_prefix("```json")
        .or_else(|| trimmed.strip_prefix("```"))
        .and_then(|s| s.strip_suffix("```"))
        .unwrap_or(trimmed);
    serde_json::from_str(body.trim()).map_err(|e| ProviderError::BadReply(e.to_string()))
}

impl SuggestionProvider for ChatProvider {
    fn name(&self) -> &str {
        "chat"
    }

    fn explain_locations(&self, ctx: &AssistContext) -> Result<Vec<Explanation>, ProviderError> {
        let reply: ExplanationsReply = self.structured(
            "Explain briefly why each given location may cause the failing tests.",
            r#"{"explanations":[{"location":{"file":string,"line":int},"text":string}]}"#,
            &serde_json::to_value(ctx).expect("context serializes"),
        )?;
        Ok(reply.explanations)
    }

    fn propose_fixes(&self, ctx: &AssistContext, limit: usize) -> Result<Vec<FixSuggestion>, ProviderError> {
        let mut reply: FixesReply = self.structured(
            &format!("Propose up to {limit} single-line fixes at the given locations. Some may be wrong; each needs a short explanation."),
            r#"{"fixes":[{"file":string,"line":int,"old_text":string,"new_text":string,"explanation":string}]}"#,
            &serde_json::to_value(ctx).expect("context serializes"),
        )?;
        reply.fixes.truncate(limit);
        Ok(reply.fixes)
    }

    fn propose_prints(&self, ctx: &AssistContext) -> Result<Vec<PrintSuggestion>, ProviderError> {
        let reply: PrintsReply = self.structured(
            "Suggest up to three variables to print near the given locations.",
            r#"{"prints":[{"file":string,"line":int,"variable":string,"reason":string}]}"#,
            &serde_json::to_value(ctx).expect("context serializes"),
        )?;
        Ok(reply.prints)
    }

    fn pseudocode(&self, exercise: &ExerciseSpec) -> Result<Vec<PseudoStep>, ProviderError> {
        let reply: StepsReply = self.structured(
            "Write numbered pseudo-code steps for the problem statement without giving code.",
            r#"{"steps":[string]}"#,
            &serde_json::json!({"statement": exercise.statement}),
        )?;
        Ok(super::pseudocode::steps_from_lines(&reply.steps))
    }

    fn chat(&self, text: &str, ctx: &AssistContext) -> Result<String, ProviderError> {
        let mut context = serde_json::to_value(ctx).expect("context serializes");
        context["question"] = serde_json::Value::String(text.to_string());
        #[derive(Deserialize)]
        struct Reply {
            reply: String,
        }
        let reply: Reply = self.structured("Answer the student's question.", r#"{"reply":string}"#, &context)?;
        Ok(reply.reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(line: u32, text: &str, counts: ElementCounts) -> CodeWindow {
        CodeWindow {
            location: SourceLocation::new("sol.py", line).unwrap(),
            score: 0.5,
            counts,
            lines: vec![(line - 1, "    total = 0".into()), (line, text.into())],
        }
    }

    #[test]
    fn rule_explanations_name_their_location() {
        let ctx = AssistContext {
            locations: vec![window(4, "        total += i", ElementCounts::new(2, 0, 0, 3))],
            ..Default::default()
        };
        let ex = RuleProvider.explain_locations(&ctx).unwrap();
        assert_eq!(ex.len(), 1);
        assert!(ex[0].text.starts_with("sol.py:4:"), "{}", ex[0].text);
        assert!(ex[0].text.contains("`total`"));
    }

    #[test]
    fn rule_fixes_respect_limit_and_are_deterministic() {
        let ctx = AssistContext {
            locations: vec![window(3, "    for i in range(1, n):", ElementCounts::new(1, 1, 0, 0))],
            ..Default::default()
        };
        let a = RuleProvider.propose_fixes(&ctx, 100).unwrap();
        let b = RuleProvider.propose_fixes(&ctx, 100).unwrap();
        assert_eq!(a, b);
        assert!(a.len() > 3);
        assert_eq!(RuleProvider.propose_fixes(&ctx, 3).unwrap(), a[..3].to_vec());
        assert!(a.iter().all(|f| f.old_text == "    for i in range(1, n):"));
    }

    #[test]
    fn observed_variable_order() {
        assert_eq!(observed_variables("        total += nums[i]"), ["total", "nums", "i"]);
        assert_eq!(observed_variables("    for i in range(n):"), ["i", "n"]);
        assert_eq!(observed_variables("        res.append(start)"), ["res", "start"]);
        assert_eq!(observed_variables("    return count"), ["count"]);
        assert_eq!(observed_variables("    cleaned = [c for c in text if c.isalnum()]"), ["cleaned", "text"]);
    }

    #[test]
    fn structured_replies_tolerate_fences() {
        let r: StepsReply = parse_structured("```json\n{\"steps\":[\"a\"]}\n```").unwrap();
        assert_eq!(r.steps, ["a"]);
        assert!(parse_structured::<StepsReply>("not json").is_err());
    }

    #[test]
    fn request_body_shape() {
        let p = ChatProvider::new("http://localhost:1/v1/", "m", None);
        let body = p.request_body("t", "{}", &serde_json::json!({"x": 1}));
        assert_eq!(body["model"], "m");
        assert_eq!(body["messages"][0]["role"], "system");
        let user: serde_json::Value =
            serde_json::from_str(body["messages"][1]["content"].as_str().unwrap()).unwrap();
        assert_eq!(user["context"]["x"], 1);
        assert_eq!(p.base_url, "http://localhost:1/v1");
    }
}
