//! Insert Print Statement: plan up to three diagnostic prints near the
//! most suspicious lines and run them on a shadow copy.
//!
//! Diagnostics go to the debug stream (`sys.stderr`) so tests comparing
//! standard output are unaffected. Each printed line carries a
//! `[codehinter#N]` tag naming its insertion; adapters announce each test
//! on the same stream with a `[codehinter:test] <test_id>` line.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::provider::{PrintSuggestion, RuleProvider, SuggestionProvider};
use super::pyline::{first_keyword, indentation, is_block_header};
use super::{build_context, AssistError};
use crate::patch::{edits_between, PatchOrigin, PatchProposal};
use crate::runner::{run_adapter, snapshot_source, ProjectConfig, ShadowProject, SourceSnapshot};
use crate::spectrum::{derive_counts, rank, top_k, Formula, DEFAULT_TOP_K};
use crate::trace::{summarize, CoverageSpectrum, Outcome, TestReport};

pub const MAX_PRINTS: usize = 3;
pub const TEST_MARKER: &str = "[codehinter:test] ";
const PREAMBLE: &str = "import sys";

pub fn tag(id: usize) -> String {
    format!("[codehinter#{id}]")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintInsertion {
    /// 1-based; matches the tag printed by the inserted line.
    pub id: usize,
    pub file: String,
    /// The inserted line goes right after this line (0 = top of file).
    pub after_line: u32,
    pub variable: String,
    pub reason: String,
    pub indent: String,
}

impl PrintInsertion {
    pub fn statement(&self) -> String {
        format!(
            "{}print(\"{} {} =\", repr({}), file=sys.stderr)",
            self.indent,
            tag(self.id),
            self.variable,
            self.variable
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentedFile {
    pub file: String,
    pub text: String,
    /// 1-based line numbers of inserted lines in `text`.
    pub inserted_lines: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintPlan {
    pub insertions: Vec<PrintInsertion>,
    pub rendered: Vec<InstrumentedFile>,
    pub snapshot_hash: String,
    /// True when the rule-based fallback chose the variables.
    pub fallback: bool,
}

impl PrintPlan {
    /// The edit that pastes the instrumented code into the student's files.
    pub fn as_proposal(&self, snapshot: &SourceSnapshot) -> Option<PatchProposal> {
        let edits: Vec<_> = self
            .rendered
            .iter()
            .filter_map(|f| snapshot.content(&f.file).map(|orig| edits_between(&f.file, orig, &f.text)))
            .flatten()
            .collect();
        (!edits.is_empty()).then(|| PatchProposal {
            edits,
            rationale: format!("insert {} diagnostic print(s)", self.insertions.len()),
            origin: PatchOrigin::Provider,
        })
    }

    pub fn instrumented_snapshot(&self, snapshot: &SourceSnapshot) -> SourceSnapshot {
        let mut out = snapshot.clone();
        for f in &self.rendered {
            if let Some(entry) = out.files.get_mut(&f.file) {
                entry.content = f.text.clone();
                entry.hash = crate::runner::content_hash(&f.text);
            }
        }
        out
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !super::pyline::KEYWORDS.contains(&s)
}

/// Where to put a print observing `line`: after assignments and inside
/// loop bodies, before returns and `if` tests.
fn placement(lines: &[&str], line: u32) -> Option<(u32, String)> {
    let text = *lines.get(line as usize - 1)?;
    let kw = first_keyword(text);
    let before = matches!(
        kw.as_deref(),
        Some("return" | "break" | "continue" | "raise" | "if" | "assert")
    );
    if before {
        return Some((line - 1, indentation(text).to_string()));
    }
    if is_block_header(text) {
        let body_indent = lines[line as usize..]
            .iter()
            .find(|l| !l.trim().is_empty())
            .map(|l| indentation(l).to_string())
            .filter(|i| i.len() > indentation(text).len())
            .unwrap_or_else(|| format!("{}    ", indentation(text)));
        return Some((line, body_indent));
    }
    Some((line, indentation(text).to_string()))
}

fn render(snapshot: &SourceSnapshot, insertions: &[PrintInsertion]) -> Vec<InstrumentedFile> {
    let mut by_file: BTreeMap<&str, Vec<&PrintInsertion>> = BTreeMap::new();
    for ins in insertions {
        by_file.entry(ins.file.as_str()).or_default().push(ins);
    }
    let mut out = Vec::new();
    for (file, ins) in by_file {
        let Some(content) = snapshot.content(file) else { continue };
        let lines: Vec<&str> = content.lines().collect();
        let mut text: Vec<String> = Vec::with_capacity(lines.len() + ins.len() + 1);
        let mut inserted = Vec::new();
        if !lines.iter().any(|l| l.trim() == PREAMBLE) {
            text.push(PREAMBLE.to_string());
            inserted.push(1);
        }
        let emit = |after: u32, text: &mut Vec<String>, inserted: &mut Vec<u32>| {
            for i in ins.iter().filter(|i| i.after_line == after) {
                text.push(i.statement());
                inserted.push(text.len() as u32);
            }
        };
        emit(0, &mut text, &mut inserted);
        for (idx, l) in lines.iter().enumerate() {
            text.push(l.to_string());
            emit(idx as u32 + 1, &mut text, &mut inserted);
        }
        let mut joined = text.join("\n");
        if content.ends_with('\n') || content.is_empty() {
            joined.push('\n');
        }
        out.push(InstrumentedFile {
            file: file.to_string(),
            text: joined,
            inserted_lines: inserted,
        });
    }
    out
}

/// Builds a plan from explicit suggestions. Suggestions for unknown files,
/// lines or non-identifiers are dropped, duplicates collapse, and at most
/// three survive.
pub fn plan_from_suggestions(snapshot: &SourceSnapshot, suggestions: &[PrintSuggestion], fallback: bool) -> PrintPlan {
    let mut insertions: Vec<PrintInsertion> = Vec::new();
    let mut seen = HashSet::new();
    for s in suggestions {
        if insertions.len() == MAX_PRINTS {
            break;
        }
        if !is_identifier(&s.variable) || !seen.insert((s.file.clone(), s.variable.clone())) {
            continue;
        }
        let Some(content) = snapshot.content(&s.file) else { continue };
        let lines: Vec<&str> = content.lines().collect();
        if s.line == 0 || s.line as usize > lines.len() {
            continue;
        }
        let Some((after_line, indent)) = placement(&lines, s.line) else { continue };
        insertions.push(PrintInsertion {
            id: insertions.len() + 1,
            file: s.file.clone(),
            after_line,
            variable: s.variable.clone(),
            reason: s.reason.clone(),
            indent,
        });
    }
    PrintPlan {
        rendered: render(snapshot, &insertions),
        insertions,
        snapshot_hash: snapshot.combined_hash(),
        fallback,
    }
}

pub fn suggest_prints(
    spectrum: &CoverageSpectrum,
    snapshot: &SourceSnapshot,
    provider: &dyn SuggestionProvider,
    formula: Formula,
) -> Result<PrintPlan, AssistError> {
    if spectrum.failing_count() == 0 {
        return Err(AssistError::NoFailingTests);
    }
    let ranking = rank(spectrum, formula)?;
    let top = top_k(&ranking, DEFAULT_TOP_K);
    let counts = derive_counts(spectrum)?;
    let ctx = build_context(spectrum, snapshot, &top, &counts, None);

    let allowed: HashSet<(String, u32)> = top.iter().map(|e| (e.location.file.clone(), e.location.line)).collect();
    let provided = provider.propose_prints(&ctx).ok().map(|s| {
        s.into_iter()
            .filter(|p| allowed.contains(&(p.file.clone(), p.line)))
            .collect::<Vec<_>>()
    });
    match provided {
        Some(s) if !s.is_empty() => Ok(plan_from_suggestions(snapshot, &s, false)),
        _ => {
            let s = RuleProvider.propose_prints(&ctx).unwrap_or_default();
            Ok(plan_from_suggestions(snapshot, &s, true))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticLine {
    pub insertion: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestDebug {
    pub test_id: String,
    pub outcome: Outcome,
    pub lines: Vec<DiagnosticLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebugOutput {
    pub tests: Vec<TestDebug>,
    /// Diagnostics printed outside any announced test.
    pub unattributed: Vec<DiagnosticLine>,
    pub report: TestReport,
}

impl DebugOutput {
    pub fn outcomes(&self) -> BTreeMap<&str, Outcome> {
        self.tests.iter().map(|t| (t.test_id.as_str(), t.outcome)).collect()
    }

    pub fn diagnostic_count(&self) -> usize {
        self.unattributed.len() + self.tests.iter().map(|t| t.lines.len()).sum::<usize>()
    }
}

fn parse_diagnostic(line: &str) -> Option<DiagnosticLine> {
    let start = line.find("[codehinter#")?;
    let rest = &line[start + "[codehinter#".len()..];
    let close = rest.find(']')?;
    let insertion = rest[..close].parse().ok()?;
    Some(DiagnosticLine {
        insertion,
        text: rest[close + 1..].trim().to_string(),
    })
}

/// Groups the debug stream into per-test diagnostics.
pub fn parse_debug_stream(stderr: &str) -> (BTreeMap<String, Vec<DiagnosticLine>>, Vec<DiagnosticLine>) {
    let mut per_test: BTreeMap<String, Vec<DiagnosticLine>> = BTreeMap::new();
    let mut unattributed = Vec::new();
    let mut current: Option<String> = None;
    for line in stderr.lines() {
        if let Some(id) = line.strip_prefix(TEST_MARKER) {
            current = Some(id.trim().to_string());
            per_test.entry(id.trim().to_string()).or_default();
            continue;
        }
        if let Some(d) = parse_diagnostic(line) {
            match &current {
                Some(id) => per_test.entry(id.clone()).or_default().push(d),
                None => unattributed.push(d),
            }
        }
    }
    (per_test, unattributed)
}

/// Runs the instrumented sources on a shadow copy. Student files are never
/// touched.
pub fn run_instrumented(plan: &PrintPlan, config: &ProjectConfig) -> Result<DebugOutput, AssistError> {
    let current = snapshot_source(config)?;
    if current.combined_hash() != plan.snapshot_hash {
        return Err(AssistError::SnapshotDrift);
    }
    let shadow = ShadowProject::create(config)?;
    shadow.write_snapshot(&plan.instrumented_snapshot(&current))?;
    let run = run_adapter(shadow.config())?;
    let (mut per_test, unattributed) = parse_debug_stream(&run.stderr);
    let spectrum = run.trace.spectrum;
    let tests = spectrum
        .records
        .iter()
        .map(|r| TestDebug {
            test_id: r.test_id.clone(),
            outcome: r.outcome,
            lines: per_test.remove(&r.test_id).unwrap_or_default(),
        })
        .collect();
    Ok(DebugOutput {
        tests,
        unattributed,
        report: summarize(&spectrum),
    })
}
