//! The helper tools offered after a failing run, plus the solution reveal.

pub mod locate;
pub mod mutate;
pub mod prints;
pub mod provider;
pub mod pseudocode;
pub mod pyline;
pub mod quiz;
pub mod reveal;
pub mod visualizer;

use std::collections::BTreeMap;

use thiserror::Error;

pub use locate::{locate_and_explain, LocatedLine};
pub use prints::{run_instrumented, suggest_prints, DebugOutput, PrintInsertion, PrintPlan};
pub use provider::{AssistContext, ChatProvider, CodeWindow, RuleProvider, SuggestionProvider};
pub use pseudocode::{pseudocode, Pseudocode, PseudoStep};
pub use quiz::{
    answer_quiz, make_quiz, validate_proposal, QuizAnswer, QuizCard, QuizOption, ValidationOutcome, ValidationResult,
};
pub use reveal::reveal_solution;
pub use visualizer::visualizer_url;

use crate::patch::PatchError;
use crate::runner::{RunnerError, SourceSnapshot};
use crate::spectrum::{ElementCounts, RankedLocation, SourceLocation, SpectrumError};
use crate::trace::{summarize, CoverageSpectrum};
use provider::CONTEXT_RADIUS;

#[derive(Debug, Error)]
pub enum AssistError {
    #[error("no failing tests; nothing to help with")]
    NoFailingTests,
    #[error(transparent)]
    Spectrum(SpectrumError),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("none of the {tried} candidate fixes makes every test pass")]
    NoValidatedFix { tried: usize },
    #[error("validation budget of {budget} runs exhausted before a fix was confirmed")]
    ValidationBudgetExceeded { budget: usize },
    #[error("found a fix but fewer than two failing alternatives to quiz on")]
    InsufficientDistractors,
    #[error("choice {choice} is out of range (0..=2)")]
    IndexOutOfRange { choice: usize },
    #[error("sources changed since this was prepared; run the tests again")]
    SnapshotDrift,
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error("source is too large for the visualizer ({len} > {limit} characters)")]
    SourceTooLarge { len: usize, limit: usize },
    #[error("`{0}` is not part of the snapshot")]
    UnknownFile(String),
    #[error("this exercise has no reference solution")]
    NoReferenceSolution,
    #[error("the code already matches the reference solution")]
    NoOpReveal,
    #[error("the exercise statement is empty")]
    EmptyStatement,
    #[error(transparent)]
    Runner(#[from] RunnerError),
}

impl AssistError {
    pub fn code(&self) -> &'static str {
        match self {
            AssistError::NoFailingTests => "no_failing_tests",
            AssistError::Spectrum(e) => e.code(),
            AssistError::ProviderUnavailable(_) => "provider_unavailable",
            AssistError::NoValidatedFix { .. } => "no_validated_fix",
            AssistError::ValidationBudgetExceeded { .. } => "validation_budget_exceeded",
            AssistError::InsufficientDistractors => "insufficient_distractors",
            AssistError::IndexOutOfRange { .. } => "index_out_of_range",
            AssistError::SnapshotDrift => "snapshot_drift",
            AssistError::Patch(e) => e.code(),
            AssistError::SourceTooLarge { .. } => "source_too_large",
            AssistError::UnknownFile(_) => "unknown_file",
            AssistError::NoReferenceSolution => "no_reference_solution",
            AssistError::NoOpReveal => "noop_reveal",
            AssistError::EmptyStatement => "empty_statement",
            AssistError::Runner(e) => e.code(),
        }
    }
}

impl From<SpectrumError> for AssistError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::NoFailingTests => AssistError::NoFailingTests,
            other => AssistError::Spectrum(other),
        }
    }
}

/// `(line, text)` pairs within `radius` of `line`.
pub fn code_window(snapshot: &SourceSnapshot, loc: &SourceLocation, radius: u32) -> Vec<(u32, String)> {
    let Some(content) = snapshot.content(&loc.file) else {
        return Vec::new();
    };
    let lo = loc.line.saturating_sub(radius).max(1);
    let hi = loc.line + radius;
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u32 + 1, l))
        .filter(|(n, _)| *n >= lo && *n <= hi)
        .map(|(n, l)| (n, l.to_string()))
        .collect()
}

/// The only information a provider ever receives.
pub fn build_context(
    spectrum: &CoverageSpectrum,
    snapshot: &SourceSnapshot,
    entries: &[RankedLocation],
    counts: &BTreeMap<SourceLocation, ElementCounts>,
    statement: Option<&str>,
) -> AssistContext {
    let report = summarize(spectrum);
    let mut locations: Vec<CodeWindow> = entries
        .iter()
        .map(|e| CodeWindow {
            location: e.location.clone(),
            score: e.score,
            counts: counts.get(&e.location).copied().unwrap_or_default(),
            lines: code_window(snapshot, &e.location, CONTEXT_RADIUS),
        })
        .collect();
    if let Some(se) = &spectrum.syntax_error {
        if let Ok(loc) = SourceLocation::new(se.file.clone(), se.line) {
            locations.push(CodeWindow {
                lines: code_window(snapshot, &loc, CONTEXT_RADIUS),
                location: loc,
                score: 0.0,
                counts: ElementCounts::default(),
            });
        }
    }
    AssistContext {
        failing: report.failing,
        locations,
        statement: statement.map(str::to_string),
        syntax_error: spectrum.syntax_error.clone(),
    }
}
