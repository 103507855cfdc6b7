//! Session lifecycle: which helper may be used when, an append-only event
//! log, and usage tallies over that log.

mod driver;
mod store;

pub use driver::{PatchSource, SessionDriver};
pub use store::{parse_log, Session, SessionStore};

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assist::{AssistError, DebugOutput, LocatedLine, PrintPlan, Pseudocode, QuizAnswer, QuizCard};
use crate::patch::{PatchError, PatchProposal};
use crate::runner::RunnerError;
use crate::spectrum::Formula;
use crate::trace::{CoverageSpectrum, TestReport};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("`{event}` is not allowed in state {state}")]
    IllegalTransition { state: Phase, event: EventKind },
    #[error("the solution unlocks after at least one test run and one helper use (runs: {runs}, helper uses: {helper_uses})")]
    RevealGated { runs: usize, helper_uses: usize },
    #[error("corrupt event log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("unknown proposal `{0}`")]
    UnknownProposal(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error(transparent)]
    Assist(#[from] AssistError),
    #[error(transparent)]
    Patch(#[from] PatchError),
}

impl SessionError {
    /// Stable machine-readable name for the error case.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::IllegalTransition { .. } => "illegal_transition",
            SessionError::RevealGated { .. } => "reveal_gated",
            SessionError::CorruptLog { .. } => "corrupt_log",
            SessionError::NotFound(_) => "not_found",
            SessionError::UnknownProposal(_) => "unknown_proposal",
            SessionError::Io { .. } => "io_error",
            SessionError::Runner(e) => e.code(),
            SessionError::Assist(e) => e.code(),
            SessionError::Patch(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Created,
    SyntaxError,
    TestsFailed,
    TestsPassed,
    SolutionRevealed,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Created,
        Phase::SyntaxError,
        Phase::TestsFailed,
        Phase::TestsPassed,
        Phase::SolutionRevealed,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Created => "CREATED",
            Phase::SyntaxError => "SYNTAX_ERROR",
            Phase::TestsFailed => "TESTS_FAILED",
            Phase::TestsPassed => "TESTS_PASSED",
            Phase::SolutionRevealed => "SOLUTION_REVEALED",
        }
    }

    pub fn after_run(report: &TestReport) -> Phase {
        if report.is_syntax_error() {
            Phase::SyntaxError
        } else if report.all_passed() {
            Phase::TestsPassed
        } else {
            Phase::TestsFailed
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    RunE2e,
    Locate,
    QuizIssued,
    QuizAnswered,
    PrintsSuggested,
    PrintsRun,
    PatchApplied,
    VisualizerOpened,
    Pseudocode,
    SolutionRevealed,
    Chat,
}

impl EventKind {
    pub const ALL: [EventKind; 11] = [
        EventKind::RunE2e,
        EventKind::Locate,
        EventKind::QuizIssued,
        EventKind::QuizAnswered,
        EventKind::PrintsSuggested,
        EventKind::PrintsRun,
        EventKind::PatchApplied,
        EventKind::VisualizerOpened,
        EventKind::Pseudocode,
        EventKind::SolutionRevealed,
        EventKind::Chat,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::RunE2e => "run_e2e",
            EventKind::Locate => "locate",
            EventKind::QuizIssued => "quiz_issued",
            EventKind::QuizAnswered => "quiz_answered",
            EventKind::PrintsSuggested => "prints_suggested",
            EventKind::PrintsRun => "prints_run",
            EventKind::PatchApplied => "patch_applied",
            EventKind::VisualizerOpened => "visualizer_opened",
            EventKind::Pseudocode => "pseudocode",
            EventKind::SolutionRevealed => "solution_revealed",
            EventKind::Chat => "chat",
        }
    }

    /// Counts toward the gate on revealing the solution.
    pub fn is_helper(&self) -> bool {
        matches!(
            self,
            EventKind::Locate
                | EventKind::QuizIssued
                | EventKind::PrintsSuggested
                | EventKind::PrintsRun
                | EventKind::VisualizerOpened
                | EventKind::Pseudocode
                | EventKind::Chat
        )
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The phases in which `kind` may be dispatched, ignoring the extra
/// conditions checked by [`SessionState::check`].
pub fn allowed_in(kind: EventKind, phase: Phase) -> bool {
    use EventKind::*;
    match kind {
        RunE2e => true,
        QuizIssued => matches!(phase, Phase::TestsFailed | Phase::SyntaxError),
        PatchApplied => matches!(phase, Phase::TestsFailed | Phase::SyntaxError | Phase::SolutionRevealed),
        QuizAnswered | Locate | PrintsSuggested | PrintsRun | VisualizerOpened | Pseudocode | Chat
        | SolutionRevealed => phase == Phase::TestsFailed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPayload {
    pub report: TestReport,
    pub spectrum: CoverageSpectrum,
    pub snapshot_hash: String,
    /// The sources changed outside the tool since the last known state.
    pub source_changed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatePayload {
    pub formula: Formula,
    pub lines: Vec<LocatedLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchPayload {
    /// `quiz-N`, `prints`, `solution` or `inline`.
    pub source: String,
    pub proposal: PatchProposal,
    pub diff: String,
    /// Hash of the sources after the patch.
    pub snapshot_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualizerPayload {
    pub file: Option<String>,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatPayload {
    pub text: String,
    pub reply: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventPayload {
    RunE2e(RunPayload),
    Locate(LocatePayload),
    QuizIssued(QuizCard),
    QuizAnswered(QuizAnswer),
    PrintsSuggested(PrintPlan),
    PrintsRun(DebugOutput),
    PatchApplied(PatchPayload),
    VisualizerOpened(VisualizerPayload),
    Pseudocode(Pseudocode),
    SolutionRevealed(PatchProposal),
    Chat(ChatPayload),
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::RunE2e(_) => EventKind::RunE2e,
            EventPayload::Locate(_) => EventKind::Locate,
            EventPayload::QuizIssued(_) => EventKind::QuizIssued,
            EventPayload::QuizAnswered(_) => EventKind::QuizAnswered,
            EventPayload::PrintsSuggested(_) => EventKind::PrintsSuggested,
            EventPayload::PrintsRun(_) => EventKind::PrintsRun,
            EventPayload::PatchApplied(_) => EventKind::PatchApplied,
            EventPayload::VisualizerOpened(_) => EventKind::VisualizerOpened,
            EventPayload::Pseudocode(_) => EventKind::Pseudocode,
            EventPayload::SolutionRevealed(_) => EventKind::SolutionRevealed,
            EventPayload::Chat(_) => EventKind::Chat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub payload: EventPayload,
}

impl SessionEvent {
    pub fn kind(&self) -> EventKind {
        self.payload.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    pub report: Option<TestReport>,
    pub spectrum: Option<CoverageSpectrum>,
    pub snapshot_hash: Option<String>,
    pub active_quiz: Option<QuizCard>,
    pub quiz_answer: Option<QuizAnswer>,
    pub active_plan: Option<PrintPlan>,
    pub revealed: Option<PatchProposal>,
    pub runs: usize,
    pub helper_uses: usize,
    pub last_seq: u64,
}

impl Default for SessionState {
    fn default() -> Self {
        SessionState {
            phase: Phase::Created,
            report: None,
            spectrum: None,
            snapshot_hash: None,
            active_quiz: None,
            quiz_answer: None,
            active_plan: None,
            revealed: None,
            runs: 0,
            helper_uses: 0,
            last_seq: 0,
        }
    }
}

impl SessionState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whether `kind` may be dispatched now.
    pub fn check(&self, kind: EventKind) -> Result<(), SessionError> {
        let illegal = || SessionError::IllegalTransition {
            state: self.phase,
            event: kind,
        };
        if !allowed_in(kind, self.phase) {
            return Err(illegal());
        }
        match kind {
            EventKind::QuizAnswered if self.active_quiz.is_none() || self.quiz_answer.is_some() => Err(illegal()),
            EventKind::PrintsRun if self.active_plan.is_none() => Err(illegal()),
            EventKind::SolutionRevealed if self.runs == 0 || self.helper_uses == 0 => Err(SessionError::RevealGated {
                runs: self.runs,
                helper_uses: self.helper_uses,
            }),
            _ => Ok(()),
        }
    }

    /// Folds one event into the state. The event must already be legal.
    pub fn apply(&mut self, event: &SessionEvent) {
        if event.kind().is_helper() {
            self.helper_uses += 1;
        }
        match &event.payload {
            EventPayload::RunE2e(run) => {
                self.phase = Phase::after_run(&run.report);
                if self.snapshot_hash.as_deref() != Some(run.snapshot_hash.as_str()) {
                    self.active_quiz = None;
                    self.quiz_answer = None;
                    self.active_plan = None;
                }
                self.report = Some(run.report.clone());
                self.spectrum = Some(run.spectrum.clone());
                self.snapshot_hash = Some(run.snapshot_hash.clone());
                self.runs += 1;
            }
            EventPayload::QuizIssued(card) => {
                self.active_quiz = Some(card.clone());
                self.quiz_answer = None;
            }
            EventPayload::QuizAnswered(answer) => self.quiz_answer = Some(answer.clone()),
            EventPayload::PrintsSuggested(plan) => self.active_plan = Some(plan.clone()),
            EventPayload::PatchApplied(p) => {
                self.active_quiz = None;
                self.quiz_answer = None;
                self.active_plan = None;
                self.snapshot_hash = Some(p.snapshot_hash.clone());
            }
            EventPayload::SolutionRevealed(proposal) => {
                self.phase = Phase::SolutionRevealed;
                self.revealed = Some(proposal.clone());
            }
            EventPayload::Locate(_)
            | EventPayload::PrintsRun(_)
            | EventPayload::VisualizerOpened(_)
            | EventPayload::Pseudocode(_)
            | EventPayload::Chat(_) => {}
        }
        self.last_seq = event.seq;
    }
}

/// Rebuilds the state from a log, rejecting gaps and illegal events.
pub fn replay(events: &[SessionEvent]) -> Result<SessionState, SessionError> {
    let mut state = SessionState::new();
    for (i, event) in events.iter().enumerate() {
        let expected = i as u64 + 1;
        if event.seq != expected {
            return Err(SessionError::CorruptLog {
                line: i + 1,
                reason: format!("expected seq {expected}, found {}", event.seq),
            });
        }
        state.check(event.kind()).map_err(|e| SessionError::CorruptLog {
            line: i + 1,
            reason: e.to_string(),
        })?;
        state.apply(event);
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageReport {
    pub counts: BTreeMap<EventKind, usize>,
    pub distinct_features: usize,
    pub quiz_answered: usize,
    pub quiz_correct: usize,
    /// `None` when no quiz was answered.
    pub quiz_accuracy: Option<f64>,
}

pub fn usage_report(events: &[SessionEvent]) -> UsageReport {
    let mut counts: BTreeMap<EventKind, usize> = BTreeMap::new();
    let (mut answered, mut correct) = (0, 0);
    for e in events {
        *counts.entry(e.kind()).or_default() += 1;
        if let EventPayload::QuizAnswered(a) = &e.payload {
            answered += 1;
            correct += usize::from(a.is_correct);
        }
    }
    UsageReport {
        distinct_features: counts.len(),
        counts,
        quiz_answered: answered,
        quiz_correct: correct,
        quiz_accuracy: (answered > 0).then(|| correct as f64 / answered as f64),
    }
}
