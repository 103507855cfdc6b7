//! Runs the core operations for a session and records each one.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    ChatPayload, EventKind, EventPayload, LocatePayload, PatchPayload, RunPayload, Session, SessionError,
    SessionState, VisualizerPayload,
};
use crate::assist::quiz::DEFAULT_MAX_CANDIDATES;
use crate::assist::{
    answer_quiz, build_context, locate_and_explain, make_quiz, pseudocode, reveal_solution, run_instrumented,
    suggest_prints, visualizer_url, AssistError, DebugOutput, LocatedLine, PrintPlan, Pseudocode, QuizAnswer,
    QuizCard, SuggestionProvider,
};
use crate::patch::PatchProposal;
use crate::runner::{run_end_to_end, snapshot_source, SourceSnapshot};
use crate::spectrum::{derive_counts, rank, top_k, Formula, DEFAULT_TOP_K};
use crate::trace::{CoverageSpectrum, TestReport};

/// How a patch request names its proposal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchSource {
    /// `quiz-N`, `prints` or `solution`.
    Id(String),
    Inline(PatchProposal),
}

pub struct SessionDriver {
    pub session: Session,
    provider: Arc<dyn SuggestionProvider>,
    pub formula: Formula,
    pub top: usize,
    pub max_candidates: usize,
}

impl SessionDriver {
    pub fn new(session: Session, provider: Arc<dyn SuggestionProvider>) -> Self {
        SessionDriver {
            session,
            provider,
            formula: Formula::default(),
            top: DEFAULT_TOP_K,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }

    pub fn state(&self) -> &SessionState {
        self.session.state()
    }

    fn spectrum(&self) -> CoverageSpectrum {
        self.state().spectrum.clone().unwrap_or_default()
    }

    /// The current sources, provided they are what the last run saw.
    fn fresh_snapshot(&self) -> Result<SourceSnapshot, SessionError> {
        let snapshot = snapshot_source(&self.session.config)?;
        if self.state().snapshot_hash.as_deref() != Some(snapshot.combined_hash().as_str()) {
            return Err(AssistError::SnapshotDrift.into());
        }
        Ok(snapshot)
    }

    pub fn run_e2e(&mut self) -> Result<TestReport, SessionError> {
        self.session.check(EventKind::RunE2e)?;
        let run = run_end_to_end(&self.session.config)?;
        let snapshot_hash = run.snapshot.combined_hash();
        let source_changed = self
            .state()
            .snapshot_hash
            .as_ref()
            .is_some_and(|h| *h != snapshot_hash);
        self.session.dispatch(EventPayload::RunE2e(RunPayload {
            report: run.report.clone(),
            spectrum: run.spectrum,
            snapshot_hash,
            source_changed,
        }))?;
        Ok(run.report)
    }

    pub fn locate(&mut self) -> Result<Vec<LocatedLine>, SessionError> {
        self.session.check(EventKind::Locate)?;
        let snapshot = self.fresh_snapshot()?;
        let lines = locate_and_explain(&self.spectrum(), &snapshot, self.provider.as_ref(), self.formula, self.top)?;
        self.session.dispatch(EventPayload::Locate(LocatePayload {
            formula: self.formula,
            lines: lines.clone(),
        }))?;
        Ok(lines)
    }

    pub fn quiz(&mut self) -> Result<QuizCard, SessionError> {
        self.session.check(EventKind::QuizIssued)?;
        let snapshot = self.fresh_snapshot()?;
        let card = make_quiz(
            &self.spectrum(),
            &snapshot,
            &self.session.config,
            self.provider.as_ref(),
            self.max_candidates,
        )?;
        self.session.dispatch(EventPayload::QuizIssued(card.clone()))?;
        Ok(card)
    }

    pub fn answer(&mut self, choice: usize) -> Result<QuizAnswer, SessionError> {
        self.session.check(EventKind::QuizAnswered)?;
        let card = self.state().active_quiz.as_ref().expect("checked above");
        let answer = answer_quiz(card, choice)?;
        self.session.dispatch(EventPayload::QuizAnswered(answer.clone()))?;
        Ok(answer)
    }

    pub fn suggest_prints(&mut self) -> Result<PrintPlan, SessionError> {
        self.session.check(EventKind::PrintsSuggested)?;
        let snapshot = self.fresh_snapshot()?;
        let plan = suggest_prints(&self.spectrum(), &snapshot, self.provider.as_ref(), self.formula)?;
        self.session.dispatch(EventPayload::PrintsSuggested(plan.clone()))?;
        Ok(plan)
    }

    pub fn run_prints(&mut self) -> Result<DebugOutput, SessionError> {
        self.session.check(EventKind::PrintsRun)?;
        let plan = self.state().active_plan.clone().expect("checked above");
        let output = run_instrumented(&plan, &self.session.config)?;
        self.session.dispatch(EventPayload::PrintsRun(output.clone()))?;
        Ok(output)
    }

    fn resolve(&self, source: &PatchSource, snapshot: &SourceSnapshot) -> Result<(String, PatchProposal), SessionError> {
        let state = self.state();
        let unknown = |id: &str| SessionError::UnknownProposal(id.to_string());
        let proposal = match source {
            PatchSource::Inline(p) => return Ok(("inline".to_string(), p.clone())),
            PatchSource::Id(id) if id == "solution" => state.revealed.clone().ok_or_else(|| unknown(id))?,
            PatchSource::Id(id) if id == "prints" => state
                .active_plan
                .as_ref()
                .and_then(|p| p.as_proposal(snapshot))
                .ok_or_else(|| unknown(id))?,
            PatchSource::Id(id) => {
                let n: usize = id
                    .strip_prefix("quiz-")
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| unknown(id))?;
                state
                    .active_quiz
                    .as_ref()
                    .and_then(|c| c.options.get(n))
                    .map(|o| o.proposal.clone())
                    .ok_or_else(|| unknown(id))?
            }
        };
        let PatchSource::Id(id) = source else { unreachable!() };
        Ok((id.clone(), proposal))
    }

    /// Applies a proposal to the student's files and returns the diff.
    pub fn apply_patch(&mut self, source: &PatchSource) -> Result<String, SessionError> {
        self.session.check(EventKind::PatchApplied)?;
        let snapshot = snapshot_source(&self.session.config)?;
        let (name, proposal) = self.resolve(source, &snapshot)?;
        let applied = proposal.apply(&snapshot)?;
        applied.snapshot.write_to(&self.session.config.root)?;
        self.session.dispatch(EventPayload::PatchApplied(PatchPayload {
            source: name,
            proposal,
            diff: applied.diff.clone(),
            snapshot_hash: applied.snapshot.combined_hash(),
        }))?;
        Ok(applied.diff)
    }

    pub fn reveal(&mut self) -> Result<PatchProposal, SessionError> {
        self.session.check(EventKind::SolutionRevealed)?;
        let exercise = self
            .session
            .config
            .exercise
            .clone()
            .ok_or(AssistError::NoReferenceSolution)?;
        let snapshot = snapshot_source(&self.session.config)?;
        let proposal = reveal_solution(&exercise, &snapshot)?;
        self.session.dispatch(EventPayload::SolutionRevealed(proposal.clone()))?;
        Ok(proposal)
    }

    pub fn pseudocode(&mut self) -> Result<Pseudocode, SessionError> {
        self.session.check(EventKind::Pseudocode)?;
        let exercise = self.session.config.exercise.clone().ok_or(AssistError::EmptyStatement)?;
        let steps = pseudocode(&exercise, self.provider.as_ref())?;
        self.session.dispatch(EventPayload::Pseudocode(steps.clone()))?;
        Ok(steps)
    }

    /// Pseudocode for the exercise without recording a helper use.
    pub fn peek_pseudocode(&self) -> Result<Pseudocode, SessionError> {
        let exercise = self.session.config.exercise.clone().ok_or(AssistError::EmptyStatement)?;
        Ok(pseudocode(&exercise, self.provider.as_ref())?)
    }

    /// Visualizer link for the current sources without recording a helper use.
    pub fn peek_visualizer(&self, file: Option<&str>) -> Result<String, SessionError> {
        let snapshot = snapshot_source(&self.session.config)?;
        Ok(visualizer_url(&snapshot, file)?)
    }

    pub fn visualizer(&mut self, file: Option<&str>) -> Result<String, SessionError> {
        self.session.check(EventKind::VisualizerOpened)?;
        let snapshot = snapshot_source(&self.session.config)?;
        let url = visualizer_url(&snapshot, file)?;
        self.session.dispatch(EventPayload::VisualizerOpened(VisualizerPayload {
            file: file.map(str::to_string),
            url: url.clone(),
        }))?;
        Ok(url)
    }

    /// Free-form question to the provider. The reply is passed through
    /// unvalidated.
    pub fn chat(&mut self, text: &str) -> Result<String, SessionError> {
        self.session.check(EventKind::Chat)?;
        let spectrum = self.spectrum();
        let snapshot = snapshot_source(&self.session.config)?;
        let top = match (spectrum.failing_count(), rank(&spectrum, self.formula)) {
            (n, Ok(r)) if n > 0 => top_k(&r, self.top),
            _ => Vec::new(),
        };
        let counts = derive_counts(&spectrum).unwrap_or_default();
        let statement = self.session.config.exercise.as_ref().map(|e| e.statement.as_str());
        let ctx = build_context(&spectrum, &snapshot, &top, &counts, statement);
        let reply = self
            .provider
            .chat(text, &ctx)
            .map_err(|e| AssistError::ProviderUnavailable(e.to_string()))?;
        self.session.dispatch(EventPayload::Chat(ChatPayload {
            text: text.to_string(),
            reply: reply.clone(),
        }))?;
        Ok(reply)
    }
}
