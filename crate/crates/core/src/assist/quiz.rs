//! Provide Hint and Quiz: three candidate fixes, exactly one of which makes
//! every test pass when actually applied and re-run.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::provider::{FixSuggestion, RuleProvider, SuggestionProvider};
use super::{build_context, AssistError};
use crate::patch::{Edit, PatchOrigin, PatchProposal};
use crate::runner::{run_adapter, ProjectConfig, RunnerError, ShadowProject, SourceSnapshot};
use crate::spectrum::{derive_counts, rank, Formula};
use crate::trace::{summarize, CoverageSpectrum, Outcome, TestReport};

pub const DEFAULT_MAX_CANDIDATES: usize = 60;
/// Localized lines whose mutations are offered to the validator.
const QUIZ_LOCATIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationOutcome {
    AllPass,
    StillFailing,
    NewFailures,
    SyntaxError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub applied: bool,
    pub outcome: ValidationOutcome,
    pub failing_after: Vec<String>,
}

impl ValidationResult {
    pub fn is_all_pass(&self) -> bool {
        self.outcome == ValidationOutcome::AllPass
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizOption {
    pub proposal: PatchProposal,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizCard {
    pub question: String,
    pub options: Vec<QuizOption>,
    pub correct_index: usize,
    pub validation: Vec<ValidationResult>,
    /// Combined hash of the sources the card was validated against.
    pub snapshot_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizAnswer {
    pub choice: usize,
    pub is_correct: bool,
    pub explanation: String,
}

pub fn answer_quiz(card: &QuizCard, choice: usize) -> Result<QuizAnswer, AssistError> {
    let option = card
        .options
        .get(choice)
        .ok_or(AssistError::IndexOutOfRange { choice })?;
    Ok(QuizAnswer {
        choice,
        is_correct: choice == card.correct_index,
        explanation: option.explanation.clone(),
    })
}

/// Applies proposals to a private copy of the project, re-runs the adapter
/// and restores the copy afterwards.
pub struct Validator {
    shadow: ShadowProject,
    snapshot: SourceSnapshot,
    baseline_passing: HashSet<String>,
}

impl Validator {
    pub fn new(config: &ProjectConfig, snapshot: &SourceSnapshot, baseline: &CoverageSpectrum) -> Result<Self, AssistError> {
        let shadow = ShadowProject::create(config)?;
        shadow.write_snapshot(snapshot)?;
        Ok(Validator {
            shadow,
            snapshot: snapshot.clone(),
            baseline_passing: baseline
                .records
                .iter()
                .filter(|r| r.outcome == Outcome::Pass)
                .map(|r| r.test_id.clone())
                .collect(),
        })
    }

    pub fn validate(&self, proposal: &PatchProposal) -> Result<(ValidationResult, TestReport), AssistError> {
        let applied = match proposal.apply(&self.snapshot) {
            Ok(a) => a,
            Err(_) => {
                return Ok((
                    ValidationResult {
                        applied: false,
                        outcome: ValidationOutcome::StillFailing,
                        failing_after: Vec::new(),
                    },
                    summarize(&CoverageSpectrum::default()),
                ))
            }
        };
        self.shadow.write_snapshot(&applied.snapshot)?;
        let run = run_adapter(self.shadow.config());
        // Revert before looking at the result so the copy is always clean.
        self.shadow.write_snapshot(&self.snapshot)?;
        let report = summarize(&run?.trace.spectrum);

        let failing_after: Vec<String> = report.failing.iter().map(|f| f.test_id.clone()).collect();
        let outcome = if report.is_syntax_error() {
            ValidationOutcome::SyntaxError
        } else if report.all_passed() {
            ValidationOutcome::AllPass
        } else if failing_after.iter().any(|t| self.baseline_passing.contains(t)) {
            ValidationOutcome::NewFailures
        } else {
            ValidationOutcome::StillFailing
        };
        Ok((
            ValidationResult {
                applied: true,
                outcome,
                failing_after,
            },
            report,
        ))
    }
}

/// Validates one proposal on a fresh shadow copy.
pub fn validate_proposal(
    proposal: &PatchProposal,
    snapshot: &SourceSnapshot,
    config: &ProjectConfig,
    baseline: &CoverageSpectrum,
) -> Result<ValidationResult, AssistError> {
    Ok(Validator::new(config, snapshot, baseline)?.validate(proposal)?.0)
}

fn to_proposal(s: &FixSuggestion, origin: PatchOrigin) -> PatchProposal {
    PatchProposal {
        edits: vec![Edit {
            file: s.file.clone(),
            line: s.line,
            old_text: s.old_text.clone(),
            new_text: s.new_text.clone(),
        }],
        rationale: s.explanation.clone(),
        origin,
    }
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

fn explain(s: &FixSuggestion, v: &ValidationResult, report: &TestReport) -> String {
    match v.outcome {
        ValidationOutcome::AllPass => format!(
            "Correct! {} With this change all {} tests pass.",
            s.explanation,
            report.total()
        ),
        ValidationOutcome::SyntaxError => format!(
            "Not quite. {} With this change the program still does not parse{}.",
            s.explanation,
            report
                .syntax_error
                .as_ref()
                .map(|se| format!(" ({} line {}: {})", se.file, se.line, se.message))
                .unwrap_or_default()
        ),
        ValidationOutcome::StillFailing | ValidationOutcome::NewFailures => {
            let first = report.failing.first();
            let detail = first
                .map(|f| {
                    let msg = f.message.as_deref().map(first_line).unwrap_or("");
                    if msg.is_empty() {
                        format!("`{}` fails", f.test_id)
                    } else {
                        format!("`{}` fails: {msg}", f.test_id)
                    }
                })
                .unwrap_or_else(|| "some tests fail".into());
            let lead = if v.outcome == ValidationOutcome::NewFailures {
                "it breaks a test that passed before;"
            } else {
                "the failure is not fixed;"
            };
            format!("Not quite. {} After this change {lead} {detail}.", s.explanation)
        }
    }
}

fn question(spectrum: &CoverageSpectrum) -> String {
    if let Some(se) = &spectrum.syntax_error {
        return format!(
            "Python cannot read {} at line {} ({}). Which change fixes it?",
            se.file, se.line, se.message
        );
    }
    let report = summarize(spectrum);
    match report.failing.first() {
        Some(f) => match f.message.as_deref().map(first_line).filter(|m| !m.is_empty()) {
            Some(msg) => format!("`{}` fails ({msg}). Which change makes every test pass?", f.test_id),
            None => format!("`{}` fails. Which change makes every test pass?", f.test_id),
        },
        None => "Which change makes every test pass?".into(),
    }
}

/// Builds a quiz card. Candidates come from `provider` (falling back to the
/// mutation rules when it is unavailable) and each one is validated by
/// actually re-running the tests; at most `max_candidates` runs are spent.
pub fn make_quiz(
    spectrum: &CoverageSpectrum,
    snapshot: &SourceSnapshot,
    config: &ProjectConfig,
    provider: &dyn SuggestionProvider,
    max_candidates: usize,
) -> Result<QuizCard, AssistError> {
    let ctx = if spectrum.syntax_error.is_some() {
        build_context(spectrum, snapshot, &[], &Default::default(), None)
    } else {
        if spectrum.failing_count() == 0 {
            return Err(AssistError::NoFailingTests);
        }
        let ranking = rank(spectrum, Formula::Ochiai)?;
        let counts = derive_counts(spectrum)?;
        let top: Vec<_> = ranking.entries.iter().take(QUIZ_LOCATIONS).cloned().collect();
        build_context(spectrum, snapshot, &top, &counts, None)
    };

    // One extra candidate tells "budget exhausted" apart from "no fix exists".
    let (candidates, origin) = match provider.propose_fixes(&ctx, max_candidates + 1) {
        Ok(c) if !c.is_empty() => {
            let origin = if provider.name() == RuleProvider.name() {
                PatchOrigin::Mutation
            } else {
                PatchOrigin::Provider
            };
            (c, origin)
        }
        _ => (RuleProvider.propose_fixes(&ctx, max_candidates + 1).unwrap_or_default(), PatchOrigin::Mutation),
    };

    let validator = Validator::new(config, snapshot, spectrum)?;
    let mut correct: Option<(FixSuggestion, ValidationResult, TestReport)> = None;
    let mut distractors: Vec<(FixSuggestion, ValidationResult, TestReport)> = Vec::new();
    let mut tried = 0usize;
    let mut budget_hit = false;

    for cand in &candidates {
        if correct.is_some() && distractors.len() >= 2 {
            break;
        }
        let proposal = to_proposal(cand, origin);
        if proposal.check(snapshot).is_err() {
            continue;
        }
        if tried == max_candidates {
            budget_hit = true;
            break;
        }
        tried += 1;
        let (result, report) = match validator.validate(&proposal) {
            Ok(r) => r,
            // A candidate that hangs the suite is neither a fix nor a fair distractor.
            Err(AssistError::Runner(RunnerError::Timeout(_))) => continue,
            Err(e) => return Err(e),
        };
        if result.is_all_pass() {
            if correct.is_none() {
                correct = Some((cand.clone(), result, report));
            }
        } else {
            distractors.push((cand.clone(), result, report));
        }
    }

    let Some(correct) = correct else {
        return Err(if budget_hit {
            AssistError::ValidationBudgetExceeded { budget: max_candidates }
        } else {
            AssistError::NoValidatedFix { tried }
        });
    };
    if distractors.len() < 2 {
        return Err(if budget_hit {
            AssistError::ValidationBudgetExceeded { budget: max_candidates }
        } else {
            AssistError::InsufficientDistractors
        });
    }
    // Prefer distractors on the same line as the fix: they are the most
    // plausible alternatives.
    distractors.sort_by_key(|(s, _, _)| (s.file != correct.0.file || s.line != correct.0.line) as u8);
    distractors.truncate(2);

    let snapshot_hash = snapshot.combined_hash();
    let correct_index = usize::from_str_radix(&snapshot_hash[..2], 16).unwrap_or(0) % 3;
    let mut slots: Vec<(FixSuggestion, ValidationResult, TestReport)> = distractors;
    slots.insert(correct_index, correct);

    let (options, validation) = slots
        .into_iter()
        .map(|(s, v, report)| {
            (
                QuizOption {
                    proposal: to_proposal(&s, origin),
                    explanation: explain(&s, &v, &report),
                },
                v,
            )
        })
        .unzip();

    Ok(QuizCard {
        question: question(spectrum),
        options,
        correct_index,
        validation,
        snapshot_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card() -> QuizCard {
        let option = |text: &str| QuizOption {
            proposal: PatchProposal {
                edits: vec![Edit::replace_line("a.py", 1, "x", text)],
                rationale: String::new(),
                origin: PatchOrigin::Mutation,
            },
            explanation: format!("explains {text}"),
        };
        QuizCard {
            question: "q".into(),
            options: vec![option("a"), option("b"), option("c")],
            correct_index: 1,
            validation: vec![],
            snapshot_hash: String::new(),
        }
    }

    #[test]
    fn answers() {
        let c = card();
        let a = answer_quiz(&c, 1).unwrap();
        assert!(a.is_correct);
        assert_eq!(a.explanation, "explains b");
        let a = answer_quiz(&c, 2).unwrap();
        assert!(!a.is_correct);
        assert_eq!(a.explanation, "explains c");
        assert!(matches!(answer_quiz(&c, 5), Err(AssistError::IndexOutOfRange { choice: 5 })));
    }

    #[test]
    fn outcome_serializes_kebab_case() {
        assert_eq!(serde_json::to_string(&ValidationOutcome::AllPass).unwrap(), "\"all-pass\"");
        assert_eq!(serde_json::to_string(&ValidationOutcome::SyntaxError).unwrap(), "\"syntax-error\"");
    }
}
