//! Locate Lines With Errors: rank, keep the top lines, explain only those.

use serde::{Deserialize, Serialize};

use super::provider::{template_explanation, SuggestionProvider};
use super::{build_context, AssistError};
use crate::runner::SourceSnapshot;
use crate::spectrum::{derive_counts, rank, top_k, ElementCounts, Formula, SourceLocation};
use crate::trace::CoverageSpectrum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedLine {
    pub location: SourceLocation,
    pub score: f64,
    pub counts: ElementCounts,
    pub code: String,
    pub explanation: String,
    /// True when the explanation is the built-in template.
    pub fallback: bool,
}

pub fn locate_and_explain(
    spectrum: &CoverageSpectrum,
    snapshot: &SourceSnapshot,
    provider: &dyn SuggestionProvider,
    formula: Formula,
    k: usize,
) -> Result<Vec<LocatedLine>, AssistError> {
    if spectrum.failing_count() == 0 {
        return Err(AssistError::NoFailingTests);
    }
    let ranking = rank(spectrum, formula)?;
    let top = top_k(&ranking, k);
    let counts = derive_counts(spectrum)?;
    let ctx = build_context(spectrum, snapshot, &top, &counts, None);

    let explanations = provider.explain_locations(&ctx).unwrap_or_default();
    Ok(ctx
        .locations
        .iter()
        .map(|w| {
            // Anything the provider says about other lines is dropped.
            let provided = explanations
                .iter()
                .find(|e| e.location == w.location)
                .map(|e| {
                    let label = w.location.to_string();
                    if e.text.contains(&label) {
                        e.text.clone()
                    } else {
                        format!("{label}: {}", e.text)
                    }
                });
            LocatedLine {
                location: w.location.clone(),
                score: w.score,
                counts: w.counts,
                code: w.focus_text().unwrap_or_default().to_string(),
                fallback: provided.is_none(),
                explanation: provided.unwrap_or_else(|| template_explanation(w)),
            }
        })
        .collect())
}
