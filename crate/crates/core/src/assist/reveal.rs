//! Reveal Solution: the reference solution as a proposal against the
//! student's current code.

use super::AssistError;
use crate::patch::{edits_between, Edit, PatchOrigin, PatchProposal};
use crate::runner::{ExerciseSpec, SourceSnapshot};

/// The reference solution replaces the first subject file. When the
/// difference spreads over more regions than the exercise's bug budget the
/// edits are fused into a single block.
pub fn reveal_solution(exercise: &ExerciseSpec, snapshot: &SourceSnapshot) -> Result<PatchProposal, AssistError> {
    let reference = exercise
        .reference_solution
        .as_deref()
        .ok_or(AssistError::NoReferenceSolution)?;
    let (file, entry) = snapshot
        .files
        .iter()
        .next()
        .ok_or_else(|| AssistError::UnknownFile(String::new()))?;
    let mut edits = edits_between(file, &entry.content, reference);
    if edits.is_empty() {
        return Err(AssistError::NoOpReveal);
    }
    if edits.len() > exercise.max_buggy_lines.max(1) {
        edits = vec![fuse(file, &entry.content, reference, &edits)];
    }
    Ok(PatchProposal {
        edits,
        rationale: "reference solution".to_string(),
        origin: PatchOrigin::Solution,
    })
}

fn fuse(file: &str, old: &str, new: &str, edits: &[Edit]) -> Edit {
    let old_lines: Vec<&str> = old.lines().collect();
    let new_lines: Vec<&str> = new.lines().collect();
    let first = edits[0].line as usize;
    let last = edits
        .iter()
        .map(|e| e.line as usize + e.old_text.split('\n').count() - 1)
        .max()
        .unwrap_or(first);
    // Lines after `last` are unchanged, so they line up from the end.
    let suffix = old_lines.len() - last;
    let new_end = new_lines.len() - suffix;
    Edit {
        file: file.to_string(),
        line: first as u32,
        old_text: old_lines[first - 1..last].join("\n"),
        new_text: new_lines[first - 1..new_end].join("\n"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUGGY: &str = "def f(xs):\n    t = 1\n    for x in xs:\n        t = x\n    return t\n";
    const FIXED: &str = "def f(xs):\n    t = 0\n    for x in xs:\n        t += x\n    return t\n";

    fn exercise(max: usize) -> ExerciseSpec {
        ExerciseSpec {
            statement: "sum".into(),
            reference_solution: Some(FIXED.into()),
            max_buggy_lines: max,
        }
    }

    #[test]
    fn applies_to_reference() {
        let snap = SourceSnapshot::from_contents([("sol.py", BUGGY)]);
        for max in [1, 2] {
            let p = reveal_solution(&exercise(max), &snap).unwrap();
            assert!(p.edits.len() <= max);
            assert_eq!(p.origin, PatchOrigin::Solution);
            let applied = p.apply(&snap).unwrap();
            assert_eq!(applied.snapshot.content("sol.py"), Some(FIXED));
        }
    }

    #[test]
    fn errors() {
        let snap = SourceSnapshot::from_contents([("sol.py", FIXED)]);
        assert!(matches!(reveal_solution(&exercise(2), &snap), Err(AssistError::NoOpReveal)));
        assert!(matches!(
            reveal_solution(&ExerciseSpec::new("x"), &snap),
            Err(AssistError::NoReferenceSolution)
        ));
    }
}
