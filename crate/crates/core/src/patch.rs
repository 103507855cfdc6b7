//! Line-granular patch proposals with exact old-text matching.
//!
//! An [`Edit`] replaces the block of lines starting at `line` whose text is
//! exactly `old_text` with the lines of `new_text`. Both texts hold one or
//! more lines joined by `\n`; inserting a line is expressed by repeating an
//! anchor line in `new_text`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use similar::{Algorithm, DiffOp, TextDiff};
use thiserror::Error;

use crate::runner::SourceSnapshot;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatchError {
    #[error("proposal has no edits")]
    EmptyProposal,
    #[error("`{file}` is not part of the snapshot")]
    UnknownFile { file: String },
    #[error("stale proposal at {file}:{line}: expected `{expected}`, found `{found}`")]
    StaleProposal {
        file: String,
        line: u32,
        expected: String,
        found: String,
    },
    #[error("edits overlap at {file}:{line}")]
    OverlappingEdits { file: String, line: u32 },
}

impl PatchError {
    pub fn code(&self) -> &'static str {
        match self {
            PatchError::EmptyProposal => "empty_proposal",
            PatchError::UnknownFile { .. } => "unknown_file",
            PatchError::StaleProposal { .. } => "stale_proposal",
            PatchError::OverlappingEdits { .. } => "overlapping_edits",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchOrigin {
    Provider,
    Mutation,
    Solution,
    /// Written by hand and submitted inline.
    Student,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edit {
    pub file: String,
    pub line: u32,
    pub old_text: String,
    pub new_text: String,
}

impl Edit {
    pub fn replace_line(file: impl Into<String>, line: u32, old: impl Into<String>, new: impl Into<String>) -> Self {
        Edit {
            file: file.into(),
            line,
            old_text: old.into(),
            new_text: new.into(),
        }
    }

    fn old_len(&self) -> usize {
        self.old_text.split('\n').count()
    }

    fn new_len(&self) -> usize {
        self.new_text.split('\n').count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchProposal {
    pub edits: Vec<Edit>,
    pub rationale: String,
    pub origin: PatchOrigin,
}

/// A file split into lines, remembering whether it ended with a newline.
struct Lines {
    lines: Vec<String>,
    trailing_newline: bool,
}

impl Lines {
    fn parse(content: &str) -> Self {
        let trailing_newline = content.ends_with('\n');
        let body = content.strip_suffix('\n').unwrap_or(content);
        let lines = if content.is_empty() {
            Vec::new()
        } else {
            body.split('\n').map(str::to_string).collect()
        };
        Lines {
            lines,
            trailing_newline,
        }
    }

    fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        if self.trailing_newline && !self.lines.is_empty() {
            out.push('\n');
        }
        out
    }
}

/// Result of applying a proposal to a snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedPatch {
    pub snapshot: SourceSnapshot,
    pub diff: String,
}

impl PatchProposal {
    pub fn files(&self) -> Vec<&str> {
        let mut files: Vec<&str> = self.edits.iter().map(|e| e.file.as_str()).collect();
        files.sort_unstable();
        files.dedup();
        files
    }

    fn edits_by_file(&self) -> BTreeMap<&str, Vec<&Edit>> {
        let mut by_file: BTreeMap<&str, Vec<&Edit>> = BTreeMap::new();
        for e in &self.edits {
            by_file.entry(e.file.as_str()).or_default().push(e);
        }
        for edits in by_file.values_mut() {
            edits.sort_by_key(|e| e.line);
        }
        by_file
    }

    /// Verifies that every edit matches `snapshot` without applying anything.
    pub fn check(&self, snapshot: &SourceSnapshot) -> Result<(), PatchError> {
        self.apply_contents(snapshot).map(|_| ())
    }

    fn apply_contents(&self, snapshot: &SourceSnapshot) -> Result<SourceSnapshot, PatchError> {
        if self.edits.is_empty() {
            return Err(PatchError::EmptyProposal);
        }
        let mut out = snapshot.clone();
        for (file, edits) in self.edits_by_file() {
            let content = snapshot.content(file).ok_or_else(|| PatchError::UnknownFile {
                file: file.to_string(),
            })?;
            let mut lines = Lines::parse(content);
            let mut prev_end = 0usize;
            for e in &edits {
                let start = e.line as usize;
                if start == 0 || start <= prev_end {
                    return Err(PatchError::OverlappingEdits {
                        file: file.to_string(),
                        line: e.line,
                    });
                }
                prev_end = start + e.old_len() - 1;
            }
            // Bottom-up so earlier line numbers stay valid.
            for e in edits.iter().rev() {
                let start = e.line as usize - 1;
                let end = start + e.old_len();
                let found = lines.lines.get(start..end.min(lines.lines.len())).map(|s| s.join("\n"));
                if end > lines.lines.len() || found.as_deref() != Some(e.old_text.as_str()) {
                    return Err(PatchError::StaleProposal {
                        file: file.to_string(),
                        line: e.line,
                        expected: e.old_text.clone(),
                        found: found.unwrap_or_default(),
                    });
                }
                lines
                    .lines
                    .splice(start..end, e.new_text.split('\n').map(str::to_string));
            }
            let rendered = lines.render();
            let entry = out.files.get_mut(file).expect("file checked above");
            entry.hash = crate::runner::content_hash(&rendered);
            entry.content = rendered;
        }
        Ok(out)
    }

    /// Applies every edit and renders a unified diff of the change.
    pub fn apply(&self, snapshot: &SourceSnapshot) -> Result<AppliedPatch, PatchError> {
        let patched = self.apply_contents(snapshot)?;
        let diff = unified_diff(snapshot, &patched);
        Ok(AppliedPatch {
            snapshot: patched,
            diff,
        })
    }

    /// The proposal that undoes this one on the patched snapshot.
    pub fn invert(&self) -> PatchProposal {
        let mut edits = Vec::with_capacity(self.edits.len());
        for (_, file_edits) in self.edits_by_file() {
            let mut shift: i64 = 0;
            for e in file_edits {
                edits.push(Edit {
                    file: e.file.clone(),
                    line: (i64::from(e.line) + shift) as u32,
                    old_text: e.new_text.clone(),
                    new_text: e.old_text.clone(),
                });
                shift += e.new_len() as i64 - e.old_len() as i64;
            }
        }
        PatchProposal {
            edits,
            rationale: format!("revert: {}", self.rationale),
            origin: self.origin,
        }
    }
}

/// Unified diff between two snapshots, one section per changed file.
pub fn unified_diff(before: &SourceSnapshot, after: &SourceSnapshot) -> String {
    let mut out = String::new();
    for (path, old) in &before.files {
        let new = match after.files.get(path) {
            Some(f) => f,
            None => continue,
        };
        if old.hash == new.hash {
            continue;
        }
        let diff = TextDiff::from_lines(old.content.as_str(), new.content.as_str());
        out.push_str(
            &diff
                .unified_diff()
                .context_radius(3)
                .header(&format!("a/{path}"), &format!("b/{path}"))
                .to_string(),
        );
    }
    out
}

/// One changed region between two versions of a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangedRegion {
    /// 1-based first line in the old text.
    pub old_start: usize,
    pub old_lines: Vec<String>,
    pub new_lines: Vec<String>,
}

/// Line-level changes from `old` to `new` (Myers diff).
pub fn changed_regions(old: &str, new: &str) -> Vec<ChangedRegion> {
    let old_lines = Lines::parse(old).lines;
    let new_lines = Lines::parse(new).lines;
    let ops = similar::capture_diff_slices(Algorithm::Myers, &old_lines, &new_lines);
    let mut regions: Vec<ChangedRegion> = Vec::new();
    let mut pending: Option<ChangedRegion> = None;
    for op in ops {
        match op {
            DiffOp::Equal { .. } => {
                if let Some(r) = pending.take() {
                    regions.push(r);
                }
            }
            DiffOp::Delete { old_index, old_len, .. } => {
                let r = pending.get_or_insert_with(|| ChangedRegion {
                    old_start: old_index + 1,
                    old_lines: vec![],
                    new_lines: vec![],
                });
                r.old_lines.extend_from_slice(&old_lines[old_index..old_index + old_len]);
            }
            DiffOp::Insert { old_index, new_index, new_len } => {
                let r = pending.get_or_insert_with(|| ChangedRegion {
                    old_start: old_index + 1,
                    old_lines: vec![],
                    new_lines: vec![],
                });
                r.new_lines.extend_from_slice(&new_lines[new_index..new_index + new_len]);
            }
            DiffOp::Replace { old_index, old_len, new_index, new_len } => {
                let r = pending.get_or_insert_with(|| ChangedRegion {
                    old_start: old_index + 1,
                    old_lines: vec![],
                    new_lines: vec![],
                });
                r.old_lines.extend_from_slice(&old_lines[old_index..old_index + old_len]);
                r.new_lines.extend_from_slice(&new_lines[new_index..new_index + new_len]);
            }
        }
    }
    if let Some(r) = pending {
        regions.push(r);
    }
    regions
}

/// Number of lines that differ: each region counts the larger of its
/// removed and added line counts.
pub fn changed_line_count(old: &str, new: &str) -> usize {
    changed_regions(old, new)
        .iter()
        .map(|r| r.old_lines.len().max(r.new_lines.len()))
        .sum()
}

/// Edits that turn `old` into `new` for one file. Pure insertions and
/// deletions are anchored on a neighbouring unchanged line so every edit
/// carries at least one line of old text.
pub fn edits_between(file: &str, old: &str, new: &str) -> Vec<Edit> {
    let old_all = Lines::parse(old).lines;
    let mut edits = Vec::new();
    for r in changed_regions(old, new) {
        let mut start = r.old_start;
        let mut old_block = r.old_lines.clone();
        let mut new_block = r.new_lines.clone();
        if old_block.is_empty() || new_block.is_empty() {
            if start > 1 {
                let anchor = old_all[start - 2].clone();
                start -= 1;
                old_block.insert(0, anchor.clone());
                new_block.insert(0, anchor);
            } else if let Some(anchor) = old_all.get(start - 1 + old_block.len()).cloned() {
                old_block.push(anchor.clone());
                new_block.push(anchor);
            } else {
                // Whole file replaced by nothing, or nothing by something:
                // no anchor exists; fall back to an empty-line edit.
                old_block.push(String::new());
                new_block.push(String::new());
            }
        }
        edits.push(Edit {
            file: file.to_string(),
            line: start as u32,
            old_text: old_block.join("\n"),
            new_text: new_block.join("\n"),
        });
    }
    merge_adjacent(edits)
}

/// Anchoring can make neighbouring edits overlap; fuse those.
fn merge_adjacent(edits: Vec<Edit>) -> Vec<Edit> {
    let mut out: Vec<Edit> = Vec::new();
    for e in edits {
        if let Some(last) = out.last_mut() {
            let last_end = last.line as usize + last.old_len() - 1;
            if e.line as usize <= last_end {
                let overlap = last_end - e.line as usize + 1;
                let old_rest: Vec<&str> = e.old_text.split('\n').skip(overlap).collect();
                let new_rest: Vec<&str> = e.new_text.split('\n').skip(overlap).collect();
                if !old_rest.is_empty() {
                    last.old_text = format!("{}\n{}", last.old_text, old_rest.join("\n"));
                }
                if !new_rest.is_empty() {
                    last.new_text = format!("{}\n{}", last.new_text, new_rest.join("\n"));
                }
                continue;
            }
        }
        out.push(e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "def f(n):\n    total = 0\n    for i in range(n):\n        total += i\n    return total\n";

    fn snap() -> SourceSnapshot {
        SourceSnapshot::from_contents([("sol.py", SRC)])
    }

    fn single(line: u32, old: &str, new: &str) -> PatchProposal {
        PatchProposal {
            edits: vec![Edit::replace_line("sol.py", line, old, new)],
            rationale: "test".into(),
            origin: PatchOrigin::Mutation,
        }
    }

    #[test]
    fn single_line_edit_renders_one_hunk() {
        let p = single(3, "    for i in range(n):", "    for i in range(n + 1):");
        let applied = p.apply(&snap()).unwrap();
        assert!(applied.snapshot.content("sol.py").unwrap().contains("range(n + 1)"));
        let diff = applied.diff;
        assert_eq!(diff.matches("@@ ").count(), 1, "{diff}");
        let minus: Vec<_> = diff.lines().filter(|l| l.starts_with('-') && !l.starts_with("---")).collect();
        let plus: Vec<_> = diff.lines().filter(|l| l.starts_with('+') && !l.starts_with("+++")).collect();
        assert_eq!(minus, ["-    for i in range(n):"]);
        assert_eq!(plus, ["+    for i in range(n + 1):"]);
        assert!(diff.starts_with("--- a/sol.py\n+++ b/sol.py\n"));
    }

    #[test]
    fn apply_then_invert_restores_hashes() {
        let p = PatchProposal {
            edits: vec![
                Edit::replace_line("sol.py", 2, "    total = 0", "    total = 0\n    print(total)"),
                Edit::replace_line("sol.py", 4, "        total += i", "        total += i + 1"),
            ],
            rationale: "two edits".into(),
            origin: PatchOrigin::Provider,
        };
        let applied = p.apply(&snap()).unwrap();
        let back = p.invert().apply(&applied.snapshot).unwrap();
        assert_eq!(back.snapshot, snap());
    }

    #[test]
    fn stale_old_text_rejected() {
        let p = single(2, "    total = 1", "    total = 2");
        assert!(matches!(p.apply(&snap()), Err(PatchError::StaleProposal { line: 2, .. })));
        let p = single(99, "x", "y");
        assert!(matches!(p.apply(&snap()), Err(PatchError::StaleProposal { .. })));
    }

    #[test]
    fn structural_errors() {
        let empty = PatchProposal {
            edits: vec![],
            rationale: String::new(),
            origin: PatchOrigin::Solution,
        };
        assert_eq!(empty.apply(&snap()), Err(PatchError::EmptyProposal));

        let mut p = single(2, "    total = 0", "    total = 1");
        p.edits[0].file = "other.py".into();
        assert!(matches!(p.apply(&snap()), Err(PatchError::UnknownFile { .. })));

        let p = PatchProposal {
            edits: vec![
                Edit::replace_line("sol.py", 2, "    total = 0\n    for i in range(n):", "x\ny"),
                Edit::replace_line("sol.py", 3, "    for i in range(n):", "z"),
            ],
            rationale: String::new(),
            origin: PatchOrigin::Provider,
        };
        assert!(matches!(p.apply(&snap()), Err(PatchError::OverlappingEdits { .. })));
    }

    #[test]
    fn preserves_missing_trailing_newline() {
        let s = SourceSnapshot::from_contents([("sol.py", "a\nb")]);
        let p = single(2, "b", "c");
        assert_eq!(p.apply(&s).unwrap().snapshot.content("sol.py"), Some("a\nc"));
    }

    #[test]
    fn line_diff_counts() {
        let buggy = SRC.replace("range(n)", "range(n - 1)");
        assert_eq!(changed_line_count(SRC, &buggy), 1);
        assert_eq!(changed_line_count(SRC, SRC), 0);
        let two = buggy.replace("total = 0", "total = 1");
        assert_eq!(changed_line_count(SRC, &two), 2);
        let inserted = SRC.replace("    return", "    pass\n    return");
        assert_eq!(changed_line_count(SRC, &inserted), 1);
    }

    #[test]
    fn edits_between_round_trip() {
        let variants = [
            SRC.replace("range(n)", "range(n - 1)"),
            SRC.replace("    return", "    pass\n    return"),
            SRC.replace("    total = 0\n", ""),
            SRC.replace("def f(n):\n", ""),
            format!("# header\n{SRC}"),
            SRC.replace("total = 0", "total = 1").replace("return total", "return -total"),
        ];
        for new in variants {
            let p = PatchProposal {
                edits: edits_between("sol.py", &new, SRC),
                rationale: String::new(),
                origin: PatchOrigin::Solution,
            };
            let from = SourceSnapshot::from_contents([("sol.py", new.as_str())]);
            let applied = p.apply(&from).unwrap();
            assert_eq!(applied.snapshot.content("sol.py"), Some(SRC), "variant:\n{new}");
        }
    }
}
