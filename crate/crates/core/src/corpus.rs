//! Seeded-bug exercises: a reference solution, buggy variants that differ
//! from it in at most two lines, and a test suite.
//!
//! Layout of one exercise directory:
//!
//! ```text
//! <id>/statement.md
//! <id>/meta.json
//! <id>/solution/<subject files>
//! <id>/buggy/<variant>/<subject files>
//! <id>/tests/test_*.py
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::patch::changed_line_count;
use crate::runner::{run_end_to_end, ExerciseSpec, ProjectConfig, RunnerError, SourceSnapshot};
use crate::spectrum::SourceLocation;
use crate::trace::{CoverageSpectrum, TestReport};

pub const MAX_BUGGY_LINES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    Layout,
    ReferenceGreen,
    BuggyRed,
    LineDiff,
    KnownLines,
    BugExecuted,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Invariant::Layout => "directory layout",
            Invariant::ReferenceGreen => "reference passes all tests",
            Invariant::BuggyRed => "buggy variant fails at least one test",
            Invariant::LineDiff => "buggy variant differs in at most two lines",
            Invariant::KnownLines => "known buggy lines are listed and valid",
            Invariant::BugExecuted => "known buggy line is executed by a failing test",
        })
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("exercise `{exercise}` violates \"{invariant}\": {detail}")]
    CorpusInvalid {
        exercise: String,
        invariant: Invariant,
        detail: String,
    },
    #[error("exercise `{exercise}`: {source}")]
    Runner {
        exercise: String,
        #[source]
        source: RunnerError,
    },
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub fn invariant(&self) -> Option<Invariant> {
        match self {
            CorpusError::CorpusInvalid { invariant, .. } => Some(*invariant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseMeta {
    pub title: String,
    pub subject_files: Vec<String>,
    /// Variant name to the lines that carry its bug.
    pub known_lines: BTreeMap<String, Vec<SourceLocation>>,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuggyVariant {
    pub name: String,
    pub snapshot: SourceSnapshot,
    pub known_lines: Vec<SourceLocation>,
}

impl BuggyVariant {
    pub fn is_single_line(&self) -> bool {
        self.known_lines.len() == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exercise {
    pub id: String,
    pub dir: PathBuf,
    pub meta: ExerciseMeta,
    pub statement: String,
    pub solution: SourceSnapshot,
    /// Test files keyed by path relative to the exercise, e.g. `tests/test_x.py`.
    pub tests: BTreeMap<String, String>,
    pub variants: Vec<BuggyVariant>,
}

/// Outcome of running one buggy variant during verification.
#[derive(Debug, Clone)]
pub struct VariantRun {
    pub variant: String,
    pub report: TestReport,
    pub spectrum: CoverageSpectrum,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn list_dir(path: &Path) -> Result<Vec<(String, PathBuf)>, CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(path).map_err(io)? {
        let entry = entry.map_err(io)?;
        out.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
    }
    out.sort();
    Ok(out)
}

impl Exercise {
    fn invalid(&self, invariant: Invariant, detail: impl Into<String>) -> CorpusError {
        invalid(&self.id, invariant, detail)
    }

    pub fn variant(&self, name: &str) -> Option<&BuggyVariant> {
        self.variants.iter().find(|v| v.name == name)
    }

    /// Reads and structurally checks one exercise without running anything.
    pub fn read(dir: &Path) -> Result<Exercise, CorpusError> {
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let layout = |detail: String| invalid(&id, Invariant::Layout, detail);
        for part in ["statement.md", "meta.json", "solution", "buggy", "tests"] {
            if !dir.join(part).exists() {
                return Err(layout(format!("missing `{part}`")));
            }
        }
        let statement = read(&dir.join("statement.md"))?;
        let meta: ExerciseMeta = serde_json::from_str(&read(&dir.join("meta.json"))?)
            .map_err(|e| layout(format!("meta.json: {e}")))?;
        if meta.subject_files.is_empty() {
            return Err(layout("meta.json lists no subject files".into()));
        }
        let load_files = |root: &Path| -> Result<SourceSnapshot, CorpusError> {
            let mut files = Vec::new();
            for f in &meta.subject_files {
                let p = root.join(f);
                if !p.is_file() {
                    return Err(layout(format!("missing `{}`", p.strip_prefix(dir).unwrap_or(&p).display())));
                }
                files.push((f.clone(), read(&p)?));
            }
            Ok(SourceSnapshot::from_contents(files))
        };
        let solution = load_files(&dir.join("solution"))?;

        let mut tests = BTreeMap::new();
        for (name, path) in list_dir(&dir.join("tests"))? {
            if name.ends_with(".py") {
                tests.insert(format!("tests/{name}"), read(&path)?);
            }
        }
        if !tests.keys().any(|t| t.starts_with("tests/test_")) {
            return Err(layout("no test_*.py files under tests/".into()));
        }

        let mut variants = Vec::new();
        for (name, path) in list_dir(&dir.join("buggy"))? {
            if !path.is_dir() {
                continue;
            }
            let snapshot = load_files(&path)?;
            let known_lines = meta.known_lines.get(&name).cloned().unwrap_or_default();
            variants.push(BuggyVariant {
                name,
                snapshot,
                known_lines,
            });
        }
        if variants.is_empty() {
            return Err(layout("no buggy variants".into()));
        }
        let exercise = Exercise {
            id,
            dir: dir.to_path_buf(),
            meta,
            statement,
            solution,
            tests,
            variants,
        };
        exercise.check_static()?;
        Ok(exercise)
    }

    fn check_static(&self) -> Result<(), CorpusError> {
        for name in self.meta.known_lines.keys() {
            if self.variant(name).is_none() {
                return Err(self.invalid(Invariant::KnownLines, format!("known_lines names unknown variant `{name}`")));
            }
        }
        for v in &self.variants {
            let mut changed = 0;
            for f in &self.meta.subject_files {
                let old = self.solution.content(f).unwrap_or_default();
                let new = v.snapshot.content(f).unwrap_or_default();
                changed += changed_line_count(old, new);
            }
            if changed == 0 || changed > MAX_BUGGY_LINES {
                return Err(self.invalid(
                    Invariant::LineDiff,
                    format!("variant `{}` changes {changed} line(s)", v.name),
                ));
            }
            if v.known_lines.is_empty() || v.known_lines.len() > MAX_BUGGY_LINES {
                return Err(self.invalid(
                    Invariant::KnownLines,
                    format!("variant `{}` lists {} known line(s)", v.name, v.known_lines.len()),
                ));
            }
            for loc in &v.known_lines {
                let lines = v.snapshot.content(&loc.file).map(|c| c.lines().count() as u32);
                if !lines.is_some_and(|n| loc.line >= 1 && loc.line <= n) {
                    return Err(self.invalid(
                        Invariant::KnownLines,
                        format!("variant `{}`: {loc} is outside the subject files", v.name),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Writes a runnable project for the reference (`None`) or a variant.
    pub fn materialize(
        &self,
        variant: Option<&str>,
        dest: &Path,
        adapter_command: &[String],
    ) -> Result<ProjectConfig, CorpusError> {
        let snapshot = match variant {
            None => &self.solution,
            Some(name) => {
                &self
                    .variant(name)
                    .ok_or_else(|| self.invalid(Invariant::Layout, format!("no variant `{name}`")))?
                    .snapshot
            }
        };
        let io = |path: &Path, source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        for (rel, text) in &self.tests {
            let p = dest.join(rel);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
            }
            std::fs::write(&p, text).map_err(|e| io(&p, e))?;
        }
        snapshot.write_to(dest).map_err(|source| CorpusError::Runner {
            exercise: self.id.clone(),
            source,
        })?;
        std::fs::write(dest.join("statement.md"), &self.statement).map_err(|e| io(dest, e))?;
        let mut config = ProjectConfig::new(dest, self.meta.subject_files.clone(), adapter_command.to_vec());
        config.exercise = Some(ExerciseSpec {
            statement: self.statement.clone(),
            reference_solution: self.solution.content(&self.meta.subject_files[0]).map(str::to_string),
            max_buggy_lines: MAX_BUGGY_LINES,
        });
        Ok(config)
    }

    fn run(&self, variant: Option<&str>, adapter_command: &[String]) -> Result<(TestReport, CoverageSpectrum), CorpusError> {
        let dir = tempfile::Builder::new()
            .prefix("codehinter-corpus-")
            .tempdir()
            .map_err(|source| CorpusError::Io {
                path: std::env::temp_dir(),
                source,
            })?;
        let config = self.materialize(variant, dir.path(), adapter_command)?;
        let e2e = run_end_to_end(&config).map_err(|source| CorpusError::Runner {
            exercise: self.id.clone(),
            source,
        })?;
        Ok((e2e.report, e2e.spectrum))
    }

    /// Runs the reference and every variant, checking the behavioural
    /// invariants. Returns the variant runs in variant order.
    pub fn verify(&self, adapter_command: &[String]) -> Result<Vec<VariantRun>, CorpusError> {
        let (report, _) = self.run(None, adapter_command)?;
        if !report.all_passed() || report.is_syntax_error() {
            let detail = match &report.syntax_error {
                Some(se) => format!("syntax error at {}:{}", se.file, se.line),
                None => format!("{} failing test(s)", report.failed + report.errored),
            };
            return Err(self.invalid(Invariant::ReferenceGreen, detail));
        }
        let mut runs = Vec::new();
        for v in &self.variants {
            let (report, spectrum) = self.run(Some(&v.name), adapter_command)?;
            if report.is_syntax_error() || report.failing.is_empty() {
                return Err(self.invalid(
                    Invariant::BuggyRed,
                    format!("variant `{}` produced no failing test", v.name),
                ));
            }
            for loc in &v.known_lines {
                let hit = spectrum
                    .records
                    .iter()
                    .any(|r| r.outcome.is_failing() && r.covered.contains(loc));
                if !hit {
                    return Err(self.invalid(
                        Invariant::BugExecuted,
                        format!("variant `{}`: no failing test executes {loc}", v.name),
                    ));
                }
            }
            runs.push(VariantRun {
                variant: v.name.clone(),
                report,
                spectrum,
            });
        }
        Ok(runs)
    }
}

fn invalid(id: &str, invariant: Invariant, detail: impl Into<String>) -> CorpusError {
    CorpusError::CorpusInvalid {
        exercise: id.to_string(),
        invariant,
        detail: detail.into(),
    }
}

/// Reads every exercise under `dir` (sorted by id) without running tests.
pub fn read_corpus(dir: &Path) -> Result<Vec<Exercise>, CorpusError> {
    let mut out = Vec::new();
    for (_, path) in list_dir(dir)? {
        if path.is_dir() {
            out.push(Exercise::read(&path)?);
        }
    }
    Ok(out)
}

/// Reads the corpus and verifies every invariant by running the tests
/// through `adapter_command`.
pub fn load_corpus(dir: &Path, adapter_command: &[String]) -> Result<Vec<Exercise>, CorpusError> {
    let exercises = read_corpus(dir)?;
    for e in &exercises {
        e.verify(adapter_command)?;
    }
    Ok(exercises)
}
