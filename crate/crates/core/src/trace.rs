//! Trace files: the wire format test-runner adapters use to report
//! per-test outcomes and line coverage.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectrum::{validate_relative_path, SourceLocation};

pub const SCHEMA_VERSION: &str = "codehinter-trace/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("unsupported trace schema `{found}` (expected `{SCHEMA_VERSION}`)")]
    SchemaMismatch { found: String },
    #[error("invalid trace at {path}: {message}")]
    ValidationError { path: String, message: String },
    #[error("cannot merge traces over different subject files")]
    SubjectMismatch,
}

impl TraceError {
    pub fn code(&self) -> &'static str {
        match self {
            TraceError::SchemaMismatch { .. } => "schema_mismatch",
            TraceError::ValidationError { .. } => "trace_invalid",
            TraceError::SubjectMismatch => "subject_mismatch",
        }
    }

    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        TraceError::ValidationError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

impl Outcome {
    /// `fail` and `error` both count as failing for localization.
    pub fn is_failing(&self) -> bool {
        !matches!(self, Outcome::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestRecord {
    pub test_id: String,
    pub outcome: Outcome,
    pub message: Option<String>,
    pub covered: Vec<SourceLocation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntaxErrorInfo {
    pub file: String,
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSpectrum {
    pub subject_files: Vec<String>,
    pub syntax_error: Option<SyntaxErrorInfo>,
    pub records: Vec<TestRecord>,
}

impl CoverageSpectrum {
    pub fn failing_count(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_failing()).count()
    }

    pub fn record(&self, test_id: &str) -> Option<&TestRecord> {
        self.records.iter().find(|r| r.test_id == test_id)
    }

    /// Checks every invariant, reporting the JSON path of the first
    /// offending field relative to the spectrum object.
    pub fn validate(&self) -> Result<(), TraceError> {
        self.validate_at("spectrum")
    }

    fn validate_at(&self, base: &str) -> Result<(), TraceError> {
        let mut subjects = HashSet::new();
        for (i, f) in self.subject_files.iter().enumerate() {
            validate_relative_path(f)
                .map_err(|m| TraceError::at(format!("{base}.subject_files[{i}]"), m))?;
            if !subjects.insert(f.as_str()) {
                return Err(TraceError::at(
                    format!("{base}.subject_files[{i}]"),
                    format!("duplicate subject file `{f}`"),
                ));
            }
        }
        if let Some(se) = &self.syntax_error {
            validate_relative_path(&se.file)
                .map_err(|m| TraceError::at(format!("{base}.syntax_error.file"), m))?;
            if se.line == 0 {
                return Err(TraceError::at(
                    format!("{base}.syntax_error.line"),
                    "line numbers start at 1",
                ));
            }
            if !self.records.is_empty() {
                return Err(TraceError::at(
                    format!("{base}.records"),
                    "records must be empty when a syntax error is reported",
                ));
            }
        }
        let mut ids = HashSet::new();
        for (i, r) in self.records.iter().enumerate() {
            let path = format!("{base}.records[{i}]");
            if r.test_id.is_empty() {
                return Err(TraceError::at(format!("{path}.test_id"), "empty test id"));
            }
            if !ids.insert(r.test_id.as_str()) {
                return Err(TraceError::at(
                    format!("{path}.test_id"),
                    format!("duplicate test id `{}`", r.test_id),
                ));
            }
            for (j, loc) in r.covered.iter().enumerate() {
                let lpath = format!("{path}.covered[{j}]");
                loc.validate()
                    .map_err(|e| TraceError::at(lpath.clone(), e.to_string()))?;
                if !subjects.contains(loc.file.as_str()) {
                    return Err(TraceError::at(
                        format!("{lpath}.file"),
                        format!("`{}` is not a subject file", loc.file),
                    ));
                }
                if j > 0 && r.covered[j - 1] >= *loc {
                    return Err(TraceError::at(
                        lpath,
                        "covered locations must be sorted and unique",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub schema_version: String,
    /// RFC 3339 timestamp, kept verbatim so canonical traces round-trip.
    pub created_at: String,
    pub adapter: String,
    pub spectrum: CoverageSpectrum,
}

impl TraceFile {
    pub fn new(adapter: impl Into<String>, spectrum: CoverageSpectrum) -> Self {
        TraceFile {
            schema_version: SCHEMA_VERSION.to_string(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            adapter: adapter.into(),
            spectrum,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(TraceError::SchemaMismatch {
                found: self.schema_version.clone(),
            });
        }
        chrono::DateTime::parse_from_rfc3339(&self.created_at)
            .map_err(|e| TraceError::at("created_at", format!("not RFC 3339: {e}")))?;
        self.spectrum.validate()
    }

    /// Canonical serialization: compact JSON with lexicographically sorted
    /// keys. Record order is preserved.
    pub fn to_canonical_json(&self) -> String {
        // serde_json's default map is ordered, so a round trip through
        // `Value` sorts every object's keys.
        let value = serde_json::to_value(self).expect("trace is always serializable");
        serde_json::to_string(&value).expect("value is always serializable")
    }
}

pub fn parse_trace(bytes: &[u8]) -> Result<TraceFile, TraceError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| TraceError::at("$", format!("not UTF-8: {e}")))?;

    // Check the version before the full schema so a future format with
    // different fields still reports the right error.
    let raw: serde_json::Value =
        serde_json::from_str(text).map_err(|e| TraceError::at("$", e.to_string()))?;
    match raw.get("schema_version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(serde_json::Value::String(v)) => {
            return Err(TraceError::SchemaMismatch { found: v.clone() })
        }
        Some(_) => return Err(TraceError::at("schema_version", "expected a string")),
        None => return Err(TraceError::at("schema_version", "missing field")),
    }

    let trace: TraceFile = serde_path_to_error::deserialize(raw).map_err(|e| {
        let path = e.path().to_string();
        TraceError::at(if path == "." { "$".into() } else { path }, e.inner().to_string())
    })?;
    trace.validate()?;
    Ok(trace)
}

/// Right-biased merge: records of `b` replace same-id records of `a` in
/// place; new ids from `b` are appended in `b`'s order. A syntax error in
/// `b` means nothing ran, so the result is `b`'s spectrum.
pub fn merge_traces(a: &TraceFile, b: &TraceFile) -> Result<TraceFile, TraceError> {
    let subjects_a: BTreeSet<&String> = a.spectrum.subject_files.iter().collect();
    let subjects_b: BTreeSet<&String> = b.spectrum.subject_files.iter().collect();
    if subjects_a != subjects_b {
        return Err(TraceError::SubjectMismatch);
    }
    let mut merged = b.clone();
    merged.spectrum.subject_files = a.spectrum.subject_files.clone();
    if b.spectrum.syntax_error.is_some() {
        merged.spectrum.records.clear();
        return Ok(merged);
    }

    let replacement: HashMap<&str, &TestRecord> = b
        .spectrum
        .records
        .iter()
        .map(|r| (r.test_id.as_str(), r))
        .collect();
    let mut records: Vec<TestRecord> = a
        .spectrum
        .records
        .iter()
        .map(|r| (*replacement.get(r.test_id.as_str()).unwrap_or(&r)).clone())
        .collect();
    let existing: HashSet<&str> = a.spectrum.records.iter().map(|r| r.test_id.as_str()).collect();
    records.extend(
        b.spectrum
            .records
            .iter()
            .filter(|r| !existing.contains(r.test_id.as_str()))
            .cloned(),
    );
    merged.spectrum.records = records;
    Ok(merged)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailingTest {
    pub test_id: String,
    pub outcome: Outcome,
    pub message: Option<String>,
}

/// What the student sees after an end-to-end run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestReport {
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
    pub failing: Vec<FailingTest>,
    pub syntax_error: Option<SyntaxErrorInfo>,
}

impl TestReport {
    pub fn is_syntax_error(&self) -> bool {
        self.syntax_error.is_some()
    }

    pub fn all_passed(&self) -> bool {
        self.syntax_error.is_none() && self.failed == 0 && self.errored == 0
    }

    pub fn total(&self) -> usize {
        self.passed + self.failed + self.errored
    }
}

pub fn summarize(spectrum: &CoverageSpectrum) -> TestReport {
    let mut report = TestReport {
        passed: 0,
        failed: 0,
        errored: 0,
        failing: Vec::new(),
        syntax_error: spectrum.syntax_error.clone(),
    };
    for r in &spectrum.records {
        match r.outcome {
            Outcome::Pass => report.passed += 1,
            Outcome::Fail => report.failed += 1,
            Outcome::Error => report.errored += 1,
        }
        if r.outcome.is_failing() {
            report.failing.push(FailingTest {
                test_id: r.test_id.clone(),
                outcome: r.outcome,
                message: r.message.clone(),
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"adapter":"fixture","created_at":"2025-01-01T00:00:00Z","schema_version":"codehinter-trace/1","spectrum":{"records":[{"covered":[{"file":"a.py","line":1}],"message":null,"outcome":"pass","test_id":"t1"}],"subject_files":["a.py"],"syntax_error":null}}"#;

    fn record(id: &str, outcome: Outcome) -> TestRecord {
        TestRecord {
            test_id: id.into(),
            outcome,
            message: None,
            covered: vec![],
        }
    }

    fn trace(records: Vec<TestRecord>) -> TraceFile {
        TraceFile {
            schema_version: SCHEMA_VERSION.into(),
            created_at: "2025-01-01T00:00:00Z".into(),
            adapter: "fixture".into(),
            spectrum: CoverageSpectrum {
                subject_files: vec!["a.py".into()],
                syntax_error: None,
                records,
            },
        }
    }

    #[test]
    fn parses_minimal_trace() {
        let t = parse_trace(MINIMAL.as_bytes()).unwrap();
        assert_eq!(t.spectrum.records.len(), 1);
        assert_eq!(t.to_canonical_json(), MINIMAL);
    }

    #[test]
    fn rejects_other_schema_versions() {
        let text = MINIMAL.replace("codehinter-trace/1", "codehinter-trace/2");
        assert_eq!(
            parse_trace(text.as_bytes()),
            Err(TraceError::SchemaMismatch {
                found: "codehinter-trace/2".into()
            })
        );
    }

    #[test]
    fn syntax_error_with_records_is_invalid() {
        let text = MINIMAL.replace(
            r#""syntax_error":null"#,
            r#""syntax_error":{"file":"a.py","line":2,"message":"unexpected EOF"}"#,
        );
        match parse_trace(text.as_bytes()) {
            Err(TraceError::ValidationError { path, .. }) => assert_eq!(path, "spectrum.records"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_report_their_path() {
        let text = MINIMAL.replace(r#""outcome":"pass""#, r#""outcome":"pass","extra":1"#);
        match parse_trace(text.as_bytes()) {
            Err(TraceError::ValidationError { path, message }) => {
                assert_eq!(path, "spectrum.records[0].extra");
                assert!(message.contains("extra"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = MINIMAL.replace(r#""outcome":"pass""#, r#""outcome":"skipped""#);
        assert!(matches!(
            parse_trace(text.as_bytes()),
            Err(TraceError::ValidationError { path, .. }) if path == "spectrum.records[0].outcome"
        ));
    }

    #[test]
    fn rejects_invariant_violations() {
        let cases = [
            (
                MINIMAL.replace(r#""file":"a.py","line":1"#, r#""file":"b.py","line":1"#),
                "spectrum.records[0].covered[0].file",
            ),
            (
                MINIMAL.replace(
                    r#"[{"file":"a.py","line":1}]"#,
                    r#"[{"file":"a.py","line":2},{"file":"a.py","line":1}]"#,
                ),
                "spectrum.records[0].covered[1]",
            ),
            (
                MINIMAL.replace(r#""test_id":"t1""#, r#""test_id":"""#),
                "spectrum.records[0].test_id",
            ),
            (
                MINIMAL.replace("2025-01-01T00:00:00Z", "yesterday"),
                "created_at",
            ),
        ];
        for (text, want) in cases {
            match parse_trace(text.as_bytes()) {
                Err(TraceError::ValidationError { path, .. }) => assert_eq!(path, want),
                other => panic!("{want}: unexpected {other:?}"),
            }
        }
        assert!(parse_trace(b"\xff\xfe").is_err());
        assert!(parse_trace(b"[]").is_err());
    }

    #[test]
    fn duplicate_test_ids_rejected() {
        let t = trace(vec![record("t", Outcome::Pass), record("t", Outcome::Fail)]);
        assert!(matches!(
            t.validate(),
            Err(TraceError::ValidationError { path, .. }) if path == "spectrum.records[1].test_id"
        ));
    }

    #[test]
    fn merge_replaces_and_appends() {
        let a = trace(vec![record("t1", Outcome::Fail)]);
        let b = trace(vec![record("t1", Outcome::Pass)]);
        let m = merge_traces(&a, &b).unwrap();
        assert_eq!(m.spectrum.records, vec![record("t1", Outcome::Pass)]);

        let c = trace(vec![record("t2", Outcome::Fail)]);
        let m = merge_traces(&a, &c).unwrap();
        let ids: Vec<_> = m.spectrum.records.iter().map(|r| r.test_id.as_str()).collect();
        assert_eq!(ids, ["t1", "t2"]);
    }

    #[test]
    fn merge_rejects_subject_mismatch() {
        let a = trace(vec![]);
        let mut b = trace(vec![]);
        b.spectrum.subject_files = vec!["b.py".into()];
        assert_eq!(merge_traces(&a, &b), Err(TraceError::SubjectMismatch));
    }

    #[test]
    fn merge_with_syntax_error_keeps_nothing_ran() {
        let a = trace(vec![record("t1", Outcome::Pass)]);
        let mut b = trace(vec![]);
        b.spectrum.syntax_error = Some(SyntaxErrorInfo {
            file: "a.py".into(),
            line: 3,
            message: "invalid syntax".into(),
        });
        let m = merge_traces(&a, &b).unwrap();
        assert!(m.spectrum.records.is_empty());
        m.validate().unwrap();
    }

    #[test]
    fn summarize_counts() {
        let mut recs: Vec<_> = (0..3).map(|i| record(&format!("p{i}"), Outcome::Pass)).collect();
        recs.push(TestRecord {
            message: Some("expected 3, got 4".into()),
            ..record("f1", Outcome::Fail)
        });
        recs.push(record("e1", Outcome::Error));
        let r = summarize(&trace(recs).spectrum);
        assert_eq!((r.passed, r.failed, r.errored), (3, 1, 1));
        assert_eq!(r.failing.len(), 2);
        assert_eq!(r.failing[0].message.as_deref(), Some("expected 3, got 4"));
        assert!(!r.all_passed());

        let green = summarize(&trace(vec![record("p", Outcome::Pass)]).spectrum);
        assert!(green.failing.is_empty());
        assert!(green.all_passed());
    }

    #[test]
    fn summarize_syntax_branch() {
        let mut t = trace(vec![]);
        t.spectrum.syntax_error = Some(SyntaxErrorInfo {
            file: "a.py".into(),
            line: 1,
            message: "'(' was never closed".into(),
        });
        let r = summarize(&t.spectrum);
        assert!(r.is_syntax_error());
        assert_eq!(r.total(), 0);
        assert!(!r.all_passed());
    }
}
