//! The End-to-End Test action: snapshot the student's sources, run the
//! configured adapter as a subprocess, and turn its trace into a report.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::spectrum::validate_relative_path;
use crate::trace::{parse_trace, summarize, CoverageSpectrum, TestReport, TraceError, TraceFile};

pub const DEFAULT_TIMEOUT_SECS: u64 = 60;
pub const TRACE_OUT: &str = "{TRACE_OUT}";
pub const PROJECT_ROOT: &str = "{PROJECT_ROOT}";

/// Directories never copied into shadow projects.
const SHADOW_SKIP: &[&str] = &[".git", "target", "__pycache__", ".codehinter", "node_modules"];

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid project config: {0}")]
    ConfigInvalid(String),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("adapter failed ({status}): {stderr}")]
    AdapterFailure { status: String, stderr: String },
    #[error("adapter exceeded the {0}s time limit")]
    Timeout(u64),
    #[error("adapter wrote an invalid trace: {0}")]
    TraceInvalid(#[from] TraceError),
}

impl RunnerError {
    pub fn code(&self) -> &'static str {
        match self {
            RunnerError::ConfigInvalid(_) => "config_invalid",
            RunnerError::Io { .. } => "io_error",
            RunnerError::AdapterFailure { .. } => "adapter_failure",
            RunnerError::Timeout(_) => "timeout",
            RunnerError::TraceInvalid(e) => e.code(),
        }
    }

    fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        RunnerError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

fn default_max_buggy_lines() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseSpec {
    pub statement: String,
    #[serde(default)]
    pub reference_solution: Option<String>,
    #[serde(default = "default_max_buggy_lines")]
    pub max_buggy_lines: usize,
}

impl ExerciseSpec {
    pub fn new(statement: impl Into<String>) -> Self {
        ExerciseSpec {
            statement: statement.into(),
            reference_solution: None,
            max_buggy_lines: default_max_buggy_lines(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub root: PathBuf,
    pub subject_files: Vec<String>,
    /// Argument vector; `{TRACE_OUT}` and `{PROJECT_ROOT}` are substituted
    /// in every argument before the adapter is spawned.
    pub adapter_command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout: u64,
    #[serde(default)]
    pub exercise: Option<ExerciseSpec>,
}

impl ProjectConfig {
    pub fn new(root: impl Into<PathBuf>, subject_files: Vec<String>, adapter_command: Vec<String>) -> Self {
        ProjectConfig {
            root: root.into(),
            subject_files,
            adapter_command,
            timeout: DEFAULT_TIMEOUT_SECS,
            exercise: None,
        }
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        if !self.root.is_dir() {
            return Err(RunnerError::ConfigInvalid(format!(
                "project root `{}` is not a directory",
                self.root.display()
            )));
        }
        if self.subject_files.is_empty() {
            return Err(RunnerError::ConfigInvalid("no subject files".into()));
        }
        for f in &self.subject_files {
            validate_relative_path(f)
                .map_err(|m| RunnerError::ConfigInvalid(format!("subject file `{f}`: {m}")))?;
        }
        if self.adapter_command.is_empty() {
            return Err(RunnerError::ConfigInvalid("empty adapter command".into()));
        }
        if self.timeout == 0 {
            return Err(RunnerError::ConfigInvalid("timeout must be positive".into()));
        }
        if let Some(ex) = &self.exercise {
            if ex.max_buggy_lines == 0 {
                return Err(RunnerError::ConfigInvalid("max_buggy_lines must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// The same project rooted somewhere else (used for shadow copies).
    pub fn rooted_at(&self, root: impl Into<PathBuf>) -> ProjectConfig {
        ProjectConfig {
            root: root.into(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub content: String,
    pub hash: String,
}

/// Contents and SHA-256 digests of every subject file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceSnapshot {
    pub files: BTreeMap<String, SnapshotFile>,
}

pub fn content_hash(content: &str) -> String {
    hex::encode(Sha256::digest(content.as_bytes()))
}

impl SourceSnapshot {
    pub fn from_contents<I, P, C>(files: I) -> Self
    where
        I: IntoIterator<Item = (P, C)>,
        P: Into<String>,
        C: Into<String>,
    {
        let files = files
            .into_iter()
            .map(|(p, c)| {
                let content = c.into();
                let hash = content_hash(&content);
                (p.into(), SnapshotFile { content, hash })
            })
            .collect();
        SourceSnapshot { files }
    }

    pub fn content(&self, file: &str) -> Option<&str> {
        self.files.get(file).map(|f| f.content.as_str())
    }

    /// Digest over all file paths and their digests.
    pub fn combined_hash(&self) -> String {
        let mut h = Sha256::new();
        for (path, f) in &self.files {
            h.update(path.as_bytes());
            h.update([0]);
            h.update(f.hash.as_bytes());
            h.update([b'\n']);
        }
        hex::encode(h.finalize())
    }

    /// Writes every file in the snapshot under `root`.
    pub fn write_to(&self, root: &Path) -> Result<(), RunnerError> {
        for (path, f) in &self.files {
            let dest = root.join(path);
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent).map_err(|e| RunnerError::io(parent, e))?;
            }
            fs::write(&dest, &f.content).map_err(|e| RunnerError::io(&dest, e))?;
        }
        Ok(())
    }
}

pub fn snapshot_source(config: &ProjectConfig) -> Result<SourceSnapshot, RunnerError> {
    let mut files = BTreeMap::new();
    for rel in &config.subject_files {
        let path = config.root.join(rel);
        let content = fs::read_to_string(&path).map_err(|e| RunnerError::Io {
            path: rel.clone(),
            source: e,
        })?;
        let hash = content_hash(&content);
        files.insert(rel.clone(), SnapshotFile { content, hash });
    }
    Ok(SourceSnapshot { files })
}

/// Raw result of one adapter invocation.
#[derive(Debug, Clone)]
pub struct AdapterRun {
    pub trace: TraceFile,
    pub stderr: String,
    pub elapsed: Duration,
}

fn substitute(arg: &str, trace_out: &Path, root: &Path) -> String {
    arg.replace(TRACE_OUT, &trace_out.display().to_string())
        .replace(PROJECT_ROOT, &root.display().to_string())
}

/// Runs the adapter against `config.root` and parses the trace it writes.
pub fn run_adapter(config: &ProjectConfig) -> Result<AdapterRun, RunnerError> {
    let out_dir = tempfile::tempdir().map_err(|e| RunnerError::io("<tempdir>", e))?;
    let trace_out = out_dir.path().join("trace.json");
    let root = config.root.canonicalize().map_err(|e| RunnerError::io(&config.root, e))?;

    let argv: Vec<String> = config
        .adapter_command
        .iter()
        .map(|a| substitute(a, &trace_out, &root))
        .collect();
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| RunnerError::ConfigInvalid("empty adapter command".into()))?;

    let started = Instant::now();
    let mut child = Command::new(program)
        .args(args)
        .current_dir(&root)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| RunnerError::AdapterFailure {
            status: "spawn failed".into(),
            stderr: format!("{program}: {e}"),
        })?;

    // Drain stderr on a separate thread so a chatty adapter cannot block
    // on a full pipe while we wait.
    let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr_pipe.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    });

    let status = match child
        .wait_timeout(Duration::from_secs(config.timeout))
        .map_err(|e| RunnerError::io(program, e))?
    {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(RunnerError::Timeout(config.timeout));
        }
    };
    let stderr = reader.join().unwrap_or_default();
    let elapsed = started.elapsed();

    if !status.success() {
        return Err(RunnerError::AdapterFailure {
            status: status.to_string(),
            stderr: tail(&stderr, 2000),
        });
    }
    let bytes = match fs::read(&trace_out) {
        Ok(b) => b,
        Err(_) => {
            return Err(RunnerError::AdapterFailure {
                status: "exited 0 without writing a trace".into(),
                stderr: tail(&stderr, 2000),
            })
        }
    };
    let trace = parse_trace(&bytes)?;
    Ok(AdapterRun {
        trace,
        stderr,
        elapsed,
    })
}

fn tail(s: &str, max: usize) -> String {
    if s.len() <= max {
        return s.to_string();
    }
    let mut start = s.len() - max;
    while !s.is_char_boundary(start) {
        start += 1;
    }
    s[start..].to_string()
}

#[derive(Debug, Clone)]
pub struct EndToEnd {
    pub report: TestReport,
    pub spectrum: CoverageSpectrum,
    pub snapshot: SourceSnapshot,
}

pub fn run_end_to_end(config: &ProjectConfig) -> Result<EndToEnd, RunnerError> {
    config.validate()?;
    let snapshot = snapshot_source(config)?;
    let run = run_adapter(config)?;
    let spectrum = run.trace.spectrum;
    Ok(EndToEnd {
        report: summarize(&spectrum),
        spectrum,
        snapshot,
    })
}

/// A session-private copy of a project. Removed on drop.
#[derive(Debug)]
pub struct ShadowProject {
    dir: tempfile::TempDir,
    config: ProjectConfig,
}

impl ShadowProject {
    pub fn create(config: &ProjectConfig) -> Result<Self, RunnerError> {
        let dir = tempfile::Builder::new()
            .prefix("codehinter-shadow-")
            .tempdir()
            .map_err(|e| RunnerError::io("<tempdir>", e))?;
        copy_tree(&config.root, dir.path())?;
        let config = config.rooted_at(dir.path());
        Ok(ShadowProject { dir, config })
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.config
    }

    /// Overwrites the shadow's subject files with `snapshot`.
    pub fn write_snapshot(&self, snapshot: &SourceSnapshot) -> Result<(), RunnerError> {
        snapshot.write_to(self.dir.path())
    }
}

pub fn copy_tree(from: &Path, to: &Path) -> Result<(), RunnerError> {
    let walker = walkdir::WalkDir::new(from)
        .follow_links(false)
        .into_iter()
        .filter_entry(|e| {
            e.depth() == 0
                || !SHADOW_SKIP
                    .iter()
                    .any(|skip| e.file_name().to_str() == Some(skip))
        });
    for entry in walker {
        let entry = entry.map_err(|e| RunnerError::Io {
            path: from.display().to_string(),
            source: e.into(),
        })?;
        let rel = entry.path().strip_prefix(from).expect("walk stays under root");
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).map_err(|e| RunnerError::io(&dest, e))?;
        } else if entry.file_type().is_file() {
            fs::copy(entry.path(), &dest).map_err(|e| RunnerError::io(entry.path(), e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PASSING_TRACE: &str = r#"{"adapter":"sh","created_at":"2025-01-01T00:00:00Z","schema_version":"codehinter-trace/1","spectrum":{"records":[{"covered":[{"file":"a.py","line":1}],"message":null,"outcome":"pass","test_id":"t1"}],"subject_files":["a.py"],"syntax_error":null}}"#;

    fn project(script: &str) -> (tempfile::TempDir, ProjectConfig) {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.py"), "x = 1\n").unwrap();
        let cfg = ProjectConfig::new(
            dir.path(),
            vec!["a.py".into()],
            vec!["sh".into(), "-c".into(), script.into(), "adapter".into(), TRACE_OUT.into(), PROJECT_ROOT.into()],
        );
        (dir, cfg)
    }

    #[test]
    fn snapshot_hashes_are_stable_and_local() {
        let (dir, mut cfg) = project("true");
        fs::write(dir.path().join("b.py"), "y = 2\n").unwrap();
        cfg.subject_files.push("b.py".into());
        let s1 = snapshot_source(&cfg).unwrap();
        let s2 = snapshot_source(&cfg).unwrap();
        assert_eq!(s1, s2);
        fs::write(dir.path().join("b.py"), "y = 3\n").unwrap();
        let s3 = snapshot_source(&cfg).unwrap();
        let differing: Vec<_> = s1
            .files
            .iter()
            .filter(|(k, v)| s3.files[*k].hash != v.hash)
            .map(|(k, _)| k.as_str())
            .collect();
        assert_eq!(differing, ["b.py"]);
        assert_ne!(s1.combined_hash(), s3.combined_hash());
    }

    #[test]
    fn missing_subject_file_names_it() {
        let (_dir, mut cfg) = project("true");
        cfg.subject_files.push("missing.py".into());
        match snapshot_source(&cfg) {
            Err(RunnerError::Io { path, .. }) => assert_eq!(path, "missing.py"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let (_dir, cfg) = project("true");
        cfg.validate().unwrap();
        let mut bad = cfg.clone();
        bad.root = "/definitely/not/here".into();
        assert!(matches!(bad.validate(), Err(RunnerError::ConfigInvalid(_))));
        let mut bad = cfg.clone();
        bad.subject_files.clear();
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.timeout = 0;
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.exercise = Some(ExerciseSpec {
            max_buggy_lines: 0,
            ..ExerciseSpec::new("x")
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn substitutes_placeholders_and_parses_trace() {
        let script = format!("printf '%s' '{PASSING_TRACE}' > \"$1\"; test -d \"$2\"");
        let (dir, cfg) = project(&script);
        let before = snapshot_source(&cfg).unwrap();
        let e2e = run_end_to_end(&cfg).unwrap();
        assert!(e2e.report.all_passed());
        assert_eq!(e2e.report.passed, 1);
        assert_eq!(e2e.snapshot, before);
        assert_eq!(snapshot_source(&cfg).unwrap(), before);
        drop(dir);
    }

    #[test]
    fn nonzero_exit_is_adapter_failure() {
        let (_dir, cfg) = project("echo boom >&2; exit 3");
        match run_end_to_end(&cfg) {
            Err(RunnerError::AdapterFailure { stderr, .. }) => assert!(stderr.contains("boom")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_trace_is_adapter_failure() {
        let (_dir, cfg) = project("exit 0");
        assert!(matches!(
            run_end_to_end(&cfg),
            Err(RunnerError::AdapterFailure { .. })
        ));
    }

    #[test]
    fn garbage_trace_is_trace_invalid() {
        let (_dir, cfg) = project("echo '{}' > \"$1\"");
        assert!(matches!(
            run_end_to_end(&cfg),
            Err(RunnerError::TraceInvalid(_))
        ));
    }

    #[test]
    fn hung_adapter_times_out() {
        let (_dir, mut cfg) = project("sleep 30");
        cfg.timeout = 1;
        let started = Instant::now();
        assert!(matches!(run_end_to_end(&cfg), Err(RunnerError::Timeout(1))));
        assert!(started.elapsed() < Duration::from_secs(10));
    }

    #[test]
    fn shadow_copies_are_independent() {
        let (dir, cfg) = project("true");
        fs::create_dir_all(dir.path().join("tests")).unwrap();
        fs::write(dir.path().join("tests/test_a.py"), "pass\n").unwrap();
        fs::create_dir_all(dir.path().join(".git")).unwrap();
        fs::write(dir.path().join(".git/HEAD"), "ref").unwrap();

        let shadow = ShadowProject::create(&cfg).unwrap();
        assert!(shadow.root().join("tests/test_a.py").is_file());
        assert!(!shadow.root().join(".git").exists());

        let edited = SourceSnapshot::from_contents([("a.py", "x = 2\n")]);
        shadow.write_snapshot(&edited).unwrap();
        assert_eq!(snapshot_source(shadow.config()).unwrap(), edited);
        assert_eq!(fs::read_to_string(dir.path().join("a.py")).unwrap(), "x = 1\n");
    }
}
