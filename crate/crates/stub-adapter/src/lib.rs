//! A self-contained test-runner adapter for a teaching subset of Python.
//!
//! Subject files and `tests/test_*.py` modules are parsed and evaluated by a
//! small tree-walking interpreter that records which subject lines each
//! test executes. The result is a trace file any other adapter could have
//! produced. Constructs outside the subset (classes, `with`, generators,
//! decorators) are reported as syntax errors.

mod ast;
mod builtins;
mod interp;
mod lexer;
mod parser;
mod value;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use codehinter_core::spectrum::SourceLocation;
use codehinter_core::trace::{CoverageSpectrum, Outcome, SyntaxErrorInfo, TestRecord, TraceFile};
use thiserror::Error;

pub use interp::{DEFAULT_MAX_DEPTH, DEFAULT_STEP_LIMIT};

pub const ADAPTER_NAME: &str = concat!("codehinter-stub-adapter/", env!("CARGO_PKG_VERSION"));

/// Marker written to the debug stream before each test starts.
pub const TEST_MARKER: &str = "[codehinter:test] ";

const MAX_MESSAGE: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no test files found under {0}")]
    NoTests(PathBuf),
    #[error("interpreter thread panicked")]
    Panicked,
}

#[derive(Debug, Clone)]
pub struct AdapterOptions {
    pub root: PathBuf,
    /// Subject files relative to `root`; discovered when `None`.
    pub subjects: Option<Vec<String>>,
    pub step_limit: u64,
}

impl AdapterOptions {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        AdapterOptions {
            root: root.into(),
            subjects: None,
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdapterOutput {
    pub trace: TraceFile,
    /// Everything the program wrote to stderr, with test markers.
    pub debug: String,
    pub stdout: String,
}

/// Checks a source text against the supported subset.
pub fn check_syntax(source: &str) -> Result<(), SyntaxError> {
    parser::parse_module(source).map(|_| ())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AdapterError + '_ {
    move |source| AdapterError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Root-level `*.py` files other than tests, `conftest.py` and `setup.py`.
pub fn discover_subjects(root: &Path) -> Result<Vec<String>, AdapterError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".py")
            && !name.starts_with("test_")
            && !matches!(name.as_str(), "conftest.py" | "setup.py")
            && entry.file_type().map_err(io_err(root))?.is_file()
        {
            out.push(name);
        }
    }
    out.sort();
    Ok(out)
}

fn discover_tests(root: &Path) -> Result<Vec<String>, AdapterError> {
    let mut out = Vec::new();
    for (dir, prefix) in [(root.join("tests"), "tests/"), (root.to_path_buf(), "")] {
        if !dir.is_dir() {
            continue;
        }
        let mut names = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(io_err(&dir))? {
            let name = entry.map_err(io_err(&dir))?.file_name().to_string_lossy().into_owned();
            if name.starts_with("test_") && name.ends_with(".py") {
                names.push(format!("{prefix}{name}"));
            }
        }
        names.sort();
        out.extend(names);
    }
    Ok(out)
}

fn truncate(mut s: String) -> String {
    if s.chars().count() > MAX_MESSAGE {
        s = s.chars().take(MAX_MESSAGE).collect::<String>() + "...";
    }
    s
}

fn describe(err: &interp::PyErr) -> String {
    let text = if &*err.kind == "AssertionError" {
        format!("{}\n({}:{})", err.headline(), err.file, err.line)
    } else {
        format!("{} ({}:{})", err.headline(), err.file, err.line)
    };
    truncate(text)
}

/// Runs every discovered test and builds the trace.
pub fn run_project(opts: &AdapterOptions) -> Result<AdapterOutput, AdapterError> {
    let opts = opts.clone();
    let handle = std::thread::Builder::new()
        .name("stub-adapter".into())
        .stack_size(512 << 20)
        .spawn(move || run_inner(&opts))
        .map_err(|source| AdapterError::Io {
            path: PathBuf::from("<thread>"),
            source,
        })?;
    handle.join().map_err(|_| AdapterError::Panicked)?
}

fn run_inner(opts: &AdapterOptions) -> Result<AdapterOutput, AdapterError> {
    let root = &opts.root;
    let subjects = match &opts.subjects {
        Some(s) => s.clone(),
        None => discover_subjects(root)?,
    };
    let done = |spectrum: CoverageSpectrum, debug: String, stdout: String| AdapterOutput {
        trace: TraceFile::new(ADAPTER_NAME, spectrum),
        debug,
        stdout,
    };
    for file in &subjects {
        let path = root.join(file);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        if let Err(e) = parser::parse_module(&text) {
            let spectrum = CoverageSpectrum {
                subject_files: subjects.clone(),
                syntax_error: Some(SyntaxErrorInfo {
                    file: file.clone(),
                    line: e.line.max(1),
                    message: e.message,
                }),
                records: Vec::new(),
            };
            return Ok(done(spectrum, String::new(), String::new()));
        }
    }
    let test_files = discover_tests(root)?;
    if test_files.is_empty() {
        return Err(AdapterError::NoTests(root.clone()));
    }

    let mut it = interp::Interpreter::new(root.clone());
    it.step_limit = opts.step_limit;
    it.subjects = subjects.iter().map(|s| Rc::from(s.as_str())).collect();
    let mut records = Vec::new();
    for file in &test_files {
        let module_name = file.trim_end_matches(".py").replace('/', ".");
        it.steps = 0;
        let module = match it.load_file(file, &module_name) {
            Ok(m) => m,
            Err(interp::Flow::Raise(e)) => {
                records.push(TestRecord {
                    test_id: format!("{file}::<collection>"),
                    outcome: Outcome::Error,
                    message: Some(describe(&e)),
                    covered: Vec::new(),
                });
                continue;
            }
            Err(_) => unreachable!("load_file maps control flow to errors"),
        };
        let body = it.module_body(file).unwrap_or_default();
        let mut seen = BTreeSet::new();
        for stmt in body.iter() {
            let ast::StmtKind::Def(def) = &stmt.kind else { continue };
            if !def.name.starts_with("test") || !seen.insert(def.name.clone()) {
                continue;
            }
            let Some(func) = module.globals.borrow().get(&def.name).cloned() else { continue };
            let test_id = format!("{file}::{}", def.name);
            records.push(run_test(&mut it, &test_id, func));
        }
    }
    let spectrum = CoverageSpectrum {
        subject_files: subjects,
        syntax_error: None,
        records,
    };
    Ok(done(spectrum, std::mem::take(&mut it.stderr), std::mem::take(&mut it.stdout)))
}

fn run_test(it: &mut interp::Interpreter, test_id: &str, func: value::Value) -> TestRecord {
    it.stderr.push_str(TEST_MARKER);
    it.stderr.push_str(test_id);
    it.stderr.push('\n');
    it.steps = 0;
    it.covered.clear();
    it.tracing = true;
    let result = match &func {
        value::Value::Func(f) if f.defaults.iter().any(Option::is_none) => {
            let name = f.def.params[f.defaults.iter().position(Option::is_none).unwrap()].name.clone();
            Err(interp::Flow::Raise(interp::PyErr {
                kind: "FixtureError".into(),
                message: format!("fixture '{name}' not found"),
                file: f.file.clone(),
                line: f.def.line,
                fatal: false,
            }))
        }
        _ => it.call_function_value(&func, Vec::new()),
    };
    it.tracing = false;
    let covered = std::mem::take(&mut it.covered)
        .into_iter()
        .map(|(file, line)| SourceLocation {
            file: file.to_string(),
            line,
        })
        .collect();
    let (outcome, message) = match result {
        Ok(_) => (Outcome::Pass, None),
        Err(interp::Flow::Raise(e)) if &*e.kind == "AssertionError" => (Outcome::Fail, Some(describe(&e))),
        Err(interp::Flow::Raise(e)) => (Outcome::Error, Some(describe(&e))),
        Err(_) => (Outcome::Error, Some("SyntaxError: control flow escaped the test".into())),
    };
    TestRecord {
        test_id: test_id.to_string(),
        outcome,
        message,
        covered,
    }
}

#[cfg(test)]
mod tests;
