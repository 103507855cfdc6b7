//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use codehinter_core::corpus::{read_corpus, Exercise};
use codehinter_core::ProjectConfig;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../exercises")
}

pub fn adapter() -> Vec<String> {
    vec![
        env!("CARGO_BIN_EXE_codehinter-stub-adapter").to_string(),
        "--project".into(),
        "{PROJECT_ROOT}".into(),
        "--out".into(),
        "{TRACE_OUT}".into(),
    ]
}

pub fn corpus() -> Vec<Exercise> {
    read_corpus(&corpus_dir()).unwrap()
}

pub fn exercise(id: &str) -> Exercise {
    Exercise::read(&corpus_dir().join(id)).unwrap()
}

/// A fresh copy of an exercise (reference when `variant` is `None`).
pub fn project(id: &str, variant: Option<&str>) -> (tempfile::TempDir, ProjectConfig) {
    let tmp = tempfile::tempdir().unwrap();
    let config = exercise(id).materialize(variant, tmp.path(), &adapter()).unwrap();
    (tmp, config)
}

pub fn codehinter() -> Command {
    Command::new(env!("CARGO_BIN_EXE_codehinter"))
}

/// A `codehinter serve` child on an ephemeral loopback port.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(data_dir: &Path) -> Server {
        use std::io::BufRead;
        let mut child = codehinter()
            .args(["serve", "--bind", "127.0.0.1:0", "--data-dir"])
            .arg(data_dir)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .unwrap();
        let stdout = child.stdout.take().unwrap();
        let mut line = String::new();
        std::io::BufReader::new(stdout).read_line(&mut line).unwrap();
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .to_string();
        Server { child, base }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
