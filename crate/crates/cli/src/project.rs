//! Turning a project directory into a `ProjectConfig`.
//!
//! A `codehinter.json` in the directory may override any field; everything
//! it leaves out is discovered. The default adapter is the stub adapter
//! installed next to the running executable.

use std::path::{Path, PathBuf};

use codehinter_core::{ExerciseSpec, ProjectConfig};
use serde::Deserialize;
use thiserror::Error;

pub const CONFIG_FILE: &str = "codehinter.json";
pub const STATEMENT_FILE: &str = "statement.md";
/// Whitespace-separated adapter command overriding the default.
pub const ADAPTER_ENV: &str = "CODEHINTER_ADAPTER";
const STUB_ADAPTER: &str = "codehinter-stub-adapter";

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    BadConfig { path: PathBuf, message: String },
    #[error("no subject files found in {}", .0.display())]
    NoSubjects(PathBuf),
}

impl ProjectError {
    pub fn code(&self) -> &'static str {
        match self {
            ProjectError::Io { .. } => "io_error",
            ProjectError::BadConfig { .. } | ProjectError::NoSubjects(_) => "config_invalid",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectFile {
    #[serde(default)]
    subject_files: Option<Vec<String>>,
    #[serde(default)]
    adapter_command: Option<Vec<String>>,
    #[serde(default)]
    timeout: Option<u64>,
    #[serde(default)]
    exercise: Option<ExerciseSpec>,
}

/// `[<dir of current exe>/codehinter-stub-adapter, --project, {PROJECT_ROOT}, --out, {TRACE_OUT}]`,
/// unless `CODEHINTER_ADAPTER` is set.
pub fn default_adapter_command() -> Vec<String> {
    if let Ok(cmd) = std::env::var(ADAPTER_ENV) {
        let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        if !argv.is_empty() {
            return argv;
        }
    }
    let exe = std::env::current_exe()
        .ok()
        .and_then(|p| p.parent().map(|d| d.join(format!("{STUB_ADAPTER}{}", std::env::consts::EXE_SUFFIX))))
        .filter(|p| p.is_file())
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| STUB_ADAPTER.to_string());
    stub_adapter_command(exe)
}

pub fn stub_adapter_command(program: impl Into<String>) -> Vec<String> {
    vec![
        program.into(),
        "--project".into(),
        "{PROJECT_ROOT}".into(),
        "--out".into(),
        "{TRACE_OUT}".into(),
    ]
}

pub fn load_project(dir: &Path) -> Result<ProjectConfig, ProjectError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ProjectError::Io { path, source }
    };
    let root = dir.canonicalize().map_err(io(dir))?;
    let config_path = root.join(CONFIG_FILE);
    let file: ProjectFile = if config_path.is_file() {
        let text = std::fs::read_to_string(&config_path).map_err(io(&config_path))?;
        serde_json::from_str(&text).map_err(|e| ProjectError::BadConfig {
            path: config_path.clone(),
            message: e.to_string(),
        })?
    } else {
        ProjectFile::default()
    };

    let subjects = match file.subject_files {
        Some(s) => s,
        None => codehinter_stub_adapter::discover_subjects(&root).map_err(|e| ProjectError::BadConfig {
            path: root.clone(),
            message: e.to_string(),
        })?,
    };
    if subjects.is_empty() {
        return Err(ProjectError::NoSubjects(root));
    }
    let adapter = file.adapter_command.unwrap_or_else(default_adapter_command);
    let mut config = ProjectConfig::new(&root, subjects, adapter);
    if let Some(t) = file.timeout {
        config.timeout = t;
    }
    config.exercise = match file.exercise {
        Some(ex) => Some(ex),
        None => {
            let statement_path = root.join(STATEMENT_FILE);
            if statement_path.is_file() {
                let text = std::fs::read_to_string(&statement_path).map_err(io(&statement_path))?;
                Some(ExerciseSpec::new(text))
            } else {
                None
            }
        }
    };
    Ok(config)
}
