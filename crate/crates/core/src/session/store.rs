//! One JSON-lines event log per session, plus the config it was created with.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Utc;
use uuid::Uuid;

use super::{replay, EventKind, EventPayload, SessionError, SessionEvent, SessionState};
use crate::runner::ProjectConfig;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SessionError + '_ {
    move |source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn events_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.events.jsonl"))
    }

    pub fn config_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.config.json"))
    }

    pub fn create(&self, config: ProjectConfig) -> Result<Session, SessionError> {
        config.validate()?;
        let id = Uuid::new_v4().to_string();
        let config_path = self.config_path(&id);
        let text = serde_json::to_string_pretty(&config).expect("config serializes");
        fs::write(&config_path, text).map_err(io_err(&config_path))?;
        let events_path = self.events_path(&id);
        fs::write(&events_path, "").map_err(io_err(&events_path))?;
        Ok(Session {
            id,
            config,
            state: SessionState::new(),
            events: Vec::new(),
            log_path: events_path,
        })
    }

    fn valid_id(id: &str) -> bool {
        Uuid::parse_str(id).is_ok()
    }

    pub fn load(&self, id: &str) -> Result<Session, SessionError> {
        if !Self::valid_id(id) {
            return Err(SessionError::NotFound(id.to_string()));
        }
        let config_path = self.config_path(id);
        let text = match fs::read_to_string(&config_path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(SessionError::NotFound(id.to_string())),
            Err(e) => return Err(io_err(&config_path)(e)),
        };
        let config: ProjectConfig = serde_json::from_str(&text).map_err(|e| SessionError::CorruptLog {
            line: 0,
            reason: format!("config: {e}"),
        })?;
        let events = self.read_events(id)?;
        let state = replay(&events)?;
        Ok(Session {
            id: id.to_string(),
            config,
            state,
            events,
            log_path: self.events_path(id),
        })
    }

    pub fn read_events(&self, id: &str) -> Result<Vec<SessionEvent>, SessionError> {
        if !Self::valid_id(id) {
            return Err(SessionError::NotFound(id.to_string()));
        }
        let path = self.events_path(id);
        match fs::read_to_string(&path) {
            Ok(text) => parse_log(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(SessionError::NotFound(id.to_string())),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    /// Ids of every stored session, sorted.
    pub fn list(&self) -> Result<Vec<String>, SessionError> {
        let mut ids: Vec<String> = fs::read_dir(&self.dir)
            .map_err(io_err(&self.dir))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                e.file_name()
                    .to_str()
                    .and_then(|n| n.strip_suffix(".events.jsonl"))
                    .map(str::to_string)
            })
            .collect();
        ids.sort();
        Ok(ids)
    }
}

/// Parses a log. A final line without a newline is a write in progress and
/// is ignored, so readers always see a consistent prefix.
pub fn parse_log(text: &str) -> Result<Vec<SessionEvent>, SessionError> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SessionError::CorruptLog {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// A live session: the replayed state plus the log it came from.
#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub config: ProjectConfig,
    state: SessionState,
    events: Vec<SessionEvent>,
    log_path: PathBuf,
}

impl Session {
    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn check(&self, kind: EventKind) -> Result<(), SessionError> {
        self.state.check(kind)
    }

    /// Appends one event and advances the state. Illegal events are
    /// rejected before anything is written.
    pub fn dispatch(&mut self, payload: EventPayload) -> Result<&SessionState, SessionError> {
        self.state.check(payload.kind())?;
        let event = SessionEvent {
            seq: self.events.len() as u64 + 1,
            at: Utc::now(),
            payload,
        };
        let mut line = serde_json::to_string(&event).expect("event serializes");
        line.push('\n');
        let mut file = OpenOptions::new()
            .append(true)
            .open(&self.log_path)
            .map_err(io_err(&self.log_path))?;
        file.write_all(line.as_bytes()).map_err(io_err(&self.log_path))?;
        file.flush().map_err(io_err(&self.log_path))?;
        self.state.apply(&event);
        self.events.push(event);
        Ok(&self.state)
    }
}
