//! Session registry behind the HTTP endpoints.
//!
//! Each session has one driver behind its own mutex, so mutations of a
//! session queue up while different sessions proceed independently.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use codehinter_core::assist::{ChatProvider, RuleProvider, SuggestionProvider};
use codehinter_core::spectrum::DEFAULT_TOP_K;
use codehinter_core::{Formula, ProjectConfig, SessionDriver, SessionError, SessionStore};

use crate::api::ApiError;

/// The live provider when `CODEHINTER_LLM_URL` is set, rules otherwise.
pub fn default_provider() -> Arc<dyn SuggestionProvider> {
    match ChatProvider::from_env() {
        Some(p) => Arc::new(p),
        None => Arc::new(RuleProvider::new()),
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

pub struct Service {
    store: SessionStore,
    provider: Arc<dyn SuggestionProvider>,
    pub formula: Formula,
    pub top: usize,
    live: Mutex<HashMap<String, Arc<Mutex<SessionDriver>>>>,
}

impl Service {
    pub fn new(store: SessionStore, provider: Arc<dyn SuggestionProvider>) -> Self {
        Service {
            store,
            provider,
            formula: Formula::default(),
            top: DEFAULT_TOP_K,
            live: Mutex::new(HashMap::new()),
        }
    }

    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        Ok(Self::new(SessionStore::open(data_dir)?, default_provider()))
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn driver_for(&self, session: codehinter_core::session::Session) -> SessionDriver {
        let mut driver = SessionDriver::new(session, self.provider.clone());
        driver.formula = self.formula;
        driver.top = self.top;
        driver
    }

    pub fn create(&self, config: ProjectConfig) -> Result<String, ApiError> {
        let session = self.store.create(config)?;
        let id = session.id.clone();
        let driver = self.driver_for(session);
        lock(&self.live).insert(id.clone(), Arc::new(Mutex::new(driver)));
        Ok(id)
    }

    /// The driver for `id`, loading (and replaying) it on first use.
    pub fn driver(&self, id: &str) -> Result<Arc<Mutex<SessionDriver>>, ApiError> {
        if let Some(d) = lock(&self.live).get(id) {
            return Ok(d.clone());
        }
        let session = self.store.load(id)?;
        let driver = Arc::new(Mutex::new(self.driver_for(session)));
        Ok(lock(&self.live).entry(id.to_string()).or_insert(driver).clone())
    }

    /// Runs `f` with exclusive access to the session.
    pub fn with<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut SessionDriver) -> Result<T, SessionError>,
    ) -> Result<T, ApiError> {
        let driver = self.driver(id)?;
        let mut guard = lock(&driver);
        Ok(f(&mut guard)?)
    }
}
