//! Command-line front end and local HTTP service for debugging sessions.

pub mod api;
pub mod commands;
pub mod project;
pub mod server;
pub mod service;

pub use api::ApiError;
pub use project::{load_project, ProjectError};
pub use service::Service;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
