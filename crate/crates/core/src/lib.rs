//! Spectrum-based fault localization and debugging helpers for
//! introductory programming exercises.

pub mod assist;
pub mod corpus;
pub mod patch;
pub mod runner;
pub mod session;
pub mod spectrum;
pub mod trace;

pub use corpus::{BuggyVariant, CorpusError, Exercise, ExerciseMeta};
pub use patch::{Edit, PatchError, PatchOrigin, PatchProposal};
pub use runner::{ExerciseSpec, ProjectConfig, RunnerError, SourceSnapshot};
pub use spectrum::{ElementCounts, Formula, RankedLocation, SourceLocation, SpectrumError, SuspiciousnessRanking};
pub use trace::{CoverageSpectrum, Outcome, TestRecord, TestReport, TraceError, TraceFile};
pub use session::{EventKind, Phase, SessionDriver, SessionError, SessionEvent, SessionState, SessionStore, UsageReport};
