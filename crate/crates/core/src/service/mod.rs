//! Review store, annotation log and the HTTP API over them.
//!
//! The store starts from automatic alignments and applies annotation records
//! one at a time. Every accepted record is appended to a log; replaying the
//! log over the initial snapshot reproduces the current state.

mod api;
mod export;
mod store;

pub use api::{router, serve, ApiState, API_TOKEN_VAR};
pub use export::{export_testsets, ExportFiles, ExportRecord, TestSetExport};
pub use store::{
    Action, AnnotationRecord, DialogueRecord, DialogueStatus, DialogueSummary, ReviewStatus,
    ReviewStore, StoreError, TripleState,
};
