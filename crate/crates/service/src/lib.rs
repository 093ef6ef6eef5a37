//! Annotation service: projects, annotators, task scheduling and vote intake
//! over a small JSON API, persisted as append-only logs.

pub mod error;
pub mod http;
pub mod store;

pub use error::{Result, ServiceError};
pub use http::{router, serve, CreateProjectRequest, ErrorBody};
pub use store::{
    Annotator, Manifest, NextTask, Progress, ProjectSettings, ProjectSummary, Receipt,
    Registration, Registry, TaskState, TaskView, VoteSubmission,
};
