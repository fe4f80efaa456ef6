//! Local job service and command-line front end.
//!
//! Both paths drive [`magdisplay::pipeline::Job`], so a job run through the
//! HTTP API and the same inputs run through the CLI produce identical bytes.

pub mod api;
pub mod cli;
pub mod queue;

pub use api::{router, AppState};
pub use queue::{Action, JobQueue};
