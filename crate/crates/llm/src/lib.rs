//! Chat-completions client with retry, rate limiting and a content-addressed
//! response cache, plus the per-instance annotation protocol and batch runner.

pub mod annotate;
pub mod cache;
pub mod client;
pub mod config;
pub mod mock;
pub mod parse;

pub use annotate::{annotate_instance, dry_run, run_batch, RunManifest, RunSpec};
pub use cache::ResponseCache;
pub use client::{ChatClient, Completion, LlmError};
pub use config::BackendConfig;
pub use parse::{parse_step_output, Parsed};
