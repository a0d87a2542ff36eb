//! Pipeline driver, result files and command line front end on top of
//! `ramify-core`.

pub mod benchmark;
pub mod config;
pub mod diff;
pub mod error;
pub mod formats;
pub mod oracle;
pub mod pipeline;

pub use error::{Error, Result};
pub use pipeline::{run_pipeline, Manifest};
