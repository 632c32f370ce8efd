//! Library backing the `adkrylov` binary: the bundled matrix manifest,
//! download/cache plumbing, CSV schemas, plot-script generation, and the
//! subcommand implementations. The binary in `main.rs` only parses arguments
//! and dispatches here; tests drive these modules directly.

pub mod commands;
pub mod csvio;
pub mod fetch;
pub mod manifest;
pub mod plot;
