//! Command-line front end for `platform_eq`: TOML configuration in, CSV
//! tables and SVG region plots out.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod rows;
pub mod svg;
pub mod table;

pub use commands::{run, Artifact, Command, Outcome};
pub use config::RunConfig;
pub use error::CliError;
