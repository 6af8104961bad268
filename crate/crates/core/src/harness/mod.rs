//! Command line, tree export and the differential checker.

mod cli;
pub mod config;
pub mod diff;
pub mod export;

pub use cli::{run_cli, run_cli_with, EXIT_CHECK_FAILED, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE};
pub use config::Config;
pub use diff::{differential_check, DiffConfig, DiffReport};
pub use export::{export_dot, export_json, parse_tree_json, TreeExport};
