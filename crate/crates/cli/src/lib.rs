//! Command-line front end for `cowvad-core`: run configuration, analysis
//! subcommands and the CSV/JSON artifact formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod measurements;
pub mod output;

pub use commands::{build_table, run, Cli, Command, RunError};
pub use config::{parse_config, ConfigError, OutputFormat, RunConfig};
pub use measurements::{read_measurements, to_table};
pub use output::{write_csv, write_json, Cell, Meta, Table};
