//! Command-line front end for the `cmtori` library.

pub mod commands;
pub mod grammar;
pub mod report;
pub mod verify;

pub use commands::{CliError, Options, Table};
pub use grammar::{parse_spec, render_spec, ParseError};
pub use report::Format;
