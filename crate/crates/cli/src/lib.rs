//! Library side of the `seqvcg` command-line tool: scenario files, report
//! rendering, the published-table reproduction and the verification drivers.

pub mod commands;
pub mod config;
pub mod render;
pub mod tables;

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] seqvcg::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Every claim holds, every table cell matches.
    Ok = 0,
    /// A refutation or a mismatch was found.
    Refuted = 1,
    /// Bad arguments, unreadable or invalid input.
    Usage = 2,
}

/// Rendered output together with the status it implies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutput {
    pub text: String,
    pub status: Status,
}

impl CommandOutput {
    pub fn ok(text: String) -> Self {
        CommandOutput { text, status: Status::Ok }
    }
}

impl fmt::Display for CommandOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}
