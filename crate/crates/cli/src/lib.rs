//! Library side of the `seqest` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod grid;
pub mod observations;

pub use args::Cli;
pub use commands::dispatch;
pub use error::{CliError, Result};
