//! Command implementations behind the `tabletask` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod live;
pub mod policy;
pub mod run;
pub mod serve;

pub use error::{CliError, Result};
