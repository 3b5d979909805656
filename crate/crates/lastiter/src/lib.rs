//! Verification oracles, configuration files, reports and command
//! implementations on top of [`lastiter_core`].

pub mod commands;
pub mod config;
mod error;
pub mod oracle;
pub mod report;

pub use error::{Error, Result};
pub use lastiter_core as core;
