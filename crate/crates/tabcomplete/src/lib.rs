//! File formats, configuration and the command-line pipeline around
//! `tabcomplete-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod pipeline;

pub use error::{Error, Result};
