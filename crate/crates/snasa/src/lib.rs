//! File formats, run configuration and the `snasa` command line around
//! [`snasa_core`].

pub mod cli;
pub mod config;
mod error;
pub mod formats;

pub use error::{Error, Result};
