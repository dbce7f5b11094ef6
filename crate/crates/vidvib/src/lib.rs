//! Frame IO, file formats and the command-line front end of vidvib.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod io;
