//! Command-line front end for the `ssg-core` library.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod svg;
